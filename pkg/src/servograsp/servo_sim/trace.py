"""Per-iteration servo records, trace analysis, and CSV export."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import RigidTransform, VelocityScrew

CSV_HEADER = [
    "step",
    "time_s",
    "error_px",
    "vx",
    "vy",
    "vz",
    "wx",
    "wy",
    "wz",
    "pose_rms_px",
    "ms_pose",
    "ms_jacobian",
    "ms_control",
]


@dataclass(frozen=True)
class TraceRow:
    """One control cycle: image error, commanded gripper screw, and bookkeeping."""

    step: int
    time_s: float
    error_px: float
    screw: VelocityScrew          # commanded gripper-frame screw
    pose: RigidTransform          # ground-truth gripper pose (world), before the step
    pose_rms_px: float            # nan in constant-Jacobian steps (no pose stage)
    pose_iterations: int
    ms_pose: float
    ms_jacobian: float
    ms_control: float


@dataclass
class ServoTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def append(self, row: TraceRow) -> None:
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def times(self) -> np.ndarray:
        return np.array([r.time_s for r in self.rows])

    def errors(self) -> np.ndarray:
        return np.array([r.error_px for r in self.rows])

    def screws(self) -> np.ndarray:
        return np.stack([r.screw.as_vector() for r in self.rows])


@dataclass(frozen=True)
class GraspResult:
    converged: bool
    final_error_px: float
    final_alignment_error_3d: float   # meters; ground truth, simulation only
    steps: int

    def __post_init__(self):
        if self.final_alignment_error_3d < 0.0:
            raise ValueError("alignment error must be non-negative")


def write_trace_csv(trace: ServoTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in trace.rows:
            v = r.screw.as_vector()
            writer.writerow(
                [r.step, repr(r.time_s), repr(r.error_px)]
                + [repr(x) for x in v]
                + [repr(r.pose_rms_px), f"{r.ms_pose:.3f}", f"{r.ms_jacobian:.3f}", f"{r.ms_control:.3f}"]
            )


def read_trace_columns(path) -> dict[str, list[str]]:
    """Raw CSV columns keyed by header name (strings, for exact comparisons)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols: dict[str, list[str]] = {name: [] for name in header}
        for row in reader:
            for name, value in zip(header, row):
                cols[name].append(value)
    return cols


def fit_log_error(trace: ServoTrace) -> tuple[float, float]:
    """Least-squares line through (time, ln error): returns (slope per s, R^2)."""
    t = trace.times()
    e = trace.errors()
    keep = e > 0.0
    t, e = t[keep], np.log(e[keep])
    if t.size < 3:
        return float("nan"), float("nan")
    slope, intercept = np.polyfit(t, e, 1)
    fitted = slope * t + intercept
    ss_res = float(np.sum((e - fitted) ** 2))
    ss_tot = float(np.sum((e - np.mean(e)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else float("nan")
    return float(slope), r2


def time_to_half_error(trace: ServoTrace) -> float:
    """First time the image error halves, log-interpolated between cycles."""
    t = trace.times()
    e = trace.errors()
    if e.size == 0 or e[0] <= 0.0:
        return float("nan")
    target = 0.5 * e[0]
    for i in range(1, e.size):
        if e[i] <= target:
            if e[i] == e[i - 1] or e[i] <= 0.0:
                return float(t[i])
            # interpolate in log space: errors decay multiplicatively
            frac = (math.log(e[i - 1]) - math.log(target)) / (
                math.log(e[i - 1]) - math.log(e[i])
            )
            return float(t[i - 1] + frac * (t[i] - t[i - 1]))
    return float("inf")
