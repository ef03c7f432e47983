"""Scenario definition, validation, and JSON (de)serialization.

Scenario files are JSON with units spelled out in the field names (``_m``,
``_deg``, ``_px``, ``_s``). Poses accept either a human-friendly
``rotvec_deg`` or a verbatim ``rotation`` matrix; effective-scenario echoes
always write the matrix form so a rerun reproduces the exact float inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from importlib import resources

import numpy as np

from ..camera import CameraIntrinsics, CameraPose
from ..control import ControlGains
from ..errors import ScenarioError
from ..geometry import RigidTransform, compose

JACOBIAN_MODES = ("variable", "constant")
H_ROUTES = ("direct", "object_basis")


@dataclass(frozen=True, eq=False)
class Scenario:
    """Complete description of one servo or grasp-pipeline experiment."""

    name: str
    gripper_points: np.ndarray                      # (n, 3), gripper frame, meters
    runtime_rig: tuple[CameraPose, ...]             # 1 or 2 cameras driving the servo
    initial_gripper_pose: RigidTransform            # world frame
    goal_gripper_pose: RigidTransform | None = None
    grasp_pose: RigidTransform | None = None        # gripper pose in the object frame
    object_points: np.ndarray | None = None         # (m, 3), object frame, meters
    basis_indices: tuple[int, ...] | None = None    # 5 object points spanning a basis
    planning_rig: tuple[CameraPose, CameraPose] | None = None
    object_motion: RigidTransform = field(default_factory=RigidTransform.identity)
    gains: ControlGains = field(default_factory=ControlGains)
    jacobian_mode: str = "variable"
    cameras_used: int = 1
    noise_px: float = 0.0
    actuator_noise: float = 0.0
    dt: float = 0.1
    max_steps: int = 500
    convergence_eps: float = 0.1
    seed: int = 0
    sensor_rect: tuple[float, float, float, float] | None = None
    pose_init_rot_noise_rad: float = 0.0
    pose_init_trans_noise_m: float = 0.0
    h_route: str = "direct"

    def __post_init__(self):
        pts = np.asarray(self.gripper_points, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "gripper_points", pts)
        if pts.shape[0] < 3:
            raise ScenarioError("gripper_points: need at least 3 points")
        centered = pts - pts.mean(axis=0)
        if np.linalg.svd(centered, compute_uv=False)[1] < 1e-12:
            raise ScenarioError("gripper_points: points must not be collinear")
        if self.object_points is not None:
            obj = np.asarray(self.object_points, dtype=float).reshape(-1, 3)
            object.__setattr__(self, "object_points", obj)
            if obj.shape[0] < 5:
                raise ScenarioError("object_points: need at least 5 points")
        if self.basis_indices is not None:
            idx = tuple(int(i) for i in self.basis_indices)
            object.__setattr__(self, "basis_indices", idx)
            if len(idx) != 5 or len(set(idx)) != 5:
                raise ScenarioError("basis_indices: need 5 distinct indices")
            if self.object_points is None or max(idx) >= self.object_points.shape[0]:
                raise ScenarioError("basis_indices: index out of range of object_points")
        object.__setattr__(self, "runtime_rig", tuple(self.runtime_rig))
        if not 1 <= len(self.runtime_rig) <= 2:
            raise ScenarioError("runtime_rig: need 1 or 2 cameras")
        if self.planning_rig is not None:
            object.__setattr__(self, "planning_rig", tuple(self.planning_rig))
            if len(self.planning_rig) != 2:
                raise ScenarioError("planning_rig: need exactly 2 cameras")
        if self.cameras_used not in (1, 2):
            raise ScenarioError("cameras_used: must be 1 or 2")
        if self.cameras_used > len(self.runtime_rig):
            raise ScenarioError("cameras_used: exceeds the configured runtime rig")
        if self.jacobian_mode not in JACOBIAN_MODES:
            raise ScenarioError(f"jacobian_mode: must be one of {JACOBIAN_MODES}")
        if self.h_route not in H_ROUTES:
            raise ScenarioError(f"h_route: must be one of {H_ROUTES}")
        if not self.dt > 0.0:
            raise ScenarioError("dt_s: must be positive")
        if self.max_steps < 1:
            raise ScenarioError("max_steps: must be at least 1")
        if self.noise_px < 0.0 or self.actuator_noise < 0.0:
            raise ScenarioError("noise levels must be non-negative")
        if not self.convergence_eps > 0.0:
            raise ScenarioError("convergence_eps_px: must be positive")
        if self.sensor_rect is not None:
            rect = tuple(float(x) for x in self.sensor_rect)
            if len(rect) != 4 or rect[0] >= rect[2] or rect[1] >= rect[3]:
                raise ScenarioError("sensor_rect_px: expected (u_min, v_min, u_max, v_max)")
            object.__setattr__(self, "sensor_rect", rect)

    def resolved_goal_pose(self) -> RigidTransform:
        """Explicit goal pose, or the alignment pose of the displaced object."""
        if self.goal_gripper_pose is not None:
            return self.goal_gripper_pose
        if self.grasp_pose is None:
            raise ScenarioError("scenario has neither goal_gripper_pose nor grasp_pose")
        return compose(self.object_motion, self.grasp_pose)

    def active_cameras(self) -> tuple[CameraPose, ...]:
        return self.runtime_rig[: self.cameras_used]

    def supports_pipeline(self) -> bool:
        return (
            self.planning_rig is not None
            and self.object_points is not None
            and self.grasp_pose is not None
            and len(self.runtime_rig) == 2
        )


def _pose_from_dict(d, where: str) -> RigidTransform:
    try:
        t = np.asarray(d["translation_m"], dtype=float).reshape(3)
        if "rotation" in d:
            return RigidTransform(np.asarray(d["rotation"], dtype=float), t)
        rotvec = np.deg2rad(np.asarray(d["rotvec_deg"], dtype=float).reshape(3))
        return RigidTransform.from_rotvec(rotvec, t)
    except (KeyError, ValueError, TypeError) as exc:
        raise ScenarioError(f"{where}: invalid pose ({exc})") from exc


def _pose_to_dict(t: RigidTransform) -> dict:
    return {"rotation": t.rotation.tolist(), "translation_m": t.translation.tolist()}


def _camera_from_dict(d, where: str) -> CameraPose:
    try:
        intr = CameraIntrinsics(
            float(d["alpha_u_px"]), float(d["alpha_v_px"]), float(d["u0_px"]), float(d["v0_px"])
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ScenarioError(f"{where}: invalid intrinsics ({exc})") from exc
    return CameraPose(_pose_from_dict(d, where), intr)


def _camera_to_dict(c: CameraPose) -> dict:
    return {
        "alpha_u_px": c.intrinsics.alpha_u,
        "alpha_v_px": c.intrinsics.alpha_v,
        "u0_px": c.intrinsics.u0,
        "v0_px": c.intrinsics.v0,
        **_pose_to_dict(c.extrinsics),
    }


_KNOWN_KEYS = {
    "name",
    "seeds",
    "gripper_points_m",
    "object_points_m",
    "basis_indices",
    "planning_rig",
    "runtime_rig",
    "initial_gripper_pose",
    "goal_gripper_pose",
    "grasp_pose",
    "object_motion",
    "gain_per_s",
    "damping",
    "jacobian_mode",
    "cameras_used",
    "noise_px",
    "actuator_noise",
    "dt_s",
    "max_steps",
    "convergence_eps_px",
    "seed",
    "sensor_rect_px",
    "pose_init_rot_noise_deg",
    "pose_init_trans_noise_m",
    "h_route",
}


def scenario_from_dict(d: dict) -> tuple[Scenario, list[int]]:
    """Build a scenario plus the run-seed list from a parsed JSON document."""
    unknown = set(d) - _KNOWN_KEYS
    if unknown:
        raise ScenarioError(f"unknown scenario fields: {sorted(unknown)}")
    for key in ("gripper_points_m", "runtime_rig", "initial_gripper_pose"):
        if key not in d:
            raise ScenarioError(f"missing required scenario field '{key}'")

    kwargs: dict = {
        "name": d.get("name", "scenario"),
        "gripper_points": d["gripper_points_m"],
        "runtime_rig": tuple(
            _camera_from_dict(c, f"runtime_rig[{i}]") for i, c in enumerate(d["runtime_rig"])
        ),
        "initial_gripper_pose": _pose_from_dict(d["initial_gripper_pose"], "initial_gripper_pose"),
    }
    if d.get("object_points_m") is not None:
        kwargs["object_points"] = d["object_points_m"]
    if d.get("basis_indices") is not None:
        kwargs["basis_indices"] = tuple(d["basis_indices"])
    if d.get("planning_rig") is not None:
        kwargs["planning_rig"] = tuple(
            _camera_from_dict(c, f"planning_rig[{i}]") for i, c in enumerate(d["planning_rig"])
        )
    for json_key, attr in (
        ("goal_gripper_pose", "goal_gripper_pose"),
        ("grasp_pose", "grasp_pose"),
        ("object_motion", "object_motion"),
    ):
        if d.get(json_key) is not None:
            kwargs[attr] = _pose_from_dict(d[json_key], json_key)
    kwargs["gains"] = ControlGains(
        g=float(d.get("gain_per_s", 1.0)), damping=float(d.get("damping", 0.0))
    )
    for json_key, attr, cast in (
        ("jacobian_mode", "jacobian_mode", str),
        ("cameras_used", "cameras_used", int),
        ("noise_px", "noise_px", float),
        ("actuator_noise", "actuator_noise", float),
        ("dt_s", "dt", float),
        ("max_steps", "max_steps", int),
        ("convergence_eps_px", "convergence_eps", float),
        ("seed", "seed", int),
        ("pose_init_trans_noise_m", "pose_init_trans_noise_m", float),
        ("h_route", "h_route", str),
    ):
        if json_key in d:
            kwargs[attr] = cast(d[json_key])
    if "pose_init_rot_noise_deg" in d:
        kwargs["pose_init_rot_noise_rad"] = float(np.deg2rad(d["pose_init_rot_noise_deg"]))
    if d.get("sensor_rect_px") is not None:
        kwargs["sensor_rect"] = tuple(d["sensor_rect_px"])

    scenario = Scenario(**kwargs)
    seeds = [int(s) for s in d.get("seeds", [scenario.seed])]
    if not seeds:
        raise ScenarioError("seeds: need at least one seed")
    return scenario, seeds


def scenario_to_dict(s: Scenario, seeds=None) -> dict:
    """Fully-resolved scenario document; reruns from it are reproducible."""
    doc: dict = {
        "name": s.name,
        "seeds": [int(x) for x in (seeds if seeds is not None else [s.seed])],
        "gripper_points_m": s.gripper_points.tolist(),
        "object_points_m": None if s.object_points is None else s.object_points.tolist(),
        "basis_indices": None if s.basis_indices is None else list(s.basis_indices),
        "planning_rig": None
        if s.planning_rig is None
        else [_camera_to_dict(c) for c in s.planning_rig],
        "runtime_rig": [_camera_to_dict(c) for c in s.runtime_rig],
        "initial_gripper_pose": _pose_to_dict(s.initial_gripper_pose),
        "goal_gripper_pose": None
        if s.goal_gripper_pose is None
        else _pose_to_dict(s.goal_gripper_pose),
        "grasp_pose": None if s.grasp_pose is None else _pose_to_dict(s.grasp_pose),
        "object_motion": _pose_to_dict(s.object_motion),
        "gain_per_s": s.gains.g,
        "damping": s.gains.damping,
        "jacobian_mode": s.jacobian_mode,
        "cameras_used": s.cameras_used,
        "noise_px": s.noise_px,
        "actuator_noise": s.actuator_noise,
        "dt_s": s.dt,
        "max_steps": s.max_steps,
        "convergence_eps_px": s.convergence_eps,
        "seed": s.seed,
        "sensor_rect_px": None if s.sensor_rect is None else list(s.sensor_rect),
        "pose_init_rot_noise_deg": float(np.rad2deg(s.pose_init_rot_noise_rad)),
        "pose_init_trans_noise_m": s.pose_init_trans_noise_m,
        "h_route": s.h_route,
    }
    return doc


def load_scenario(path) -> tuple[Scenario, list[int]]:
    """Parse a scenario file; errors carry the file name and line when known."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: top-level JSON value must be an object")
    try:
        return scenario_from_dict(doc)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def save_scenario(s: Scenario, path, seeds=None) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(s, seeds=seeds), fh, indent=2)
        fh.write("\n")


def bundled_scenario_path(name: str):
    """Path of a scenario shipped with the package (by bare name)."""
    return resources.files("servograsp").joinpath("scenarios", f"{name}.json")


def load_bundled(name: str) -> tuple[Scenario, list[int]]:
    path = bundled_scenario_path(name)
    if not path.is_file():
        raise ScenarioError(f"no bundled scenario named '{name}'")
    return load_scenario(path)


def replace(s: Scenario, **overrides) -> Scenario:
    """Copy a scenario with some fields replaced (validation re-runs)."""
    kwargs = {f.name: getattr(s, f.name) for f in fields(Scenario)}
    kwargs.update(overrides)
    return Scenario(**kwargs)
