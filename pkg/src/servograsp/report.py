"""Summaries and figures for runs, comparisons, and transfer sweeps.

Figures are rendered headless (Agg) straight to files next to the CSV/JSON
outputs; the delimited outputs stay the machine-readable source of truth.
"""

from __future__ import annotations

import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .servo_sim.trace import ServoTrace, fit_log_error, time_to_half_error


def _json_ready(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    return value


def write_json(doc: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(_json_ready(doc), fh, indent=2)
        fh.write("\n")


def seed_stats(trace: ServoTrace, result) -> dict:
    slope, r2 = fit_log_error(trace)
    return {
        "converged": result.converged,
        "steps": result.steps,
        "final_error_px": result.final_error_px,
        "final_alignment_error_3d_m": result.final_alignment_error_3d,
        "slope_per_s": slope,
        "r2": r2,
        "time_to_half_error_s": time_to_half_error(trace),
    }


def aggregate_stats(per_seed: list[dict]) -> dict:
    def med(key):
        vals = [d[key] for d in per_seed if np.isfinite(d.get(key, float("nan")))]
        return float(np.median(vals)) if vals else float("nan")

    return {
        "runs": len(per_seed),
        "convergence_rate": float(np.mean([d["converged"] for d in per_seed])),
        "median_steps": med("steps"),
        "median_final_error_px": med("final_error_px"),
        "median_final_alignment_error_3d_m": med("final_alignment_error_3d_m"),
        "median_slope_per_s": med("slope_per_s"),
        "median_r2": med("r2"),
        "median_time_to_half_error_s": med("time_to_half_error_s"),
    }


def plot_error_curves(traces: dict[str, ServoTrace], path, title: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, trace in traces.items():
        errors = trace.errors()
        keep = errors > 0.0
        ax.semilogy(trace.times()[keep], errors[keep], label=label, lw=1.2)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("image error norm [px]")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    if len(traces) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)


def plot_transfer_grid(rows: list[dict], path) -> None:
    """Median set-point error versus object-point count, one line per noise level."""
    noises = sorted({r["noise_px"] for r in rows})
    counts = sorted({r["n_points"] for r in rows})
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for noise in noises:
        medians = []
        for n in counts:
            vals = [
                r["rms_px"]
                for r in rows
                if r["noise_px"] == noise and r["n_points"] == n and np.isfinite(r["rms_px"])
            ]
            medians.append(np.median(vals) if vals else np.nan)
        ax.plot(counts, medians, marker="o", ms=3, label=f"{noise:g} px noise")
    ax.set_xlabel("object points used")
    ax.set_ylabel("median set-point RMS error [px]")
    ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)
