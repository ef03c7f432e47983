"""Command-line front end: run experiments, compare modes, sweep transfer accuracy.

Every run writes the fully-resolved effective scenario next to its outputs;
running again from that echo reproduces the same results (wall-clock timing
columns excepted).
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ServograspError
from .report import (
    aggregate_stats,
    plot_error_curves,
    plot_transfer_grid,
    seed_stats,
    write_json,
)
from .servo_sim import (
    bundled_scenario_path,
    load_scenario,
    plan_and_transfer,
    replace,
    run_grasp_pipeline_detailed,
    run_servo,
    scenario_to_dict,
    write_trace_csv,
)
from .servo_sim.scenario import Scenario
from .servo_sim.trace import fit_log_error, time_to_half_error


@dataclass
class RunManifest:
    """Everything one invocation needs: scenario, outputs, seeds, overrides."""

    scenario_path: str
    out_dir: str
    seeds: list[int] = field(default_factory=list)   # empty: use the file's seeds
    mode: str | None = None
    cameras: int | None = None
    noise_px: float | None = None
    modes: tuple[str, str] = ("variable", "constant")
    point_counts: list[int] = field(default_factory=lambda: list(range(5, 26)))
    noises: list[float] = field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0])
    plot: bool = True
    report_format: str = "json"


def _resolve_scenario(manifest: RunManifest) -> tuple[Scenario, list[int]]:
    path = Path(manifest.scenario_path)
    if not path.exists():
        bundled = bundled_scenario_path(manifest.scenario_path)
        if bundled.is_file():
            path = bundled
        else:
            raise ServograspError(f"scenario file not found: {manifest.scenario_path}")
    scenario, seeds = load_scenario(path)
    if manifest.seeds:
        seeds = list(manifest.seeds)
    overrides = {}
    if manifest.mode is not None:
        overrides["jacobian_mode"] = manifest.mode
    if manifest.cameras is not None:
        overrides["cameras_used"] = manifest.cameras
    if manifest.noise_px is not None:
        overrides["noise_px"] = manifest.noise_px
    if overrides:
        scenario = replace(scenario, **overrides)
    return scenario, seeds


def _prepare_out(manifest: RunManifest, scenario: Scenario, seeds: list[int]) -> Path:
    out = Path(manifest.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(scenario_to_dict(scenario, seeds=seeds), out / "effective_scenario.json")
    return out


def _run_one(scenario: Scenario):
    """Full pipeline when the scenario supports it, plain servo otherwise."""
    if scenario.supports_pipeline():
        trace, result, outcome = run_grasp_pipeline_detailed(scenario)
        return trace, result, outcome.rms_error_px("left")
    trace, result = run_servo(scenario)
    return trace, result, None


def cmd_run(manifest: RunManifest) -> int:
    scenario, seeds = _resolve_scenario(manifest)
    out = _prepare_out(manifest, scenario, seeds)
    per_seed = []
    traces = {}
    for seed in seeds:
        trace, result, transfer_rms = _run_one(replace(scenario, seed=seed))
        write_trace_csv(trace, out / f"trace_seed{seed}.csv")
        stats = {"seed": seed, **seed_stats(trace, result)}
        if transfer_rms is not None:
            stats["transfer_rms_px"] = transfer_rms
        per_seed.append(stats)
        traces[f"seed {seed}"] = trace
    summary = {
        "scenario": scenario.name,
        "jacobian_mode": scenario.jacobian_mode,
        "cameras_used": scenario.cameras_used,
        "seeds": seeds,
        "per_seed": per_seed,
        "aggregate": aggregate_stats(per_seed),
    }
    write_json(summary, out / "summary.json")
    if manifest.plot:
        plot_error_curves(traces, out / "error_curves.png", scenario.name)
    agg = summary["aggregate"]
    print(
        f"{scenario.name}: {len(seeds)} run(s), convergence rate "
        f"{agg['convergence_rate']:.2f}, median R^2 {agg['median_r2']:.4f}, "
        f"median slope {agg['median_slope_per_s']:.4f} 1/s"
    )
    print(f"outputs in {out}")
    return 0


def cmd_compare(manifest: RunManifest) -> int:
    scenario, seeds = _resolve_scenario(manifest)
    out = _prepare_out(manifest, scenario, seeds)
    rows = []
    curves = {}
    for mode in manifest.modes:
        for seed in seeds:
            run_sc = replace(scenario, jacobian_mode=mode, seed=seed)
            trace, result, _ = _run_one(run_sc)
            write_trace_csv(trace, out / f"trace_{mode}_seed{seed}.csv")
            slope, r2 = fit_log_error(trace)
            rows.append(
                {
                    "mode": mode,
                    "seed": seed,
                    "time_to_half_error_s": time_to_half_error(trace),
                    "steps_to_converge": result.steps if result.converged else None,
                    "converged": result.converged,
                    "r2": r2,
                    "slope_per_s": slope,
                }
            )
            if seed == seeds[0]:
                curves[mode] = trace
    with open(out / "compare.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)

    def column(mode):
        picked = [r for r in rows if r["mode"] == mode]
        steps = [r["steps_to_converge"] for r in picked if r["steps_to_converge"] is not None]
        return {
            "median_time_to_half_error_s": float(
                np.median([r["time_to_half_error_s"] for r in picked])
            ),
            "median_steps_to_converge": float(np.median(steps)) if steps else float("nan"),
            "median_r2": float(np.median([r["r2"] for r in picked])),
            "median_slope_per_s": float(np.median([r["slope_per_s"] for r in picked])),
            "convergence_rate": float(np.mean([r["converged"] for r in picked])),
        }

    summary = {
        "scenario": scenario.name,
        "seeds": seeds,
        "modes": {mode: column(mode) for mode in manifest.modes},
    }
    write_json(summary, out / "compare.json")
    if manifest.plot:
        plot_error_curves(curves, out / "compare.png", f"{scenario.name}: mode comparison")
    header = f"{'metric':32s}" + "".join(f"{m:>14s}" for m in manifest.modes)
    print(header)
    for key in (
        "median_time_to_half_error_s",
        "median_steps_to_converge",
        "median_r2",
        "median_slope_per_s",
        "convergence_rate",
    ):
        line = f"{key:32s}"
        for mode in manifest.modes:
            line += f"{summary['modes'][mode][key]:14.4f}"
        print(line)
    print(f"outputs in {out}")
    return 0


def cmd_transfer_eval(manifest: RunManifest) -> int:
    scenario, seeds = _resolve_scenario(manifest)
    out = _prepare_out(manifest, scenario, seeds)
    max_points = scenario.object_points.shape[0] if scenario.object_points is not None else 0
    counts = [n for n in manifest.point_counts if 5 <= n <= max_points]
    if not counts:
        raise ServograspError(
            f"no usable point counts: scenario provides {max_points} object points"
        )
    rows = []
    for noise in manifest.noises:
        for n in counts:
            for seed in seeds:
                try:
                    outcome = plan_and_transfer(
                        scenario, seed=seed, n_object_points=n, noise_px=noise
                    )
                    rms = outcome.rms_error_px("left")
                except ServograspError:
                    rms = float("nan")  # degenerate draw: counted, not fatal
                rows.append(
                    {"noise_px": noise, "n_points": n, "seed": seed, "rms_px": rms}
                )
    with open(out / "transfer_eval.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["noise_px", "n_points", "seed", "rms_px"])
        writer.writeheader()
        writer.writerows(rows)
    cells = []
    for noise in manifest.noises:
        for n in counts:
            vals = [
                r["rms_px"]
                for r in rows
                if r["noise_px"] == noise and r["n_points"] == n
            ]
            finite = [v for v in vals if np.isfinite(v)]
            cells.append(
                {
                    "noise_px": noise,
                    "n_points": n,
                    "median_rms_px": float(np.median(finite)) if finite else float("nan"),
                    "failures": len(vals) - len(finite),
                }
            )
    write_json(
        {"scenario": scenario.name, "seeds": seeds, "cells": cells},
        out / "transfer_eval.json",
    )
    if manifest.plot:
        plot_transfer_grid(rows, out / "transfer_eval.png")
    worst = max(c["median_rms_px"] for c in cells if np.isfinite(c["median_rms_px"]))
    print(
        f"{scenario.name}: swept {len(counts)} point counts x {len(manifest.noises)} "
        f"noise levels x {len(seeds)} seed(s); worst median {worst:.3f} px"
    )
    print(f"outputs in {out}")
    return 0


def _parse_seeds(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in text.split(",") if s]


def _parse_floats(text: str) -> list[float]:
    return [float(s) for s in text.split(",") if s]


def _parse_counts(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in text.split(",") if s]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", required=True, help="scenario file or bundled name")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seeds", default=None, help="a..b range or comma list")
    parser.add_argument("--cameras", type=int, choices=(1, 2), default=None)
    parser.add_argument("--noise-px", type=float, default=None, dest="noise_px")
    parser.add_argument("--no-plot", action="store_true", help="skip figure rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="servograsp",
        description="Visual-servoing and projective grasp-transfer experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario over one or more seeds")
    _add_common(p_run)
    p_run.add_argument("--mode", choices=("variable", "constant"), default=None)

    p_cmp = sub.add_parser("compare", help="run two Jacobian modes side by side")
    _add_common(p_cmp)
    p_cmp.add_argument(
        "--modes",
        default="variable,constant",
        help="comma-separated pair of Jacobian modes",
    )

    p_tr = sub.add_parser("transfer-eval", help="sweep set-point transfer accuracy")
    _add_common(p_tr)
    p_tr.add_argument("--points", default="5..25", help="object point counts (a..b or list)")
    p_tr.add_argument(
        "--noises", default="0,0.25,0.5,0.75,1.0", help="comma-separated pixel sigmas"
    )
    return parser


def _manifest_from_args(args) -> RunManifest:
    manifest = RunManifest(
        scenario_path=args.scenario,
        out_dir=args.out,
        seeds=_parse_seeds(args.seeds) if args.seeds else [],
        cameras=args.cameras,
        noise_px=args.noise_px,
        plot=not args.no_plot,
    )
    if getattr(args, "mode", None) is not None:
        manifest.mode = args.mode
    if hasattr(args, "modes"):
        modes = tuple(args.modes.split(","))
        if len(modes) != 2:
            raise ServograspError("--modes needs exactly two comma-separated modes")
        manifest.modes = modes  # type: ignore[assignment]
    if hasattr(args, "points"):
        manifest.point_counts = _parse_counts(args.points)
    if hasattr(args, "noises"):
        manifest.noises = _parse_floats(args.noises)
    return manifest


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = _manifest_from_args(args)
        if args.command == "run":
            return cmd_run(manifest)
        if args.command == "compare":
            return cmd_compare(manifest)
        return cmd_transfer_eval(manifest)
    except ServograspError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
