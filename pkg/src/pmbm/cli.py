"""Command-line driver.

Subcommands: simulate (write a scenario's truth and measurement files),
track (run the filter over a measurement file and report per-step OSPA),
benchmark (Monte Carlo RMS-OSPA table over a detection/clutter grid), and
validate (run the brute-force self-checks).

Exit codes: 0 success, 1 validation failure, 2 usage or file errors.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys

import numpy as np

from .config import (
    PAPER_CLUTTER_GRID,
    PAPER_P_D_GRID,
    RunConfig,
    load_run_config,
)
from .density import PmbmDensity, density_to_json
from .estimators import StateEstimate, estimate1, estimate2, estimate3
from .filter import FilterParams, step
from .gaussian import LinearGaussianModel
from .metrics import OspaParams, ospa, rms_aggregate
from .scenario import (
    GroundTruth,
    MeasurementSet,
    generate_measurements,
    generate_trajectories,
    read_records,
    write_records,
)
from .validation import run_checks


def _estimate(which: int, d: PmbmDensity, params: FilterParams) -> StateEstimate:
    if which == 1:
        return estimate1(d, params.estimator_threshold)
    if which == 2:
        return estimate2(d)
    return estimate3(d)


def _track_once(
    measurements: MeasurementSet,
    model: LinearGaussianModel,
    params: FilterParams,
    estimators: tuple[int, ...],
    densities: list | None = None,
) -> dict[int, list[StateEstimate]]:
    """Run the recursion over every step; per-estimator state reports."""
    d = PmbmDensity.empty()
    out: dict[int, list[StateEstimate]] = {i: [] for i in estimators}
    for k in range(1, measurements.num_steps + 1):
        d = step(d, list(measurements.at(k)), model, params)
        for i in estimators:
            out[i].append(_estimate(i, d, params))
        if densities is not None:
            densities.append(density_to_json(d))
    return out


def _ospa_rows(
    truth: GroundTruth,
    estimates: dict[int, list[StateEstimate]],
    params: OspaParams,
) -> list[tuple[int, int, float, int, int]]:
    """(step, estimator, ospa, cardinality_estimate, truth_cardinality)."""
    rows = []
    for k in range(1, truth.num_steps + 1):
        states = [x for _, x in truth.at(k)]
        for i in sorted(estimates):
            est = estimates[i][k - 1]
            rows.append(
                (k, i, ospa(est.means(), states, params), est.cardinality, len(states))
            )
    return rows


def _seed_pair(*path: int) -> tuple[int, int]:
    a, b = np.random.SeedSequence(list(path)).generate_state(2)
    return int(a), int(b)


def _benchmark_cell_run(args) -> tuple[int, int, dict[int, list[float]]]:
    """One Monte Carlo run of one grid cell; top-level so pools can pickle
    it. Returns (cell index, run index, per-estimator per-step ospa)."""
    cfg, cell_idx, p_d, clutter_rate, run_idx = args
    model = cfg.cell_model(p_d, clutter_rate)
    truth_seed, meas_seed = _seed_pair(cfg.seed, cell_idx, run_idx)
    scenario = dataclasses.replace(cfg.scenario, model=model, seed=truth_seed)
    truth = generate_trajectories(scenario)
    measurements = generate_measurements(truth, model, scenario.area, meas_seed)
    estimates = _track_once(measurements, model, cfg.filter, cfg.estimators)
    per_est: dict[int, list[float]] = {}
    for i, ests in estimates.items():
        per_est[i] = [
            ospa(est.means(), [x for _, x in truth.at(k)], cfg.ospa)
            for k, est in enumerate(ests, start=1)
        ]
    return cell_idx, run_idx, per_est


def cmd_simulate(cfg: RunConfig) -> int:
    out_dir = cfg.output_path or "."
    os.makedirs(out_dir, exist_ok=True)
    truth_seed, meas_seed = _seed_pair(cfg.seed)
    scenario = dataclasses.replace(cfg.scenario, seed=truth_seed)
    truth = generate_trajectories(scenario)
    measurements = generate_measurements(
        truth, scenario.model, scenario.area, meas_seed
    )
    truth_path = os.path.join(out_dir, "truth.txt")
    meas_path = os.path.join(out_dir, "measurements.txt")
    write_records(truth_path, truth=truth)
    write_records(meas_path, measurements=measurements)
    print(f"wrote {truth_path} ({truth.num_steps} steps)")
    print(f"wrote {meas_path} ({measurements.num_steps} steps)")
    return 0


def cmd_track(cfg: RunConfig, meas_path: str, truth_path: str | None,
              dump_density: bool) -> int:
    truth, measurements = read_records(meas_path, num_steps=cfg.scenario.num_steps)
    if truth_path is not None:
        truth, _ = read_records(truth_path, num_steps=cfg.scenario.num_steps)
    if measurements is None:
        raise ValueError(f"{meas_path}: no measurement records")
    if truth is None:
        raise ValueError(
            "no ground truth found; pass a file containing truth records"
        )
    if dump_density and cfg.output_path is None:
        raise ValueError("--dump-density needs --output to name the CSV")
    densities: list | None = [] if dump_density else None
    estimates = _track_once(
        measurements, cfg.scenario.model, cfg.filter, cfg.estimators, densities
    )
    rows = _ospa_rows(truth, estimates, cfg.ospa)

    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            ["step", "estimator", "ospa", "cardinality_estimate", "truth_cardinality"]
        )
        for k, i, err, card, true_card in rows:
            w.writerow([k, i, f"{err:.6f}", card, true_card])

    if cfg.output_path is None:
        write(sys.stdout)
    else:
        with open(cfg.output_path, "w", encoding="ascii") as fh:
            write(fh)
        print(f"wrote {cfg.output_path}")
        if densities is not None:
            dump_path = cfg.output_path + ".density.json"
            with open(dump_path, "w", encoding="ascii") as fh:
                json.dump(densities, fh, indent=1)
            print(f"wrote {dump_path}")
    return 0


def _format_table(cells, estimators, values) -> str:
    header = ["p_d", "clutter"] + [f"est{i}" for i in estimators]
    rows = [header]
    for ci, (p_d, clutter_rate) in enumerate(cells):
        rows.append(
            [f"{p_d:g}", f"{clutter_rate:g}"]
            + [f"{values[ci][i]:.3f}" for i in estimators]
        )
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines = [
        "  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in rows
    ]
    return "\n".join(lines)


def cmd_benchmark(cfg: RunConfig) -> int:
    cells = [
        (p_d, clutter_rate)
        for p_d in cfg.p_d_grid
        for clutter_rate in cfg.clutter_grid
    ]
    jobs = [
        (cfg, ci, p_d, clutter_rate, run)
        for ci, (p_d, clutter_rate) in enumerate(cells)
        for run in range(cfg.num_runs)
    ]
    workers = min(os.cpu_count() or 1, len(jobs))
    if workers > 1:
        import multiprocessing

        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_benchmark_cell_run, jobs, chunksize=1)
    else:
        results = [_benchmark_cell_run(job) for job in jobs]

    # reduce deterministically by (cell, run) indices
    grids: dict[int, dict[int, dict[int, list[float]]]] = {
        ci: {i: {} for i in cfg.estimators} for ci in range(len(cells))
    }
    for ci, run, per_est in results:
        for i, errs in per_est.items():
            grids[ci][i][run] = errs
    values: list[dict[int, float]] = []
    for ci in range(len(cells)):
        cell_values = {}
        for i in cfg.estimators:
            rows = [grids[ci][i][run] for run in range(cfg.num_runs)]
            _, scalar = rms_aggregate(rows)
            cell_values[i] = scalar
        values.append(cell_values)

    print(_format_table(cells, cfg.estimators, values))
    csv_rows = [["p_d", "clutter_rate", "estimator", "rms_ospa", "runs"]]
    for ci, (p_d, clutter_rate) in enumerate(cells):
        for i in cfg.estimators:
            csv_rows.append(
                [f"{p_d:g}", f"{clutter_rate:g}", str(i),
                 f"{values[ci][i]:.6f}", str(cfg.num_runs)]
            )
    if cfg.output_path is None:
        print()
        for row in csv_rows:
            print(",".join(row))
    else:
        with open(cfg.output_path, "w", encoding="ascii") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerows(csv_rows)
        print(f"wrote {cfg.output_path}")
    return 0


def cmd_validate(name_filter: str | None, perturb: float) -> int:
    results = run_checks(name_filter, perturb)
    if not results:
        print(f"no checks match {name_filter!r}", file=sys.stderr)
        return 2
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", metavar="PATH", help="key = value config file")
    sub.add_argument("--seed", type=int, metavar="N", help="master seed override")
    sub.add_argument("--runs", type=int, metavar="N", help="Monte Carlo run count")
    sub.add_argument(
        "--estimators", metavar="LIST", help="comma list drawn from 1,2,3"
    )
    sub.add_argument("--output", metavar="PATH", help="output file or directory")
    sub.add_argument(
        "--paper",
        action="store_true",
        help="use the standard benchmark setup; for benchmark, sweep the "
        "full detection/clutter grid",
    )


def _overrides(args) -> dict[str, str]:
    out: dict[str, str] = {}
    if args.seed is not None:
        out["seed"] = str(args.seed)
    if args.runs is not None:
        out["num_runs"] = str(args.runs)
    if args.estimators is not None:
        out["estimators"] = args.estimators
    if args.output is not None:
        out["output"] = args.output
    if args.paper and args.command == "benchmark":
        out["p_d_grid"] = ",".join(f"{v:g}" for v in PAPER_P_D_GRID)
        out["clutter_grid"] = ",".join(f"{v:g}" for v in PAPER_CLUTTER_GRID)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pmbm",
        description="Poisson multi-Bernoulli mixture point-target tracker",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="write truth and measurement files")
    _add_common(p_sim)

    p_track = sub.add_parser("track", help="run the filter over a record file")
    p_track.add_argument("measurements", help="measurement record file")
    p_track.add_argument(
        "--truth", metavar="PATH", help="truth record file (default: same file)"
    )
    p_track.add_argument(
        "--dump-density",
        action="store_true",
        help="also write the per-step posterior as JSON next to the CSV",
    )
    _add_common(p_track)

    p_bench = sub.add_parser("benchmark", help="Monte Carlo RMS OSPA table")
    _add_common(p_bench)

    p_val = sub.add_parser("validate", help="run the brute-force self-checks")
    p_val.add_argument(
        "--filter", metavar="NAME", help="only run checks whose name contains NAME"
    )
    p_val.add_argument(
        "--perturb",
        type=float,
        default=0.0,
        metavar="X",
        help="inject an artificial error of size X (demonstrates failure "
        "detection; keep 0 for real validation)",
    )

    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(args.filter, args.perturb)
        cfg = load_run_config(args.config, _overrides(args))
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "track":
            return cmd_track(cfg, args.measurements, args.truth, args.dump_density)
        return cmd_benchmark(cfg)
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
