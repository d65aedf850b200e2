#!/usr/bin/env python3
"""Mean OSPA per time step over repeated runs of one scenario cell.

The benchmark subcommand reduces everything to a single RMS number per
estimator; this script keeps the time axis so the transient after each
birth and death stays visible. Writes a CSV (step, mean ospa per estimator)
and optionally a PNG.
"""

import argparse
import csv
import dataclasses
import sys

import numpy as np

from pmbm import (
    FilterParams,
    OspaParams,
    PmbmDensity,
    estimate1,
    estimate2,
    estimate3,
    generate_measurements,
    generate_trajectories,
    ospa,
    reference_scenario,
    step,
)


def one_run(scenario, truth_seed, meas_seed, params, metric):
    scenario = dataclasses.replace(scenario, seed=truth_seed)
    model = scenario.model
    truth = generate_trajectories(scenario)
    measurements = generate_measurements(truth, model, scenario.area, meas_seed)
    extract = {
        1: lambda d: estimate1(d, params.estimator_threshold),
        2: estimate2,
        3: estimate3,
    }
    d = PmbmDensity.empty()
    errs = {i: [] for i in extract}
    for k in range(1, scenario.num_steps + 1):
        d = step(d, list(measurements.at(k)), model, params)
        states = [x for _, x in truth.at(k)]
        for i, f in extract.items():
            errs[i].append(ospa(f(d).means(), states, metric))
    return errs


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--p-d", type=float, default=0.9, dest="p_d")
    ap.add_argument("--clutter", type=float, default=10.0)
    ap.add_argument("--output", default="ospa_over_time.csv")
    ap.add_argument("--plot", metavar="FILE", help="also write a PNG")
    args = ap.parse_args()

    scenario = reference_scenario(p_d=args.p_d, clutter_rate=args.clutter)
    params = FilterParams()
    metric = OspaParams()

    sums = {i: np.zeros(scenario.num_steps) for i in (1, 2, 3)}
    for run in range(args.runs):
        t_seed, m_seed = (
            int(s) for s in np.random.SeedSequence([args.seed, run]).generate_state(2)
        )
        errs = one_run(scenario, t_seed, m_seed, params, metric)
        for i in sums:
            sums[i] += np.asarray(errs[i])
        print(f"run {run + 1}/{args.runs}", file=sys.stderr)
    means = {i: sums[i] / args.runs for i in sums}

    with open(args.output, "w", encoding="ascii", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "mean_ospa_est1", "mean_ospa_est2", "mean_ospa_est3"])
        for k in range(scenario.num_steps):
            w.writerow([k + 1] + [f"{means[i][k]:.6f}" for i in (1, 2, 3)])
    print(f"wrote {args.output}")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        steps = range(1, scenario.num_steps + 1)
        fig, ax = plt.subplots(figsize=(7, 3.5))
        for i in (1, 2, 3):
            ax.plot(steps, means[i], label=f"estimator {i}", lw=1.2)
        ax.set_xlabel("time step")
        ax.set_ylabel(f"mean OSPA over {args.runs} runs")
        ax.legend()
        fig.tight_layout()
        fig.savefig(args.plot, dpi=150)
        print(f"wrote {args.plot}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
