#!/usr/bin/env python3
"""Simulate one scenario, track it, and report per-step errors.

Shows the library API end to end: build the standard four-target scenario,
draw measurements, run the recursion, and compare each estimator's report
against the ground truth. With --plot the OSPA trace is also written as a
PNG.
"""

import argparse

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
    rms_aggregate,
    step,
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--p-d", type=float, default=0.9, dest="p_d")
    ap.add_argument("--clutter", type=float, default=10.0)
    ap.add_argument("--every", type=int, default=5, help="print every Nth step")
    ap.add_argument("--plot", metavar="FILE", help="write an OSPA trace PNG")
    args = ap.parse_args()

    seeds = np.random.SeedSequence([args.seed]).generate_state(2)
    scenario = reference_scenario(
        p_d=args.p_d, clutter_rate=args.clutter, seed=int(seeds[0])
    )
    model = scenario.model
    truth = generate_trajectories(scenario)
    measurements = generate_measurements(truth, model, scenario.area, int(seeds[1]))

    params = FilterParams()
    metric = OspaParams()
    extract = {
        1: lambda d: estimate1(d, params.estimator_threshold),
        2: estimate2,
        3: estimate3,
    }

    d = PmbmDensity.empty()
    errs: dict[int, list[float]] = {1: [], 2: [], 3: []}
    print("step  n_true  n_est1  ospa1  ospa2  ospa3")
    for k in range(1, scenario.num_steps + 1):
        d = step(d, list(measurements.at(k)), model, params)
        states = [x for _, x in truth.at(k)]
        row = {}
        for i, f in extract.items():
            est = f(d)
            errs[i].append(ospa(est.means(), states, metric))
            row[i] = est
        if k % args.every == 0 or k == 1 or k == scenario.num_steps:
            print(
                f"{k:4d}  {len(states):6d}  {row[1].cardinality:6d}  "
                + "  ".join(f"{errs[i][-1]:5.2f}" for i in (1, 2, 3))
            )

    print()
    for i in (1, 2, 3):
        _, rms = rms_aggregate([errs[i]])
        print(f"estimator {i}: rms ospa {rms:.3f} over {scenario.num_steps} steps")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        steps = range(1, scenario.num_steps + 1)
        fig, ax = plt.subplots(figsize=(7, 3.5))
        for i in (1, 2, 3):
            ax.plot(steps, errs[i], label=f"estimator {i}", lw=1.2)
        ax.set_xlabel("time step")
        ax.set_ylabel(f"OSPA (p={metric.p:g}, c={metric.c:g})")
        ax.set_ylim(0, metric.c * 1.05)
        ax.legend()
        fig.tight_layout()
        fig.savefig(args.plot, dpi=150)
        print(f"wrote {args.plot}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
