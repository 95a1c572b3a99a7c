#!/usr/bin/env python3
"""Far-field resolution benchmark over the built-in SNR sweeps.

Runs the two-target far-field scenarios (0.4 and 10 degree separations)
with all four DOA estimators and writes one metrics CSV per scenario.
At the default 500 trials this takes a minute or two; use --trials 5000
for publication-scale curves.
"""

import argparse
import os

from elaa_doa.harness import run_monte_carlo, write_metrics_csv
from elaa_doa.scenarios import builtin_scenarios, with_overrides

SCENARIOS = ("fig3_small_sep", "fig3_large_sep")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=None, help="trials per SNR point")
    ap.add_argument("--seed", type=int, default=None, help="base seed override")
    ap.add_argument("--out-dir", default="results", help="output directory")
    ap.add_argument("--debug", action="store_true", help="also write per-trial CSVs")
    args = ap.parse_args()

    os.makedirs(args.out_dir, exist_ok=True)
    table = builtin_scenarios()
    for name in SCENARIOS:
        spec = with_overrides(table[name], n_trials=args.trials, base_seed=args.seed)
        debug_path = os.path.join(args.out_dir, f"{name}_trials.csv") if args.debug else None
        rows = run_monte_carlo(spec, debug_path=debug_path, progress=True)
        out = os.path.join(args.out_dir, f"{name}.csv")
        write_metrics_csv(rows, out)
        print(f"wrote {out}")


if __name__ == "__main__":
    main()
