"""Command line front end.

Subcommands: ``run`` (Monte Carlo sweep), ``spectrum`` (dump one fused
pseudospectrum), ``array-factor`` (beam-pattern diagnostic).  Exit codes:
0 on success, 2 on configuration errors, 3 when any (algorithm, SNR)
cell of a run fails in more than half of its trials.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .errors import ScenarioError
from .harness import (
    FAILURE_EXIT_THRESHOLD,
    run_monte_carlo,
    write_metrics_csv,
)
from .scenarios import (
    KNOWN_ALGORITHMS,
    ScenarioSpec,
    builtin_scenarios,
    load_scenario,
    with_overrides,
)
from .signal_model import save_snapshot, snapshot, split_ulas
from .ss_music import (
    default_grid,
    fuse,
    hankel_steering_matrix,
    pseudospectrum,
    write_spectrum_csv,
)
from .signal_model import array_factor
from .subspace import default_pencil, hankel, split_subspaces

FULL_TRIALS = 5000


def _resolve_scenario(ref: str) -> ScenarioSpec:
    builtins = builtin_scenarios()
    if ref in builtins:
        return builtins[ref]
    if os.path.exists(ref):
        return load_scenario(ref)
    raise ScenarioError(
        f"{ref!r} is neither a scenario file nor a builtin "
        f"({', '.join(sorted(builtins))})"
    )


def _parse_snr(text: str) -> tuple[float, ...]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ScenarioError(f"bad --snr range {text!r}, expected start:stop:step")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError as exc:
            raise ScenarioError(f"bad --snr range {text!r}") from exc
        if step <= 0:
            raise ScenarioError("--snr step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        if n < 1:
            raise ScenarioError("--snr range is empty")
        return tuple(start + i * step for i in range(n))
    try:
        return tuple(float(p.strip()) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise ScenarioError(f"bad --snr list {text!r}") from exc


def _parse_algos(text: str) -> tuple[str, ...]:
    algos = tuple(p.strip() for p in text.split(",") if p.strip())
    for a in algos:
        if a not in KNOWN_ALGORITHMS:
            raise ScenarioError(
                f"unknown algorithm {a!r}; known: {', '.join(KNOWN_ALGORITHMS)}"
            )
    return algos


def _cmd_run(args) -> int:
    spec = _resolve_scenario(args.scenario)
    trials = args.trials
    if args.full and trials is None:
        trials = FULL_TRIALS
    spec = with_overrides(
        spec,
        n_trials=trials,
        snr_grid_db=_parse_snr(args.snr) if args.snr else None,
        algorithms=_parse_algos(args.algos) if args.algos else None,
        base_seed=args.seed,
    )
    rows = run_monte_carlo(
        spec,
        rmse_include_failures=args.rmse_include_failures,
        debug_path=args.debug_out,
        progress=not args.quiet,
    )
    write_metrics_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    if any(r.failure_rate > FAILURE_EXIT_THRESHOLD for r in rows):
        worst = max(rows, key=lambda r: r.failure_rate)
        print(
            f"warning: {worst.algorithm} @ {worst.snr_db} dB failed in "
            f"{worst.failure_rate:.0%} of trials",
            file=sys.stderr,
        )
        return 3
    return 0


def _cmd_spectrum(args) -> int:
    spec = _resolve_scenario(args.scenario)
    snap = snapshot(
        spec.array, spec.targets, args.snr, args.seed, model=spec.steering_model
    )
    if args.dump_snapshot:
        save_snapshot(args.dump_snapshot, snap.y)
    pencil = spec.pencil
    if pencil is None:
        pencil = default_pencil(spec.array.elements_per_ula)
    grid = default_grid(spec.grid_step_deg)
    a = hankel_steering_matrix(pencil + 1, spec.array.spacing, spec.array.wavelength, grid)
    k = len(spec.targets)
    s1, s2 = (
        pseudospectrum(split_subspaces(hankel(y, pencil), k), grid, a)
        for y in split_ulas(snap.y)
    )
    write_spectrum_csv(fuse(s1, s2, spec.fusion_mode), args.out)
    print(f"wrote spectrum ({len(grid)} angles) to {args.out}")
    return 0


def _cmd_array_factor(args) -> int:
    spec = _resolve_scenario(args.scenario)
    grid = default_grid(spec.grid_step_deg)
    elaa = array_factor(spec.array, grid, aperture="elaa")
    ula = array_factor(spec.array, grid, aperture="ula")
    with open(args.out, "w") as fh:
        fh.write("angle_deg,elaa_db,ula_db\n")
        for ang, e, u in zip(np.rad2deg(grid), elaa, ula):
            fh.write(f"{float(ang)!r},{float(e)!r},{float(u)!r}\n")
    print(f"wrote array factor ({len(grid)} angles) to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elaa-doa",
        description="Single-snapshot DOA estimation with sparse two-module arrays",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte Carlo scenario sweep")
    run.add_argument("--scenario", required=True, help="scenario file or builtin name")
    run.add_argument("--trials", type=int, default=None, help="trials per SNR point")
    run.add_argument("--snr", default=None, help="SNR grid: start:stop:step or list")
    run.add_argument("--algos", default=None, help="comma list of algorithms")
    run.add_argument("--seed", type=int, default=None, help="base seed override")
    run.add_argument("--out", default="results.csv", help="metrics CSV path")
    run.add_argument("--debug-out", default=None, help="per-trial debug CSV path")
    run.add_argument(
        "--full", action="store_true", help=f"paper-scale run ({FULL_TRIALS} trials)"
    )
    run.add_argument(
        "--rmse-include-failures",
        action="store_true",
        help="count failed trials as 90 degree errors instead of excluding them",
    )
    run.add_argument("--quiet", action="store_true", help="suppress progress lines")
    run.set_defaults(func=_cmd_run)

    spectrum = sub.add_parser("spectrum", help="export one fused pseudospectrum")
    spectrum.add_argument("--scenario", required=True)
    spectrum.add_argument("--snr", type=float, required=True, help="per-element SNR, dB")
    spectrum.add_argument("--seed", type=int, required=True)
    spectrum.add_argument("--out", default="spectrum.csv")
    spectrum.add_argument(
        "--dump-snapshot", default=None, help="also dump the raw snapshot (binary c16)"
    )
    spectrum.set_defaults(func=_cmd_spectrum)

    af = sub.add_parser("array-factor", help="export beam-pattern diagnostic")
    af.add_argument("--scenario", required=True)
    af.add_argument("--out", default="array_factor.csv")
    af.set_defaults(func=_cmd_array_factor)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
