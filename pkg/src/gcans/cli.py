"""Command line entry point.

    gcans run <spec.yaml> [--jobs N]
    gcans sweep <spec.yaml> --axis learning_rate_multiplier|common_ratio [--values 0.5,1,2]
    gcans ground --tfim 4,1.5,open | --file H.txt
    gcans cost --iters K --shots S --terms P
    gcans verify [--trials 1000] [--seed 0]

``GCANS_OUTPUT_DIR`` overrides the experiment file's output directory.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bench
from .convex import (
    QuadraticProblem,
    check_descent_step,
    check_pl_inequality,
    contraction_check,
    fit_geometric_rate,
    run_idealized_gcans,
)
from .pauli import load_observable, tfim


def _parse_tfim(text: str):
    parts = text.split(",")
    if len(parts) not in (2, 3):
        raise ValueError("--tfim expects n,g[,boundary]")
    boundary = parts[2].strip() if len(parts) == 3 else "open"
    return tfim(int(parts[0]), float(parts[1]), boundary)


def cmd_run(args) -> int:
    spec = bench.ExperimentSpec.load(args.spec)
    summary = bench.run_experiment(spec, jobs=args.jobs)
    print(f"ground energy {summary['ground_energy']:.10f}; wrote {spec.output_path()}")
    for name, agg in summary["aggregate"].items():
        print(
            f"{name:>7}: reached {agg['reached']}/{len(spec.seeds)}  "
            f"median shots-to-threshold {agg['median_shots_to_threshold']}  "
            f"median iterations-to-threshold {agg['median_iterations_to_threshold']}  "
            f"median final energy {agg['median_final_energy']:.6f}"
        )
    return 0


def cmd_sweep(args) -> int:
    spec = bench.ExperimentSpec.load(args.spec)
    values = [float(v) for v in args.values.split(",")] if args.values else None
    report = bench.run_sweep(spec, args.axis, values, jobs=args.jobs)
    for name, meds in report["median_normalized_gap"].items():
        cells = "  ".join(f"{v:g}: {m:.3g}" for v, m in meds.items())
        print(f"{name:>7} [{args.axis}] {cells}  range {report['range'][name]:.3g}")
    return 0


def cmd_ground(args) -> int:
    obs = _parse_tfim(args.tfim) if args.tfim else load_observable(args.file)
    print(f"{bench.ground(obs):.12f}")
    return 0


def cmd_cost(args) -> int:
    cost = bench.cost_usd(args.iters, args.shots, args.terms)
    seconds = bench.time_seconds(args.iters, args.shots, args.terms)
    print(json.dumps({"cost_usd": cost, "time_seconds": seconds, "time_hours": seconds / 3600.0}))
    return 0


def cmd_verify(args) -> int:
    rng = np.random.default_rng(args.seed)
    problem = QuadraticProblem.isotropic(10, noise_std=1.0)
    gaps = run_idealized_gcans(problem, 0.5, 60, args.trials, rng)
    rate = fit_geometric_rate(gaps)
    steps = contraction_check(gaps, 0.75)
    ok_rate = rate <= 0.78
    print(f"geometric rate {rate:.4f} (bound 0.75 + 0.03): {'PASS' if ok_rate else 'FAIL'}")
    print(f"per-step contraction 0.75 holds at {steps.sum()}/{steps.size} steps: "
          f"{'PASS' if steps.all() else 'FAIL'}")
    descent_ok = True
    pl_ok = True
    for _ in range(5):
        quad = QuadraticProblem.random(10, rng)
        pts = quad.optimum + rng.standard_normal((50, 10))
        pl_ok &= check_pl_inequality(quad, pts)
        alpha = 0.5 / quad.L
        for theta in pts:
            descent_ok &= bool(check_descent_step(quad, theta, alpha, args.trials, rng))
    print(f"PL inequality on 5 random quadratics: {'PASS' if pl_ok else 'FAIL'}")
    print(f"descent inequality at 250 points: {'PASS' if descent_ok else 'FAIL'}")
    return 0 if (ok_rate and steps.all() and descent_ok and pl_ok) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gcans", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment spec")
    p.add_argument("spec")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="hyperparameter sweep")
    p.add_argument("spec")
    p.add_argument("--axis", required=True, choices=bench.SWEEP_AXES)
    p.add_argument("--values", help="comma-separated grid; defaults to the experiment file's sweep table")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ground", help="exact ground energy by dense diagonalization")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--tfim", help="n,g[,open|periodic]")
    group.add_argument("--file", help="Hamiltonian file")
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("cost", help="cloud cost and wall-clock model")
    p.add_argument("--iters", type=int, required=True)
    p.add_argument("--shots", type=float, required=True)
    p.add_argument("--terms", type=int, required=True)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("verify", help="convergence checks on convex quadratics")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"gcans: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
