"""gCANS vs iCANS on TFIM chains of growing length.

Writes per-seed CSV traces and a summary per chain length under
``results/scaling/n{n}``; prints median shots and iterations to threshold.

    python scripts/tfim_scaling.py --sizes 4 6 --seeds 10 --lipschitz one_norm
"""

from __future__ import annotations

import argparse
from pathlib import Path

from gcans.bench import ExperimentSpec, ProblemSpec, run_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[4, 6, 8, 10])
    parser.add_argument("--depth", type=int, default=6)
    parser.add_argument("--g", type=float, default=1.5)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--budget", type=float, default=2e6)
    parser.add_argument("--lipschitz", default="bound", help="bound, one_norm or a number")
    parser.add_argument("--lr-scale", type=float, default=0.5)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--out", default="results/scaling")
    args = parser.parse_args()

    lipschitz = args.lipschitz
    if lipschitz not in ("bound", "one_norm"):
        lipschitz = float(lipschitz)
    overrides = {"lr_scale": args.lr_scale}
    print(f"{'n':>3} {'optimizer':>9} {'reached':>8} {'med shots':>12} {'med iters':>10} {'med E_final':>12}")
    for n in args.sizes:
        spec = ExperimentSpec(
            problem=ProblemSpec(kind="tfim", n=n, g=args.g, depth=args.depth),
            optimizers=["gcans", "icans"],
            budget=int(args.budget),
            seeds=list(range(args.seeds)),
            lipschitz=lipschitz,
            optimizer_config={"gcans": overrides, "icans": overrides},
            output_dir=str(Path(args.out) / f"n{n}"),
        )
        summary = run_experiment(spec, jobs=args.jobs)
        for name, agg in summary["aggregate"].items():
            print(f"{n:>3} {name:>9} {agg['reached']:>5}/{args.seeds:<2} "
                  f"{str(agg['median_shots_to_threshold']):>12} "
                  f"{str(agg['median_iterations_to_threshold']):>10} {agg['median_final_energy']:>12.5f}")


if __name__ == "__main__":
    main()
