"""Learning-rate and common-ratio sensitivity sweeps from a YAML experiment spec.

    python scripts/hyperparam_sweep.py configs/tfim4_sweep.yaml
"""

from __future__ import annotations

import argparse

from gcans.bench import SWEEP_AXES, ExperimentSpec, run_sweep


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("spec")
    parser.add_argument("--axes", nargs="+", default=list(SWEEP_AXES), choices=SWEEP_AXES)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    spec = ExperimentSpec.load(args.spec)
    for axis in args.axes:
        report = run_sweep(spec, axis, jobs=args.jobs)
        for name, medians in report["median_normalized_gap"].items():
            cells = "  ".join(f"{v:g}: {m:.3g}" for v, m in medians.items())
            print(f"{axis:>24} {name:>7}  {cells}  range {report['range'][name]:.3g}")
    print(f"CSV written to {spec.output_path()}")


if __name__ == "__main__":
    main()
