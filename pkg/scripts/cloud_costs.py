"""Cloud cost and wall-clock estimates for (optimizer, K, S) rows.

With no arguments, prints the He2+ gCANS row with P = 123 Pauli terms.
Otherwise reads a summary.json written by ``gcans run`` and prints each
optimizer's cost and time at the median iterations and shots to threshold,
taken over the runs that reached it.
"""

from __future__ import annotations

import argparse
import json
import statistics

from gcans.bench import cost_usd, time_seconds


def row(label, K, S, P):
    cost = cost_usd(K, S, P)
    hours = time_seconds(K, S, P) / 3600
    print(f"{label:>10}  K={K:<8g} S={S:<12.4g} P={P:<4d} cost ${cost / 1000:8.2f}k  time {hours:8.3f} h")


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("summary", nargs="?")
    args = parser.parse_args()
    if args.summary is None:
        row("gcans", 353, 1.4e7, 123)
        return
    with open(args.summary, encoding="utf-8") as fh:
        summary = json.load(fh)
    P = summary["pauli_terms"]
    for name in summary["aggregate"]:
        runs = [r for r in summary["runs"] if r["optimizer"] == name and r["shots_to_threshold"] is not None]
        if not runs:
            print(f"{name:>10}  threshold not reached in any run")
            continue
        K = statistics.median(r["iterations_to_threshold"] for r in runs)
        S = statistics.median(r["shots_to_threshold"] for r in runs)
        row(name, K, S, P)


if __name__ == "__main__":
    main()
