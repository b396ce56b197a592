#!/usr/bin/env python3
"""Plot per-round coverage from a crowdsense report.csv.

Usage: python3 docs/plot_report.py results/report.csv [out.png]
"""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt


def main() -> None:
    path = sys.argv[1] if len(sys.argv) > 1 else "results/report.csv"
    out = sys.argv[2] if len(sys.argv) > 2 else "coverage.png"
    series = defaultdict(list)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            series[row["algorithm"]].append(
                (int(row["round"]), float(row["coverage_ratio"]))
            )
    for name, points in sorted(series.items()):
        points.sort()
        plt.plot([r for r, _ in points], [c for _, c in points], label=name)
    plt.xlabel("round")
    plt.ylabel("coverage ratio")
    plt.ylim(0.0, 1.05)
    plt.legend()
    plt.tight_layout()
    plt.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
