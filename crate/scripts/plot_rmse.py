#!/usr/bin/env python3
"""Time-to-error plot from one or more rmse-burnin-*.csv tables.

Usage: plot_rmse.py OUT.png TABLE.csv [TABLE.csv ...]

Each table becomes one series of RMSE against mean CPU seconds per
realization on log-log axes, with a reference line of slope -1/2.
"""
import csv
import math
import sys


def read(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return [(float(r["mean_cpu_seconds"]), float(r["rmse"]), int(r["depth"])) for r in rows]


def main(argv):
    if len(argv) < 3:
        sys.exit(__doc__)
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    anchor = None
    for path in argv[2:]:
        pts = read(path)
        xs, ys = [p[0] for p in pts], [p[1] for p in pts]
        ax.loglog(xs, ys, "o-", label=path.rsplit("/", 1)[-1])
        for x, y, depth in pts:
            ax.annotate(f"L={depth}", (x, y), textcoords="offset points", xytext=(4, 4), fontsize=7)
        anchor = anchor or (xs[0], ys[0], xs[-1])
    if anchor:
        x0, y0, x1 = anchor
        ax.loglog([x0, x1], [y0, y0 * math.sqrt(x0 / x1)], "k--", lw=0.8, label="slope -1/2")
    ax.set_xlabel("CPU seconds per realization")
    ax.set_ylabel("empirical RMSE")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(argv[1], dpi=150)


if __name__ == "__main__":
    main(sys.argv)
