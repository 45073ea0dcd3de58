"""Plot the two panels written by `bagged-ci figure1 --out DIR`.

    python3 scripts/plot_figure1.py DIR [output.png]
"""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt


def columns(path):
    with open(path) as f:
        rows = list(csv.DictReader(f))
    return {k: [float(r[k]) for r in rows] for k in rows[0]}


def main(directory, output="figure1.png"):
    d = Path(directory)
    top = columns(d / "figure1_top.csv")
    bottom = columns(d / "figure1_bottom.csv")
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6, 7))
    ax1.plot(top["gamma"], top["cp_delta"], "k-", label="smoothed, delta-method sd")
    ax1.plot(top["gamma"], top["cp_pms"], "k--", label="post-model-selection")
    ax1.axhline(0.95, color="grey", lw=0.5)
    ax1.set_ylabel("coverage probability")
    ax1.legend(loc="lower right")
    ax2.plot(bottom["gamma"], bottom["sel_delta"], "k-")
    ax2.axhline(1.0, color="grey", lw=0.5)
    ax2.set_xlabel("gamma")
    ax2.set_ylabel("scaled expected length")
    fig.tight_layout()
    fig.savefig(output, dpi=150)


if __name__ == "__main__":
    main(*sys.argv[1:])
