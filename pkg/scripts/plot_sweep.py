#!/usr/bin/env python3
"""Plot success-rate curves from a sweep CSV (needs the `plot` extra)."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

import pandas as pd

from seqmusic.bench.output import success_curves

LOGGER = logging.getLogger(__name__)

COLORS = {
    "seq_cs_music": "#1b9e77",
    "cs_music": "#d95f02",
    "seq_no_filter": "#7570b3",
    "s_omp": "#e7298a",
    "ss_omp": "#66a61e",
    "music": "#a6761d",
}


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Plot success rate versus m from a sweep summary CSV")
    parser.add_argument("--csv", type=Path, required=True)
    parser.add_argument("--out", type=Path, required=True, help="PNG path")
    parser.add_argument("--title", default=None)
    return parser.parse_args()


def main() -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")
    args = parse_args()
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    summary = pd.read_csv(args.csv)
    panels = success_curves(summary)
    if not panels:
        LOGGER.error("No rows in %s", args.csv)
        return 1

    fig, axes = plt.subplots(1, len(panels), figsize=(6 * len(panels), 4.5), squeeze=False)
    for ax, (label, table) in zip(axes[0], panels.items()):
        for algorithm in table.columns:
            ax.plot(table.index, table[algorithm], marker="o", markersize=3, label=algorithm, color=COLORS.get(algorithm))
        ax.set_title(label)
        ax.set_xlabel("m")
        ax.set_ylabel("success rate")
        ax.set_ylim(-0.02, 1.02)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="lower right")
    if args.title:
        fig.suptitle(args.title)
    fig.tight_layout()
    args.out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(args.out, dpi=150)
    plt.close(fig)
    LOGGER.info("Wrote %s", args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
