#!/usr/bin/env python3
"""Regenerate the figure datasets and, if matplotlib is around, quick-look plots.

    python scripts/reproduce_figures.py --out figures
    python scripts/reproduce_figures.py --out /tmp/f --small   # seconds, not minutes
"""

import argparse
import logging
from pathlib import Path

from lmgtherm.figures import FIG_BETAS, figure_datasets, read_series

SMALL = {"N_grid": [12, 24, 48, 96, 192, 384], "N_fig1": 20}


def plot(out: Path) -> None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        logging.warning("matplotlib not installed, skipping plots")
        return

    fig, axes = plt.subplots(1, 3, figsize=(13, 4), sharey=False)
    for ax, (name, side) in zip(axes, [("fig2", "below"), ("fig2", "above"), ("fig3", None)]):
        for beta in FIG_BETAS:
            tag = f"{beta:g}".replace(".", "p")
            path = out / (f"{name}_{side}_beta{tag}.csv" if side else f"{name}_beta{tag}.csv")
            if not path.exists():
                continue
            for ratio, (N, val) in sorted(read_series(path).items()):
                ax.loglog(N, val, ".-", ms=3, lw=0.8, label=f"beta J={beta:g}, G/Gc={ratio:g}")
        ax.set_xlabel("N")
        ax.set_title(f"{name} {side or ''}".strip())
    axes[0].set_ylabel("b tau")
    axes[-1].legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(out / "overview.png", dpi=130)
    print(f"wrote {out / 'overview.png'}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="figures")
    ap.add_argument("--small", action="store_true", help="short N grid for a smoke run")
    ap.add_argument("--no-plot", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    out = Path(args.out)
    produced = figure_datasets(["fig1", "fig2", "fig3"], out, SMALL if args.small else None)
    for name, files in produced.items():
        print(f"{name}: {len(files)} files")
    if not args.no_plot:
        plot(out)


if __name__ == "__main__":
    main()
