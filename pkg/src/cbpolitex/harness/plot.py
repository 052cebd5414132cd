"""Render sweep directories as hyperparameter-sensitivity figures.

Usage: ``python -m cbpolitex.harness.plot SWEEP_DIR [SWEEP_DIR ...] --out fig.png``.
Needs the optional ``plot`` extra (matplotlib).
"""

from __future__ import annotations

import argparse
import re
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from .sweep import read_summary

_RUN_NAME = re.compile(r"cell(\d+)_seed\d+\.csv$")


def read_run(path) -> dict[str, np.ndarray]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    if len(lines) < 2:
        return {}
    names = lines[0].split(",")
    data = np.array([[float(v) if v else np.nan for v in ln.split(",")] for ln in lines[1:]])
    return {n: data[:, j] for j, n in enumerate(names)}


def cell_curves(sweep_dir, column: str) -> dict[int, np.ndarray]:
    """Seed-averaged curve of ``column`` for each cell."""
    per_cell = defaultdict(list)
    for path in sorted(Path(sweep_dir).glob("cell*_seed*.csv")):
        match = _RUN_NAME.search(path.name)
        run = read_run(path)
        if match and column in run:
            per_cell[int(match.group(1))].append(run[column])
    out = {}
    for cell, curves in per_cell.items():
        n = min(len(c) for c in curves)
        out[cell] = np.mean([c[:n] for c in curves], axis=0)
    return out


def plot_sweeps(dirs, out, columns=("og_running", "cv_running")):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(len(columns), len(dirs), squeeze=False,
                             figsize=(4 * len(dirs), 3 * len(columns)))
    for j, d in enumerate(dirs):
        meta, rows = read_summary(Path(d) / "summary.csv")
        best = {int(r["cell"]) for r in rows if r["best"] == "1"}
        for i, col in enumerate(columns):
            ax = axes[i, j]
            curves = cell_curves(d, col)
            for cell, y in sorted(curves.items()):
                if cell not in best:
                    ax.plot(y, color="tab:blue", alpha=0.25, lw=0.8)
            for cell in best & curves.keys():
                ax.plot(curves[cell], color="tab:blue", lw=2.0)
            ax.set_xlabel("iteration")
            ax.set_ylabel(col)
            if i == 0:
                ax.set_title(meta.get("algorithm", Path(d).name))
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cbpolitex-plot")
    parser.add_argument("dirs", nargs="+", help="sweep output directories")
    parser.add_argument("--out", default="sensitivity.png")
    args = parser.parse_args(argv)
    try:
        plot_sweeps(args.dirs, args.out)
    except ImportError:
        print("matplotlib is required: pip install -e '.[plot]'", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
