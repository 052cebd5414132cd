"""Hyperparameter sweeps over independent (cell, seed) runs."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..cmdp import compute_og_cv
from .config import ExperimentConfig
from .experiment import build_problem, run_experiment

log = logging.getLogger(__name__)

CV_WINDOW = (-0.25, 0.0)


def cell_seed(master_seed: int, cell_index: int) -> int:
    return int(np.random.SeedSequence([int(master_seed), int(cell_index)]).generate_state(1)[0])


@dataclass
class CellRun:
    cell_index: int
    params: dict
    master_seed: int
    seed: int
    status: str = "ok"
    og: float = math.nan
    cv: float = math.nan
    cv_signed: float = math.nan
    csv_path: str = ""


@dataclass
class CellSummary:
    cell_index: int
    params: dict
    n_ok: int
    og_mean: float
    og_ci95: float
    cv_mean: float
    cv_signed_mean: float
    status: str


@dataclass
class SweepResult:
    runs: list = field(default_factory=list)
    cells: list = field(default_factory=list)
    best_cell: int | None = None
    best_rule: str = ""

    def og_spread(self) -> float:
        ogs = [c.og_mean for c in self.cells if c.n_ok]
        return float(max(ogs) - min(ogs)) if ogs else math.nan


def _ci95(values) -> float:
    """Half-width ``1.96 * stderr`` (normal approximation)."""
    if len(values) < 2:
        return 0.0
    return float(1.96 * np.std(values, ddof=1) / math.sqrt(len(values)))


def _run_one(args):
    config_json, cell_index, params, master_seed, out_dir = args
    base = ExperimentConfig.model_validate_json(config_json)
    cfg = base.with_cell(params)
    seed = cell_seed(master_seed, cell_index)
    run = CellRun(cell_index, params, master_seed, seed)
    try:
        problem = build_problem(cfg)
        path = Path(out_dir) / f"cell{cell_index:03d}_seed{master_seed}.csv"
        out, _ = run_experiment(cfg, seed, path, problem=problem)
        run.csv_path = str(path)
        if len(out):
            b = problem.cmdp.threshold
            run.og, run.cv = compute_og_cv(out.history(), problem.oracle.J_r_star, b)
            run.cv_signed = float(np.mean(b - np.asarray(out.J_c)))
    except Exception as exc:  # a failing cell must not take its siblings down
        run.status = f"error: {type(exc).__name__}: {exc}"
    return run


def select_best(cells) -> tuple[int | None, str]:
    """Least mean OG among cells whose signed mean CV lies in [-0.25, 0]."""
    ok = [c for c in cells if c.n_ok]
    lo, hi = CV_WINDOW
    eligible = [c for c in ok if lo <= c.cv_signed_mean <= hi]
    if eligible:
        return min(eligible, key=lambda c: (c.og_mean, c.cell_index)).cell_index, "cv_window"
    if ok:
        return min(ok, key=lambda c: (c.og_mean, c.cell_index)).cell_index, "fallback_least_og"
    return None, "no_successful_cells"


def run_sweep(config: ExperimentConfig, jobs: int = 1, out_dir: str | Path | None = None):
    out_dir = Path(out_dir or config.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = config.cells()
    payload = config.canonical_json()
    tasks = [(payload, i, cell, s, str(out_dir)) for i, cell in enumerate(cells)
             for s in config.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_run_one, tasks))
    else:
        runs = [_run_one(t) for t in tasks]

    result = SweepResult(runs=runs)
    for i, cell in enumerate(cells):
        mine = [r for r in runs if r.cell_index == i and r.status == "ok"]
        errors = [r.status for r in runs if r.cell_index == i and r.status != "ok"]
        ogs = [r.og for r in mine]
        result.cells.append(CellSummary(
            cell_index=i, params=cell, n_ok=len(mine),
            og_mean=float(np.mean(ogs)) if mine else math.nan,
            og_ci95=_ci95(ogs),
            cv_mean=float(np.mean([r.cv for r in mine])) if mine else math.nan,
            cv_signed_mean=float(np.mean([r.cv_signed for r in mine])) if mine else math.nan,
            status="ok" if not errors else "; ".join(errors)))
    result.best_cell, result.best_rule = select_best(result.cells)
    write_summary(result, config, out_dir / "summary.csv")
    return result


def write_summary(result: SweepResult, config: ExperimentConfig, path: Path) -> None:
    keys = sorted(config.sweep) if config.sweep else []
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={config.config_hash()}\n")
        fh.write(f"# algorithm={config.algorithm.name}\n")
        fh.write("# ci95=1.96*stderr over seeds (normal approximation)\n")
        fh.write(f"# best_rule={result.best_rule}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["cell", *keys, "n_ok", "og_mean", "og_ci95", "cv_mean",
                         "cv_signed_mean", "best", "status"])
        for c in result.cells:
            writer.writerow([c.cell_index, *[c.params[k] for k in keys], c.n_ok,
                             format(c.og_mean, ".10g"), format(c.og_ci95, ".10g"),
                             format(c.cv_mean, ".10g"), format(c.cv_signed_mean, ".10g"),
                             int(c.cell_index == result.best_cell), c.status])


def read_summary(path: str | Path) -> tuple[dict, list[dict]]:
    meta, lines = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
        else:
            lines.append(line)
    return meta, list(csv.DictReader(lines))
