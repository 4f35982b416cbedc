"""Multi-seed comparison of loss variants and the reward-curve CSV/SVG."""
from __future__ import annotations

import csv
import os

import numpy as np

from hybridwalk.harness.config import ExperimentConfig
from hybridwalk.harness.train import read_metrics, train

VARIANTS = {"PPO": ("none", 0.0), "PPO+MSL": ("msl", None), "PPO+PSL": ("psl", None)}


def _curve(metrics):
    steps = metrics["steps"]
    reward = metrics["avg_ep_reward"]
    ok = np.isfinite(reward)
    if not ok.any():
        raise ValueError("run finished no episodes; raise total_steps or shorten episode_cap")
    return steps[ok], reward[ok]


def resample(curves, grid=None):
    """Linearly interpolate every ``(steps, reward)`` curve onto one grid.

    The default grid is the step column of the first curve cut to the
    range that every curve covers; values outside a curve's range hold
    its end points.
    """
    if grid is None:
        lo = max(c[0][0] for c in curves)
        hi = min(c[0][-1] for c in curves)
        grid = curves[0][0][(curves[0][0] >= lo) & (curves[0][0] <= hi)]
    return np.asarray(grid), np.stack([np.interp(grid, s, r) for s, r in curves])


def comparison_table(runs: dict):
    """``runs`` maps configuration name to a list of metrics dicts.

    Returns ``{cfg: (grid, per_run_matrix, mean_curve)}``.
    """
    out = {}
    for name, metrics_list in runs.items():
        if len(metrics_list) == 0:
            raise ValueError(f"configuration {name} has no runs")
        grid, mat = resample([_curve(m) for m in metrics_list])
        out[name] = (grid, mat, mat.mean(axis=0))
    return out


def write_comparison(table, csv_path, svg_path=None) -> None:
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["steps", "cfg", "run", "reward"])
        for name, (grid, mat, mean) in table.items():
            for j, row in enumerate(mat):
                for s, r in zip(grid, row):
                    w.writerow([int(s), name, j, repr(float(r))])
            for s, r in zip(grid, mean):
                w.writerow([int(s), name, "mean", repr(float(r))])
    if svg_path:
        plot_comparison(table, svg_path)


def plot_comparison(table, svg_path) -> bool:
    """Line plot of every run (thin) and the mean (thick); returns False without matplotlib."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return False
    fig, ax = plt.subplots(figsize=(7, 4))
    for k, (name, (grid, mat, mean)) in enumerate(table.items()):
        color = f"C{k}"
        for row in mat:
            ax.plot(grid, row, color=color, alpha=0.25, linewidth=0.8)
        ax.plot(grid, mean, color=color, linewidth=2.0, label=name)
    ax.set_xlabel("time steps")
    ax.set_ylabel("average episode reward")
    ax.legend()
    fig.tight_layout()
    fig.savefig(svg_path, format="svg")
    plt.close(fig)
    return True


def compare(base: ExperimentConfig, out_dir, batches=None, variants=None, quiet=True) -> dict:
    """Train every variant x batch size x seed and write ``comparison.csv`` (+ SVG) per batch size."""
    if len(base.seeds) < 2:
        raise ValueError("comparison needs at least two seeds per configuration")
    variants = variants or list(VARIANTS)
    batches = batches or [base.batch]
    tables = {}
    for batch in batches:
        runs = {}
        for name in variants:
            kind, w = VARIANTS[name]
            runs[name] = []
            for seed in base.seeds:
                run_dir = os.path.join(out_dir, f"b{batch}", name.replace("+", "_"), f"seed{seed}")
                cfg = base.with_overrides(
                    batch=batch, sym_kind=kind, sym_weight=base.sym_weight if w is None else w, seeds=(seed,), out=run_dir
                )
                rec = train(cfg, quiet=quiet)
                runs[name].append(read_metrics(rec.metrics_path))
        table = comparison_table(runs)
        write_comparison(
            table,
            os.path.join(out_dir, f"comparison_b{batch}.csv"),
            os.path.join(out_dir, f"comparison_b{batch}.svg"),
        )
        tables[batch] = table
    return tables
