"""Figure rendering for the CLI report paths.

Every CSV the commands emit has a matching PNG renderer here; plots go to
files next to the delimited output (headless backend, no display needed).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["plot_history", "plot_bench"]


def plot_history(rows, path, ylabel: str = "expected cost") -> None:
    """Training curve: cost per iteration, log scale when it spans decades."""
    iters = [r[0] for r in rows]
    costs = [r[1] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(iters, costs, marker="o", markersize=3, lw=1.2)
    positive = [c for c in costs if c > 0]
    if positive and max(positive) / min(positive) > 50:
        ax.set_yscale("symlog", linthresh=min(positive))
    ax.set_xlabel("iteration")
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)


def plot_bench(rows, path) -> None:
    """Median query counts per problem size, one line per method."""
    methods = sorted({r["method"] for r in rows})
    fig, ax = plt.subplots(figsize=(6, 4))
    for method in methods:
        pts = sorted((r["n"], r["median_queries"]) for r in rows if r["method"] == method)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=method)
    ax.set_xlabel("index bits n")
    ax.set_ylabel("median oracle queries")
    ax.set_yscale("log", base=2)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)
