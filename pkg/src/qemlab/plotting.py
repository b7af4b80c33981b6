"""Figure rendering for the report path: depth sweeps as PNG files."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .bench import ResultRow


def _by_method(rows: Sequence[ResultRow]) -> dict[str, list[ResultRow]]:
    out: dict[str, list[ResultRow]] = {}
    for r in rows:
        out.setdefault(r.method, []).append(r)
    for rs in out.values():
        rs.sort(key=lambda r: r.depth)
    return out


def render_report_figures(rows: Sequence[ResultRow], figdir) -> list[str]:
    """Write abs-error and energy depth-sweep figures, returning their paths."""
    if not rows:
        raise ValueError("no rows to plot")
    figdir = Path(figdir)
    figdir.mkdir(parents=True, exist_ok=True)
    groups = _by_method(rows)
    paths: list[str] = []

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for method, rs in sorted(groups.items()):
        ax.semilogy([r.depth for r in rs], [max(r.abs_error, 1e-16) for r in rs],
                    marker="o", markersize=4, label=method)
    ax.set_xlabel("ansatz depth")
    ax.set_ylabel("|energy - exact|")
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=8)
    fig.tight_layout()
    p = figdir / "abs_error_vs_depth.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(str(p))

    fig, ax = plt.subplots(figsize=(7, 4.5))
    exact_drawn = False
    for method, rs in sorted(groups.items()):
        ax.plot([r.depth for r in rs], [r.energy for r in rs],
                marker="o", markersize=4, label=method)
        if not exact_drawn:
            ax.axhline(rs[0].exact, color="black", linewidth=1, linestyle="--",
                       label="exact")
            exact_drawn = True
    ax.set_xlabel("ansatz depth")
    ax.set_ylabel("energy")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    p = figdir / "energy_vs_depth.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(str(p))
    return paths
