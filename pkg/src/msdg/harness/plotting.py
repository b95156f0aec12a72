"""Error / condition-number figures written next to the plot-data files."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiment import group_records  # noqa: E402

PENALTY_COLORS = {0.0: "tab:red", 0.1: "tab:green", 0.5: "tab:orange", 1.0: "tab:blue"}


def _figure_groups(records):
    figs: dict[tuple, list] = {}
    for key, recs in group_records(records).items():
        space, eps, alpha, beta, gamma = key
        figs.setdefault((space, eps, gamma), []).append(((alpha, beta), recs))
    return figs


def _finite(xs, ys):
    pts = [(x, y) for x, y in zip(xs, ys) if math.isfinite(y) and y > 0]
    return [p[0] for p in pts], [p[1] for p in pts]


def render_figures(records, directory, fmt: str = "png", dpi: int = 120) -> list[Path]:
    """One two-panel log-log figure per (space, eps): L2 error of u and condition number vs N."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for (space, eps, gamma), curves in sorted(_figure_groups(records).items()):
        fig, (ax_err, ax_cond) = plt.subplots(1, 2, figsize=(10, 4))
        for (alpha, beta), recs in sorted(curves):
            Ns = [r.N for r in recs]
            label = f"α={alpha:g}, β={beta:g}"
            color = PENALTY_COLORS.get(alpha) if alpha == beta else None
            ax_err.loglog(*_finite(Ns, [r.l2_error_u for r in recs]), "o-", ms=2.5, lw=1, color=color, label=label)
            ax_cond.loglog(*_finite(Ns, [r.condition.value for r in recs]), "o-", ms=2.5, lw=1, color=color, label=label)
        ax_err.set_xlabel("N")
        ax_err.set_ylabel("L2 error of u")
        ax_cond.set_xlabel("N")
        ax_cond.set_ylabel("condition number")
        for ax in (ax_err, ax_cond):
            ax.grid(True, which="both", alpha=0.3)
            ax.legend(fontsize=8)
        fig.suptitle(f"{space}, eps = {eps:g}")
        fig.tight_layout()
        path = directory / f"{space}_eps{eps:g}_g{gamma:g}.{fmt}"
        fig.savefig(path, dpi=dpi)
        plt.close(fig)
        out.append(path)
    return out
