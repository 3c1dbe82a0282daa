"""Optional PNG figures for the report commands.

Figures are built on ``matplotlib.figure.Figure`` directly so no GUI backend
or global pyplot state is involved.
"""
from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .report import ReportError


def _save(fig: Figure, path) -> None:
    FigureCanvasAgg(fig)
    try:
        fig.savefig(path, format="png", dpi=120, metadata={"Software": None})
    except OSError as exc:
        raise ReportError(f"cannot write figure to {path}: {exc.strerror or exc}") from exc


def plot_scaling(data: dict, path) -> None:
    """Log-log sensitivity against N with the fitted power law."""
    rows = data["rows"]
    ns = np.array([r["N"] for r in rows], dtype=float)
    mode = data["mode"]
    if mode == "bound":
        y = np.array([1.0 / r["bound"] for r in rows])
        label = "1 / bound"
    elif mode == "qfi":
        y = np.sqrt([r["qfi"] for r in rows])
        label = "sqrt(QFI)"
    else:
        y = np.array([1.0 / r["delta_mc"] for r in rows])
        label = "1 / delta (Monte Carlo)"
    fig = Figure(figsize=(5, 4))
    ax = fig.add_subplot()
    ax.loglog(ns, y, "o", label=label)
    slope = data["naive_exponent"]
    fit = y[0] * (ns / ns[0]) ** slope
    ax.loglog(ns, fit, "--", label=f"N^{slope:.3f} (corrected fit {data['exponent']:.3f})")
    ax.set_xlabel("N")
    ax.set_ylabel("sensitivity")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def plot_estimates(data: dict, path) -> None:
    """Histogram of per-batch estimates with the true value marked."""
    est = np.asarray(data["estimates"])
    fig = Figure(figsize=(5, 4))
    ax = fig.add_subplot()
    ax.hist(est, bins=max(5, int(np.sqrt(len(est)))), color="0.6")
    ax.axvline(data["gamma_true"], color="k", linestyle="--", label="gamma_true")
    ax.set_xlabel("gamma estimate")
    ax.set_ylabel("batches")
    ax.set_title(f"ratio to bound {data['ratio']:.3f}")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def plot_chain(data: dict, path) -> None:
    """Bar chart of the precision-chain links."""
    chain = data["chain"]
    names = ["sqrt_qfi", "two_delta_K", "seminorm_K", "t_seminorm_h0"]
    fig = Figure(figsize=(5, 4))
    ax = fig.add_subplot()
    ax.bar(range(len(names)), [chain[n] for n in names], color="0.6")
    ax.set_xticks(range(len(names)), names, rotation=20)
    ax.set_ylabel("value")
    fig.tight_layout()
    _save(fig, path)
