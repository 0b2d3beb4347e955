"""Optional matplotlib figures rendered next to the CSV outputs.

All plotting is opt-in (`--plot` on the CLI); the delimited files remain the
canonical outputs and nothing downstream depends on the figures.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_convergence_figure(curve, mse_curve, path, title: str) -> None:
    """Best fitness per generation, with the matching MSE on a twin axis."""
    gens = np.arange(1, len(curve) + 1)
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    ax.plot(gens, curve, color="tab:blue", lw=1.5, label="best fitness")
    ax.set_xlabel("generation")
    ax.set_ylabel("best fitness (1/MSE)", color="tab:blue")
    ax.tick_params(axis="y", labelcolor="tab:blue")
    ax2 = ax.twinx()
    ax2.plot(gens, mse_curve, color="tab:red", lw=1.0, ls="--", label="best MSE")
    ax2.set_ylabel("MSE of best individual", color="tab:red")
    ax2.tick_params(axis="y", labelcolor="tab:red")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_prediction_figure(y_true, y_pred, path, title: str) -> None:
    """Actual-vs-predicted scatter with the identity line."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    ax.scatter(y_true, y_pred, s=18, alpha=0.75, edgecolor="none")
    lo = min(y_true.min(), y_pred.min())
    hi = max(y_true.max(), y_pred.max())
    pad = 0.05 * (hi - lo) if hi > lo else 1.0
    ax.plot([lo - pad, hi + pad], [lo - pad, hi + pad], "k--", lw=1.0)
    ax.set_xlim(lo - pad, hi + pad)
    ax.set_ylim(lo - pad, hi + pad)
    ax.set_xlabel("actual")
    ax.set_ylabel("predicted")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_history_figure(history, path, title: str) -> None:
    """Per-step maxima of temperature and von Mises stress over time."""
    t = history[:, 0]
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    ax.plot(t, history[:, 1], color="tab:orange", lw=1.2)
    ax.set_xlabel("time / s")
    ax.set_ylabel("max temperature / K", color="tab:orange")
    ax.tick_params(axis="y", labelcolor="tab:orange")
    ax2 = ax.twinx()
    ax2.plot(t, history[:, 2], color="tab:purple", lw=1.2)
    ax2.set_ylabel("max von Mises / MPa", color="tab:purple")
    ax2.tick_params(axis="y", labelcolor="tab:purple")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
