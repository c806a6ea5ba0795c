"""Figure rendering for CLI reports.

Each report command writes its delimited output first; these helpers
draw the matching figure next to it. Everything renders through the Agg
backend so the CLI works headless.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["training_curves", "trace_figure", "surrogate_figure",
           "compare_figure", "raster_figure"]


def training_curves(rows: list[dict], path: str) -> None:
    """Test accuracy and train loss per epoch, side by side."""
    epochs = [r["epoch"] for r in rows]
    fig, (ax_acc, ax_loss) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax_acc.plot(epochs, [100.0 * r["test_acc"] for r in rows], marker="o")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("test accuracy (%)")
    ax_loss.plot(epochs, [r["train_loss"] for r in rows], marker="o", color="tab:red")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("train loss")
    for ax in (ax_acc, ax_loss):
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def trace_figure(columns: dict[str, list[float]], model: str, path: str) -> None:
    """State variables over time with red lines marking spike events."""
    t = columns["t"]
    state_keys = [k for k in columns if k not in ("t", "input", "spike")]
    fig, ax = plt.subplots(figsize=(9, 3.5))
    for key in state_keys:
        ax.plot(t, columns[key], label=key)
    for tick, spike in zip(t, columns["spike"]):
        if spike:
            ax.axvline(tick, color="red", alpha=0.35, linewidth=0.8)
    ax.set_xlabel("timestep")
    ax.set_ylabel("state")
    ax.set_title(model)
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def surrogate_figure(xs: np.ndarray, forward: np.ndarray,
                     backward: dict[str, np.ndarray], path: str) -> None:
    """Hard step in blue, each surrogate derivative red-dashed in its own panel."""
    fig, axes = plt.subplots(1, len(backward), figsize=(4 * len(backward), 3.2),
                             sharex=True)
    for ax, (name, grad) in zip(np.atleast_1d(axes), backward.items()):
        ax.plot(xs, forward, color="tab:blue", label="forward")
        twin = ax.twinx()
        twin.plot(xs, grad, color="tab:red", linestyle="--", label="backward")
        twin.set_ylabel("gradient", color="tab:red")
        ax.set_title(name)
        ax.set_xlabel("x")
        ax.set_ylabel("spike")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def compare_figure(rows: list[dict], path: str) -> None:
    """Best accuracy per surrogate as a bar chart."""
    names = [r["surrogate"] for r in rows]
    accs = [100.0 * r["best_acc"] for r in rows]
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.bar(names, accs, color=["tab:blue", "tab:orange", "tab:green"][:len(rows)])
    ax.set_ylabel("best test accuracy (%)")
    ax.set_ylim(0, 100)
    for i, acc in enumerate(accs):
        ax.text(i, acc + 1, f"{acc:.2f}", ha="center")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def raster_figure(events: list[tuple[int, int]], num_steps: int, path: str) -> None:
    """Spike raster: one dot per (timestep, unit) event."""
    fig, ax = plt.subplots(figsize=(7, 3.5))
    if events:
        ts, idx = zip(*events)
        ax.scatter(ts, idx, s=4, color="black")
    ax.set_xlim(-0.5, max(num_steps - 0.5, 0.5))
    ax.set_xlabel("timestep")
    ax.set_ylabel("unit")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
