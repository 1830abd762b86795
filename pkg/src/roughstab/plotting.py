"""Figure rendering (matplotlib, Agg backend) and companion gnuplot scripts."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

golden_mean = (np.sqrt(5) - 1.0) / 2.0
fig_width = 5.0
params = {
    "axes.labelsize": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "font.family": "serif",
    "mathtext.fontset": "stix",
    "legend.fontsize": 8,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "lines.linewidth": 1.0,
    "figure.figsize": [fig_width, fig_width * golden_mean],
    "figure.dpi": 150,
    "savefig.bbox": "tight",
}


def _new_axes(title: str | None = None):
    with plt.rc_context(params):
        fig, ax = plt.subplots()
    if title:
        ax.set_title(title)
    return fig, ax


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(params):
        fig.savefig(path)
    plt.close(fig)
    return path


def plot_states(times, states, path, title=None, labels: Sequence[str] | None = None) -> Path:
    states = np.atleast_2d(np.asarray(states).T).T
    fig, ax = _new_axes(title)
    for i in range(states.shape[1]):
        ax.plot(times, states[:, i], label=labels[i] if labels else f"$x_{i + 1}$")
    ax.set_xlabel("$t$")
    ax.legend()
    return _save(fig, path)


def plot_overlay(curves, path, title=None, ylabel="$x$", component: int = 0) -> Path:
    """``curves`` is a list of ``(label, times, states)``; one component of each is drawn."""
    fig, ax = _new_axes(title)
    for label, times, states in curves:
        states = np.asarray(states)
        y = states[:, component] if states.ndim == 2 else states
        ax.plot(times, y, label=label)
    ax.set_xlabel("$t$")
    ax.set_ylabel(ylabel)
    ax.legend()
    return _save(fig, path)


def plot_convergence(etas, gaps, path, title="sup-norm gap to the limit system") -> Path:
    fig, ax = _new_axes(title)
    ax.loglog(etas, gaps, "o-")
    ax.set_xlabel(r"$\eta$")
    ax.set_ylabel("gap")
    return _save(fig, path)


def write_gnuplot(csv_name: str, script_path, columns: int, title: str = "", ylabel: str = "x") -> Path:
    """Gnuplot script plotting columns 2..columns+1 of ``csv_name`` against column 1."""
    script_path = Path(script_path)
    png = Path(csv_name).with_suffix(".gnuplot.png").name
    plots = ", ".join(
        f"'{csv_name}' using 1:{c + 2} with lines title 'x{c + 1}'" for c in range(columns)
    )
    text = "\n".join(
        [
            "set datafile separator ','",
            "set datafile commentschars '#'",
            "set key autotitle columnhead",
            "set terminal pngcairo size 800,500",
            f"set output '{png}'",
            f"set title '{title}'",
            "set xlabel 't'",
            f"set ylabel '{ylabel}'",
            f"plot {plots}",
            "",
        ]
    )
    script_path.parent.mkdir(parents=True, exist_ok=True)
    script_path.write_text(text, encoding="utf-8")
    return script_path
