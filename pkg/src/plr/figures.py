"""Render report figures next to the CSV artifacts.

Pure presentation: every figure is drawn from the same arrays that went into
the delimited output, never from recomputed statistics.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_DPI = 150


def _new_axes(xlabel: str, ylabel: str, title: str):
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _finish(fig, path: str | Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_roc_figure(path: str | Path, curves: list[tuple[str, list, list]],
                    title: str = "ROC") -> None:
    fig, ax = _new_axes("false positive rate", "true positive rate", title)
    for label, alpha, beta in curves:
        ax.plot(alpha, beta, label=label)
    ax.plot([0, 1], [0, 1], linestyle=":", color="gray", linewidth=1)
    ax.legend(loc="lower right")
    _finish(fig, path)


def save_nulldist_figure(path: str | Path, values, ecdf, reference_cdf,
                         title: str = "null distribution vs chi2(1)") -> None:
    fig, ax = _new_axes("calibrated statistic", "CDF", title)
    ax.plot(values, ecdf, label="empirical")
    ax.plot(values, reference_cdf, linestyle="--", label="chi2(1)")
    ax.set_xlim(0, max(6.0, float(values[int(0.995 * (len(values) - 1))])))
    ax.legend(loc="lower right")
    _finish(fig, path)


def save_scan_figure(path: str | Path, mu, learned, oracle=None,
                     title: str = "profile scan") -> None:
    fig, ax = _new_axes("tested mu0", "t", title)
    ax.plot(mu, learned, label="learned (calibrated)")
    if oracle is not None:
        ax.plot(mu, oracle, linestyle="--", label="oracle")
    ax.legend(loc="upper center")
    _finish(fig, path)


def save_trainlog_figure(path: str | Path, steps, losses,
                         title: str = "training loss") -> None:
    fig, ax = _new_axes("step", "mean BXE loss", title)
    ax.plot(steps, losses)
    _finish(fig, path)


def save_calibration_figure(path: str | Path,
                            maps: list[tuple[float | None, list, list]],
                            title: str = "calibration maps") -> None:
    fig, ax = _new_axes("raw score s", "calibrated t", title)
    for mu0, s, t in maps:
        label = "joint" if mu0 is None else f"mu0={mu0:g}"
        ax.plot(s, t, label=label)
    if len(maps) <= 8:
        ax.legend(loc="upper left", fontsize=8)
    _finish(fig, path)
