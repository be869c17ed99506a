"""Figure rendering for the CLI report paths. Files only, no interactive
backends.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .calibration import SweepRow
from .datasets import ToyRegressionData, true_noise_std
from .evaluate import RegressionCurve

__all__ = ["render_sweep_figure", "render_regression_figure",
           "render_report_figure"]


def render_sweep_figure(rows: list[SweepRow], path) -> None:
    """Approximation error and argmax disagreement against sample count."""
    n = np.array([r.num_samples for r in rows], dtype=np.float64)
    err = np.array([r.mean_error for r in rows])
    std = np.array([r.std_error for r in rows])
    miss = np.array([r.mean_miss for r in rows])

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ax1.errorbar(n, err, yerr=std, marker="o", capsize=3, lw=1.2)
    ax1.set_xscale("log")
    ax1.set_yscale("log")
    ax1.set_xlabel("samples per softmax")
    ax1.set_ylabel("L2 error vs reference")
    ax1.grid(True, which="both", alpha=0.3)

    ax2.plot(n, miss, marker="s", color="tab:red", lw=1.2)
    ax2.set_xscale("log")
    ax2.set_xlabel("samples per softmax")
    ax2.set_ylabel("argmax miss rate")
    ax2.grid(True, which="both", alpha=0.3)

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_regression_figure(curve: RegressionCurve, path,
                             data: ToyRegressionData | None = None) -> None:
    """Three panels: predictive band, aleatoric band vs the true noise level,
    epistemic band. A vertical line marks the edge of the training support.
    """
    fig, axes = plt.subplots(1, 3, figsize=(13.0, 3.8), sharey=True)
    bands = [("predictive", curve.pred_sigma, "tab:blue"),
             ("aleatoric", curve.pred_sigma_ale, "tab:orange"),
             ("epistemic", curve.pred_sigma_epi, "tab:green")]
    x = curve.x
    for ax, (name, sigma, color) in zip(axes, bands):
        if data is not None:
            ax.scatter(data.x_train, data.y_train, s=2, color="0.7",
                       alpha=0.4, label="train")
        ax.plot(x, curve.pred_mu, color="k", lw=1.0, label="mean")
        ax.fill_between(x, curve.pred_mu - 2 * sigma,
                        curve.pred_mu + 2 * sigma, color=color, alpha=0.35,
                        label=f"{name} 2$\\sigma$")
        if name == "aleatoric":
            ax.plot(x, x * np.sin(x) + 2 * true_noise_std(x), "r--", lw=0.8)
            ax.plot(x, x * np.sin(x) - 2 * true_noise_std(x), "r--", lw=0.8,
                    label="true noise")
        ax.axvline(10.0, color="0.4", ls=":", lw=0.8)
        ax.set_xlabel("x")
        ax.set_title(name)
        ax.legend(loc="upper left", fontsize=7)
    axes[0].set_ylabel("y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_report_figure(report: dict, path) -> None:
    """Grid of bar panels: one row per method, one column per reported point,
    with the true label, predictive, aleatoric and epistemic distributions.
    """
    methods = list(report["panels"].keys())
    points = report["panel_points"]
    n_rows, n_cols = len(methods), len(points)
    fig, axes = plt.subplots(n_rows, n_cols,
                             figsize=(2.4 * n_cols, 1.9 * n_rows),
                             squeeze=False, sharey=True)
    series = [("true_label", "0.3"), ("p_pred", "tab:blue"),
              ("p_ale", "tab:orange"), ("p_epi", "tab:green")]
    width = 0.2
    for i, method in enumerate(methods):
        for j, row in enumerate(report["panels"][method]):
            ax = axes[i][j]
            n_classes = len(row["true_label"])
            base = np.arange(n_classes, dtype=np.float64)
            for k, (key, color) in enumerate(series):
                ax.bar(base + (k - 1.5) * width, row[key], width=width,
                       color=color, label=key if (i == 0 and j == 0) else None)
            ax.set_ylim(0.0, 1.0)
            ax.tick_params(labelsize=6)
            if i == 0:
                ax.set_title(f"point {row['point']}", fontsize=8)
            if j == 0:
                ax.set_ylabel(method, fontsize=8)
            ax.text(0.98, 0.92,
                    f"H={row['h_pred']:.2f}/{row['h_ale']:.2f}"
                    f"/{row['h_epi']:.2f}",
                    ha="right", va="top", fontsize=6,
                    transform=ax.transAxes)
    fig.legend(loc="lower center", ncol=4, fontsize=8, frameon=False)
    fig.tight_layout(rect=(0.0, 0.05, 1.0, 1.0))
    fig.savefig(path, dpi=150)
    plt.close(fig)
