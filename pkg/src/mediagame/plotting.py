"""Matplotlib figures written next to the CSV outputs of the CLI."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .svg import CREATOR_COLORS, ETA_COLOR, USER_COLORS, _load_sweep, load_timeseries  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def heatmap_figure(csv_path, out_path, cmap="viridis"):
    x_name, y_name, xs, ys, eta, valid = _load_sweep(csv_path)
    masked = np.ma.masked_where(~valid | ~np.isfinite(eta), eta)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.0, 3.4))
        mesh = ax.pcolormesh(xs, ys, masked.T, cmap=cmap, vmin=0.0, vmax=1.0, shading="nearest")
        ax.set_xlabel(x_name)
        ax.set_ylabel(y_name)
        fig.colorbar(mesh, ax=ax, label=r"$\eta$")
        return _save(fig, out_path)


def timeseries_figure(csv_path, out_path):
    t, tlabel, series = load_timeseries(csv_path)
    with plt.rc_context(RC):
        fig, axes = plt.subplots(3, 1, figsize=(6.0, 5.0), sharex=True)
        for name in ("AllD", "BMedia", "GMedia", "AllC"):
            axes[0].plot(t, series[name], color=USER_COLORS[name], lw=1, label=name)
        for name in ("Unsafe", "Safe"):
            axes[1].plot(t, series[name], color=CREATOR_COLORS[name], lw=1, label=name)
        axes[2].plot(t, series["eta"], color=ETA_COLOR, lw=1)
        axes[0].set_ylabel("users")
        axes[1].set_ylabel("creators")
        axes[2].set_ylabel(r"$\eta$")
        axes[2].set_xlabel(tlabel)
        for ax in axes:
            ax.set_ylim(-0.02, 1.02)
        axes[0].legend(loc="upper right", ncol=4, frameon=False)
        axes[1].legend(loc="upper right", ncol=2, frameon=False)
        return _save(fig, out_path)
