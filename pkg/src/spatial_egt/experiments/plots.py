"""Rendered figures (derived artifacts; never read back)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import io  # noqa: E402


def ide_figures(fields: dict, out: Path, summary: dict) -> list:
    """Space-time maps (1-D) or final heatmaps with contours (2-D), plus averages over time."""
    paths = []
    first = next(iter(fields.values()))[0]
    grid = first.grid
    if grid.ndim == 1:
        x = grid.axes()[0]
        fig, axes = plt.subplots(1, len(fields), figsize=(4.5 * len(fields), 3.6), squeeze=False)
        for ax, (name, traj) in zip(axes[0], fields.items()):
            t = np.array([f.time for f in traj])
            P = np.stack([f.p for f in traj])
            im = ax.pcolormesh(x, t, P, shading="auto", vmin=0, vmax=1, cmap="viridis")
            ax.set(title=name, xlabel="x", ylabel="t")
        fig.colorbar(im, ax=axes[0].tolist(), label="p")
        paths.append(_save(fig, out / "spacetime.png"))
        fig, ax = plt.subplots(figsize=(5, 3.6))
        for name, traj in fields.items():
            ax.plot(x, traj[-1].p, label=f"{name} (t={traj[-1].time:g})")
        ax.set(xlabel="x", ylabel="p", ylim=(-0.05, 1.05))
        ax.legend(fontsize=8)
        paths.append(_save(fig, out / "final_profiles.png"))
    else:
        X, Y = grid.coords()
        fig, axes = plt.subplots(1, len(fields), figsize=(4.5 * len(fields), 4), squeeze=False)
        for ax, (name, traj) in zip(axes[0], fields.items()):
            p = traj[-1].p
            im = ax.pcolormesh(X, Y, p, shading="auto", cmap="viridis")
            ax.contour(X, Y, p, levels=6, colors="k", linewidths=0.6)
            ax.set(title=f"{name}, t={traj[-1].time:g}", aspect="equal")
            fig.colorbar(im, ax=ax)
        paths.append(_save(fig, out / "final_fields.png"))
    rows = io.read_csv(out / "averages.csv") if (out / "averages.csv").exists() else []
    if rows:
        fig, ax = plt.subplots(figsize=(5, 3.6))
        for name in dict.fromkeys(r["branch"] for r in rows):
            sel = [r for r in rows if r["branch"] == name]
            ax.plot([float(r["time"]) for r in sel], [float(r["mean_f1"]) for r in sel], label=name)
        ax.set(xlabel="t", ylabel="spatial average of p")
        ax.legend(fontsize=8)
        paths.append(_save(fig, out / "averages.png"))
    return paths


def dispersion_figures(out: Path, names) -> list:
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for name in names:
        rows = io.read_csv(out / f"dispersion_{name}.csv")
        if "k" not in rows[0]:
            continue
        k = [int(r["k"]) for r in rows]
        ax.plot(k, [float(r["lambda"]) for r in rows], "o-", ms=3, label=name)
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set(xlabel="k", ylabel="lambda(k)")
    ax.legend(fontsize=8)
    return [_save(fig, out / "dispersion.png")]


def _save(fig, path: Path) -> Path:
    fig.savefig(path, dpi=110, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path
