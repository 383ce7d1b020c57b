"""PNG renderings of an occurrence map, written next to ``heatmap.csv``."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiment import OccurrenceMap  # noqa: E402

# no timestamps or version strings, so identical runs give identical bytes
PNG_METADATA = {"Software": None}

# (file name, kept axes, summed axis, x label, y label)
VIEWS = (
    ("heatmap_angle_velocity.png", (0, 1), 2, "angle (deg)", "velocity (m/s)"),
    ("heatmap_velocity_range.png", (1, 2), 0, "velocity (m/s)", "range (m)"),
)


def _cube(occ: OccurrenceMap):
    """Counts and truth flags on the (angle, velocity, range) lattice."""
    axes = [occ.grid.angle_axis, occ.grid.velocity_axis, occ.grid.range_axis]
    cube = np.zeros([ax.size for ax in axes])
    truth = np.zeros_like(cube, dtype=bool)
    for n, p in enumerate(occ.grid.points):
        idx = tuple(int(np.argmin(np.abs(ax - x))) for ax, x in zip(axes, p))
        cube[idx] += occ.counts[n]
        truth[idx] |= n in occ.truth
    return cube, axes, truth


def render_heatmaps(occ: OccurrenceMap, out_dir) -> list[Path]:
    """Counts summed over one axis per view; truth cells ringed in red."""
    cube, axes, truth = _cube(occ)
    labels = [np.degrees(axes[0]), axes[1], axes[2]]
    paths = []
    for name, (ix, iy), summed, xlabel, ylabel in VIEWS:
        img = cube.sum(axis=summed)
        mark = truth.any(axis=summed)
        fig, ax = plt.subplots(figsize=(5, 4))
        x, y = labels[ix], labels[iy]
        im = ax.imshow(img.T, origin="lower", aspect="auto", cmap="Greys", interpolation="nearest",
                       extent=_extent(x) + _extent(y), vmin=0)
        tx, ty = np.nonzero(mark)
        ax.scatter(x[tx], y[ty], s=60, facecolors="none", edgecolors="red", linewidths=1.2)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(f"detections over {occ.trials} trials")
        fig.colorbar(im, ax=ax, label="count")
        fig.tight_layout()
        path = Path(out_dir) / name
        fig.savefig(path, dpi=100, metadata=PNG_METADATA)
        plt.close(fig)
        paths.append(path)
    return paths


def _extent(values: np.ndarray) -> list[float]:
    half = (values[1] - values[0]) / 2 if values.size > 1 else 0.5
    return [float(values[0] - half), float(values[-1] + half)]

