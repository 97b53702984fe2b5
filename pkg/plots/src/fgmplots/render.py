"""Render contour figures and convergence curves from run artifacts.

Point fields are drawn with a triangulation that subdivides every
nine-node quad into eight triangles through its mid-edge and center
nodes, so curved element boundaries show faithfully. Cell fields color
each element polygon by its value. The ceramic-fraction colorbar is
always pinned to [0, 1].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.collections import PolyCollection
from matplotlib.tri import Triangulation

from .vtk_reader import VtkMesh, read_vtk

__all__ = ["PlotJob", "RenderResult", "render", "FIELDS"]

FIELDS = ("vf", "stress", "temperature", "history")

# local node order: corners 0-3, mid-edges 4-7, center 8
_SUBQUADS = ((0, 4, 8, 7), (4, 1, 5, 8), (8, 5, 2, 6), (7, 8, 6, 3))


@dataclass
class PlotJob:
    input_dir: Path
    fields: str
    output: Path
    cmap: str = "viridis"
    vmin: float | None = None
    vmax: float | None = None
    dpi: int = 150

    def __post_init__(self):
        self.input_dir = Path(self.input_dir)
        self.output = Path(self.output)
        if self.fields not in FIELDS:
            raise ValueError(f"field must be one of {FIELDS}, got {self.fields!r}")
        if not self.input_dir.exists():
            raise FileNotFoundError(f"input directory {self.input_dir} does not exist")


@dataclass
class RenderResult:
    """What was drawn, for downstream checks without pixel inspection."""

    path: Path
    field: str
    clim: tuple[float, float] | None = None
    data_min: float | None = None
    data_max: float | None = None
    series: dict = field(default_factory=dict)


def _triangulate(mesh: VtkMesh) -> Triangulation:
    tris = []
    for conn in mesh.cells:
        for quad in _SUBQUADS:
            a, b, c, d = (conn[q] for q in quad)
            tris.append((a, b, c))
            tris.append((a, c, d))
    return Triangulation(mesh.points[:, 0], mesh.points[:, 1], np.array(tris))


def _element_outlines(mesh: VtkMesh) -> list[np.ndarray]:
    ring = (0, 4, 1, 5, 2, 6, 3, 7)
    return [mesh.points[conn[list(ring)], :2] for conn in mesh.cells]


def _draw_point_field(ax, mesh: VtkMesh, values, cmap, vmin, vmax):
    tri = _triangulate(mesh)
    levels = np.linspace(vmin, vmax, 21)
    cs = ax.tricontourf(tri, values, levels=levels, cmap=cmap, extend="both")
    return cs


def _history_series(path: Path) -> dict:
    gens, best, mean, feas = [], [], [], []
    with path.open(newline="") as fh:
        for row in csv.DictReader(fh):
            gens.append(int(row["generation"]))
            best.append(float(row["best_fitness"]))
            mean.append(float(row["mean_fitness"]))
            feas.append(float(row["feasible_fraction"]))
    if not gens:
        raise ValueError(f"{path}: history is empty")
    return {"generation": gens, "best_fitness": best,
            "mean_fitness": mean, "feasible_fraction": feas}


def render(job: PlotJob) -> RenderResult:
    """Render one figure; returns what was plotted for verification."""
    if job.fields == "history":
        series = _history_series(job.input_dir / "history.csv")
        fig, ax = plt.subplots(figsize=(5.2, 3.6))
        ax.plot(series["generation"], series["best_fitness"], lw=1.8, label="best")
        finite_mean = [m for m in series["mean_fitness"] if np.isfinite(m)]
        if finite_mean:
            ax.plot(series["generation"], series["mean_fitness"], lw=1.0,
                    alpha=0.6, label="population mean")
        ax.set_xlabel("generation")
        ax.set_ylabel("best fitness")
        ax.legend(frameon=False)
        ax.spines["top"].set_visible(False)
        ax.spines["right"].set_visible(False)
        fig.tight_layout()
        fig.savefig(job.output, dpi=job.dpi)
        plt.close(fig)
        return RenderResult(path=job.output, field="history", series=series)

    mesh = read_vtk(job.input_dir / "fields.vtk")
    if job.fields == "vf":
        values = mesh.point_scalars.get("volume_fraction")
        if values is None:
            raise ValueError("fields.vtk has no volume_fraction point data")
        vmin, vmax = 0.0, 1.0  # fraction colorbar is always the physical range
        title, unit = "ceramic volume fraction", ""
    elif job.fields == "temperature":
        values = mesh.point_scalars.get("temperature")
        if values is None:
            raise ValueError("fields.vtk has no temperature point data")
        vmin = job.vmin if job.vmin is not None else float(values.min())
        vmax = job.vmax if job.vmax is not None else float(values.max())
        title, unit = "temperature rise", "deg C"
    else:  # stress
        values = mesh.cell_scalars.get("von_mises_mean")
        if values is None:
            raise ValueError("fields.vtk has no von_mises_mean cell data")
        values = values / 1.0e6
        vmin = job.vmin if job.vmin is not None else float(values.min())
        vmax = job.vmax if job.vmax is not None else float(values.max())
        title, unit = "von Mises stress (element mean)", "MPa"

    if vmax <= vmin:
        vmax = vmin + 1.0

    fig, ax = plt.subplots(figsize=(5.6, 4.4))
    if job.fields == "stress":
        polys = PolyCollection(_element_outlines(mesh), array=values,
                               cmap=job.cmap, edgecolors="none")
        polys.set_clim(vmin, vmax)
        ax.add_collection(polys)
        ax.autoscale_view()
        mappable = polys
    else:
        mappable = _draw_point_field(ax, mesh, values, job.cmap, vmin, vmax)
    cb = fig.colorbar(mappable, ax=ax, shrink=0.9)
    if unit:
        cb.set_label(unit)
    ax.set_aspect("equal")
    ax.set_title(title)
    ax.set_xticks([])
    ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(job.output, dpi=job.dpi)
    plt.close(fig)
    return RenderResult(
        path=job.output,
        field=job.fields,
        clim=(vmin, vmax),
        data_min=float(np.min(values)),
        data_max=float(np.max(values)),
    )
