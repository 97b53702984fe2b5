"""Legacy ASCII VTK output of meshes and solution fields.

Elements are written as biquadratic quads (cell type 28), whose node
ordering matches the mesh convention, so files open directly in standard
viewers. Point data carries temperature, displacement and the ceramic
fraction; cell data carries the element-mean von Mises stress.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .mesh import Mesh

__all__ = ["write_vtk"]

VTK_BIQUADRATIC_QUAD = 28


def _write_scalars(fh, name: str, values: np.ndarray):
    fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
    for v in values:
        fh.write(f"{float(v)!r}\n")


def write_vtk(
    path,
    mesh: Mesh,
    point_scalars: dict[str, np.ndarray] | None = None,
    point_vectors: dict[str, np.ndarray] | None = None,
    cell_scalars: dict[str, np.ndarray] | None = None,
    title: str = "fgmopt output",
) -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(title[:250] + "\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {mesh.n_nodes} double\n")
        for x, y in mesh.coords:
            fh.write(f"{x!r} {y!r} 0.0\n")
        fh.write(f"CELLS {mesh.n_elements} {mesh.n_elements * 10}\n")
        for conn in mesh.elements:
            fh.write("9 " + " ".join(str(int(n)) for n in conn) + "\n")
        fh.write(f"CELL_TYPES {mesh.n_elements}\n")
        for _ in range(mesh.n_elements):
            fh.write(f"{VTK_BIQUADRATIC_QUAD}\n")

        if point_scalars or point_vectors:
            fh.write(f"POINT_DATA {mesh.n_nodes}\n")
            for name, values in (point_scalars or {}).items():
                if len(values) != mesh.n_nodes:
                    raise ValueError(f"point data {name!r} has {len(values)} values, "
                                     f"mesh has {mesh.n_nodes} nodes")
                _write_scalars(fh, name, values)
            for name, vec in (point_vectors or {}).items():
                vec = np.asarray(vec, dtype=float)
                if vec.shape != (mesh.n_nodes, 2):
                    raise ValueError(f"vector data {name!r} must be (N, 2), got {vec.shape}")
                fh.write(f"VECTORS {name} double\n")
                for vx, vy in vec:
                    fh.write(f"{vx!r} {vy!r} 0.0\n")
        if cell_scalars:
            fh.write(f"CELL_DATA {mesh.n_elements}\n")
            for name, values in cell_scalars.items():
                if len(values) != mesh.n_elements:
                    raise ValueError(f"cell data {name!r} has {len(values)} values, "
                                     f"mesh has {mesh.n_elements} elements")
                _write_scalars(fh, name, values)
