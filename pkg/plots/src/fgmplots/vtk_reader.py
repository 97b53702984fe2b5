"""Reader for the legacy ASCII VTK files the optimizer writes.

Supports exactly the subset the runner emits: an unstructured grid of
nine-node biquadratic quads (cell type 28) with scalar/vector point data
and scalar cell data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["VtkMesh", "read_vtk", "VtkFormatError"]

BIQUADRATIC_QUAD = 28


class VtkFormatError(ValueError):
    pass


@dataclass
class VtkMesh:
    points: np.ndarray                 # (N, 3)
    cells: np.ndarray                  # (E, 9)
    point_scalars: dict = field(default_factory=dict)
    point_vectors: dict = field(default_factory=dict)
    cell_scalars: dict = field(default_factory=dict)

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def n_cells(self) -> int:
        return len(self.cells)


def _tokens(path: Path):
    with path.open() as fh:
        header = fh.readline()
        if not header.startswith("# vtk DataFile"):
            raise VtkFormatError(f"{path}: not a legacy VTK file")
        fh.readline()  # title
        fmt = fh.readline().strip()
        if fmt != "ASCII":
            raise VtkFormatError(f"{path}: only ASCII VTK is supported, got {fmt!r}")
        for line in fh:
            yield from line.split()


def read_vtk(path) -> VtkMesh:
    path = Path(path)
    it = _tokens(path)

    def take() -> str:
        try:
            return next(it)
        except StopIteration:
            raise VtkFormatError(f"{path}: unexpected end of file") from None

    def take_int() -> int:
        tok = take()
        try:
            return int(tok)
        except ValueError:
            raise VtkFormatError(f"{path}: expected integer, got {tok!r}") from None

    if (take(), take()) != ("DATASET", "UNSTRUCTURED_GRID"):
        raise VtkFormatError(f"{path}: expected DATASET UNSTRUCTURED_GRID")

    kw = take()
    if kw != "POINTS":
        raise VtkFormatError(f"{path}: expected POINTS, got {kw!r}")
    n_pts = take_int()
    take()  # dtype
    points = np.array([float(take()) for _ in range(3 * n_pts)]).reshape(n_pts, 3)

    kw = take()
    if kw != "CELLS":
        raise VtkFormatError(f"{path}: expected CELLS, got {kw!r}")
    n_cells = take_int()
    take_int()  # total size
    cells = np.empty((n_cells, 9), dtype=np.int64)
    for e in range(n_cells):
        count = take_int()
        if count != 9:
            raise VtkFormatError(f"{path}: cell {e} has {count} nodes, expected 9")
        for k in range(9):
            cells[e, k] = take_int()

    kw = take()
    if kw != "CELL_TYPES":
        raise VtkFormatError(f"{path}: expected CELL_TYPES, got {kw!r}")
    take_int()
    for e in range(n_cells):
        ct = take_int()
        if ct != BIQUADRATIC_QUAD:
            raise VtkFormatError(f"{path}: cell {e} has type {ct}, expected {BIQUADRATIC_QUAD}")

    mesh = VtkMesh(points=points, cells=cells)
    section = None
    section_n = 0
    while True:
        try:
            kw = next(it)
        except StopIteration:
            break
        if kw == "POINT_DATA":
            section, section_n = "point", take_int()
        elif kw == "CELL_DATA":
            section, section_n = "cell", take_int()
        elif kw == "SCALARS":
            name = take()
            take()  # dtype
            take()  # components
            lk = (take(), take())
            if lk != ("LOOKUP_TABLE", "default"):
                raise VtkFormatError(f"{path}: expected LOOKUP_TABLE default after SCALARS")
            values = np.array([float(take()) for _ in range(section_n)])
            if section == "point":
                mesh.point_scalars[name] = values
            elif section == "cell":
                mesh.cell_scalars[name] = values
            else:
                raise VtkFormatError(f"{path}: SCALARS outside a data section")
        elif kw == "VECTORS":
            name = take()
            take()  # dtype
            values = np.array([float(take()) for _ in range(3 * section_n)]).reshape(section_n, 3)
            if section != "point":
                raise VtkFormatError(f"{path}: VECTORS outside POINT_DATA")
            mesh.point_vectors[name] = values
        else:
            raise VtkFormatError(f"{path}: unexpected keyword {kw!r}")
    return mesh
