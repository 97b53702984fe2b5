"""2D meshes of nine-node (biquadratic) quadrilateral elements.

A mesh is immutable once constructed: coordinates, connectivity and named
boundary sets are frozen arrays, so meshes can be shared freely across
concurrent profile evaluations.

Local node ordering of an element: corners counterclockwise starting at
(-1,-1), then mid-edge nodes counterclockwise, then the center node::

    3---6---2
    |       |
    7   8   5
    |       |
    0---4---1

Local edges are numbered 0..3 counterclockwise starting at the bottom
(eta = -1) edge; edge e carries nodes ``EDGE_NODES[e]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Node",
    "Quad9Element",
    "BoundarySet",
    "Mesh",
    "MeshError",
    "MeshFormatError",
    "generate_rectangle",
    "load_mesh",
    "save_mesh",
    "shape_functions",
    "shape_gradients",
    "GAUSS_PTS",
    "GAUSS_WTS",
    "EDGE_NODES",
]


class MeshError(ValueError):
    """Invalid mesh data (connectivity, geometry, boundary sets)."""


class MeshFormatError(MeshError):
    """Malformed mesh file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# local parametric coordinates of the nine nodes
NODE_XI = np.array([-1.0, 1.0, 1.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0])
NODE_ETA = np.array([-1.0, -1.0, 1.0, 1.0, -1.0, 0.0, 1.0, 0.0, 0.0])

# edge -> (corner, mid, corner) local node triples, counterclockwise
EDGE_NODES = ((0, 4, 1), (1, 5, 2), (2, 6, 3), (3, 7, 0))

# 3-point Gauss-Legendre rule on [-1, 1]
_G = np.sqrt(3.0 / 5.0)
GAUSS_1D = np.array([-_G, 0.0, _G])
GAUSS_1D_WTS = np.array([5.0, 8.0, 5.0]) / 9.0

# 3x3 tensor-product rule; point index g = 3*i + j with xi = GAUSS_1D[i]
GAUSS_PTS = np.array([(xi, eta) for xi in GAUSS_1D for eta in GAUSS_1D])
GAUSS_WTS = np.array([wi * wj for wi in GAUSS_1D_WTS for wj in GAUSS_1D_WTS])


def _lagrange_quad(p: float, t):
    """1D quadratic Lagrange basis anchored at p in {-1, 0, +1}."""
    if p < 0:
        return 0.5 * t * (t - 1.0)
    if p > 0:
        return 0.5 * t * (t + 1.0)
    return 1.0 - t * t


def _lagrange_quad_d(p: float, t):
    if p < 0:
        return t - 0.5
    if p > 0:
        return t + 0.5
    return -2.0 * t


def shape_functions(xi, eta) -> np.ndarray:
    """Biquadratic shape functions N_a(xi, eta), shape (..., 9)."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    out = np.stack(
        [_lagrange_quad(NODE_XI[a], xi) * _lagrange_quad(NODE_ETA[a], eta) for a in range(9)],
        axis=-1,
    )
    return out


def shape_gradients(xi, eta) -> np.ndarray:
    """Parametric gradients dN_a/d(xi,eta), shape (..., 9, 2)."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    dxi = [_lagrange_quad_d(NODE_XI[a], xi) * _lagrange_quad(NODE_ETA[a], eta) for a in range(9)]
    deta = [_lagrange_quad(NODE_XI[a], xi) * _lagrange_quad_d(NODE_ETA[a], eta) for a in range(9)]
    return np.stack([np.stack(dxi, axis=-1), np.stack(deta, axis=-1)], axis=-1)


# tables at the 3x3 Gauss points: N_TABLE (9 pts, 9 nodes), DN_TABLE (9 pts, 9 nodes, 2)
N_TABLE = shape_functions(GAUSS_PTS[:, 0], GAUSS_PTS[:, 1])
DN_TABLE = shape_gradients(GAUSS_PTS[:, 0], GAUSS_PTS[:, 1])

# 1D quadratic edge basis at the 3-point rule, node order (corner, mid, corner)
EDGE_N_TABLE = np.stack(
    [_lagrange_quad(p, GAUSS_1D) for p in (-1.0, 0.0, 1.0)], axis=-1
)
EDGE_DN_TABLE = np.stack(
    [_lagrange_quad_d(p, GAUSS_1D) for p in (-1.0, 0.0, 1.0)], axis=-1
)


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class Quad9Element:
    node_ids: tuple[int, ...]

    def __post_init__(self):
        if len(self.node_ids) != 9:
            raise MeshError(f"element needs 9 nodes, got {len(self.node_ids)}")


@dataclass
class BoundarySet:
    """Named set of boundary nodes plus the (element, local edge) pairs it covers."""

    name: str
    node_ids: np.ndarray
    edge_list: list[tuple[int, int]] = field(default_factory=list)


class Mesh:
    """Nine-node quadrilateral mesh of an arbitrary 2D domain.

    Parameters
    ----------
    coords : (N, 2) array of nodal coordinates.
    elements : (E, 9) integer connectivity in the local ordering above.
    boundary_sets : mapping of name -> BoundarySet.
    """

    def __init__(self, coords, elements, boundary_sets=None, validate: bool = True):
        coords = np.ascontiguousarray(coords, dtype=float)
        elements = np.ascontiguousarray(elements, dtype=np.int64)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise MeshError(f"coords must be (N, 2), got {coords.shape}")
        if elements.ndim != 2 or elements.shape[1] != 9:
            raise MeshError(f"elements must be (E, 9), got {elements.shape}")
        self.coords = coords
        self.elements = elements
        self.boundary_sets: dict[str, BoundarySet] = dict(boundary_sets or {})

        self.corner_node_ids = np.unique(elements[:, :4]) if len(elements) else np.empty(0, np.int64)
        self.corner_pos = np.full(len(coords), -1, dtype=np.int64)
        self.corner_pos[self.corner_node_ids] = np.arange(len(self.corner_node_ids))

        self._geom = None
        self._boundary_nodes = None
        if validate:
            self._validate()
        for arr in (self.coords, self.elements, self.corner_node_ids, self.corner_pos):
            arr.flags.writeable = False

    # ------------------------------------------------------------------
    @property
    def n_nodes(self) -> int:
        return len(self.coords)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_corner_nodes(self) -> int:
        return len(self.corner_node_ids)

    def node(self, i: int) -> Node:
        return Node(int(i), float(self.coords[i, 0]), float(self.coords[i, 1]))

    def element(self, e: int) -> Quad9Element:
        return Quad9Element(tuple(int(n) for n in self.elements[e]))

    def element_coords(self, e: int) -> np.ndarray:
        return self.coords[self.elements[e]]

    # ------------------------------------------------------------------
    def geometry(self):
        """Per-element quadrature geometry, computed once and cached.

        Returns (det_j, grad_n, gauss_xy):
          det_j   (E, 9)        Jacobian determinant at each Gauss point
          grad_n  (E, 9, 9, 2)  spatial shape-function gradients
          gauss_xy(E, 9, 2)     Gauss point physical coordinates
        """
        if self._geom is None:
            ecoords = self.coords[self.elements]  # (E, 9, 2)
            # J[e, g, i, j] = d x_i / d xi_j
            jac = np.einsum("eni,gnj->egij", ecoords, DN_TABLE)
            det_j = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
            inv = np.empty_like(jac)
            inv[..., 0, 0] = jac[..., 1, 1]
            inv[..., 1, 1] = jac[..., 0, 0]
            inv[..., 0, 1] = -jac[..., 0, 1]
            inv[..., 1, 0] = -jac[..., 1, 0]
            inv /= det_j[..., None, None]
            # grad_n[e, g, n, i] = sum_j dN[g, n, j] * d xi_j / d x_i
            grad_n = np.einsum("gnj,egji->egni", DN_TABLE, inv)
            gauss_xy = np.einsum("gn,eni->egi", N_TABLE, ecoords)
            self._geom = (det_j, grad_n, gauss_xy)
        return self._geom

    def element_areas(self) -> np.ndarray:
        det_j, _, _ = self.geometry()
        return det_j @ GAUSS_WTS

    def total_area(self) -> float:
        return float(self.element_areas().sum())

    def pairwise_sq_distances(self, a, b) -> np.ndarray:
        """Squared Euclidean distances between node sets a and b, shape (|a|, |b|)."""
        pa = self.coords[np.asarray(a, dtype=np.int64)]
        pb = self.coords[np.asarray(b, dtype=np.int64)]
        diff = pa[:, None, :] - pb[None, :, :]
        return np.einsum("abi,abi->ab", diff, diff)

    def boundary_nodes(self) -> np.ndarray:
        """Nodes lying on the geometric boundary (edges used by exactly one element)."""
        if self._boundary_nodes is None:
            counts: dict[tuple[int, int], int] = {}
            members: dict[tuple[int, int], tuple[int, ...]] = {}
            for conn in self.elements:
                for le in range(4):
                    tri = tuple(int(conn[k]) for k in EDGE_NODES[le])
                    key = (min(tri[0], tri[2]), max(tri[0], tri[2]))
                    counts[key] = counts.get(key, 0) + 1
                    members[key] = tri
            nodes: set[int] = set()
            for key, c in counts.items():
                if c == 1:
                    nodes.update(members[key])
            self._boundary_nodes = np.array(sorted(nodes), dtype=np.int64)
        return self._boundary_nodes

    def boundary_edges(self) -> list[tuple[int, int]]:
        """All (element, local edge) pairs lying on the geometric boundary."""
        counts: dict[tuple[int, int], int] = {}
        where: dict[tuple[int, int], tuple[int, int]] = {}
        for e, conn in enumerate(self.elements):
            for le in range(4):
                tri = EDGE_NODES[le]
                key = (min(int(conn[tri[0]]), int(conn[tri[2]])), max(int(conn[tri[0]]), int(conn[tri[2]])))
                counts[key] = counts.get(key, 0) + 1
                where[key] = (e, le)
        return [where[k] for k, c in counts.items() if c == 1]

    # ------------------------------------------------------------------
    def _validate(self):
        n = self.n_nodes
        if not np.all(np.isfinite(self.coords)):
            raise MeshError("non-finite node coordinates")
        if self.n_elements == 0:
            raise MeshError("mesh has no elements")
        if self.elements.min() < 0 or self.elements.max() >= n:
            bad = int(self.elements.max() if self.elements.max() >= n else self.elements.min())
            raise MeshError(f"element references nonexistent node {bad}")
        det_j, _, _ = self.geometry()
        if det_j.min() <= 0.0:
            e, g = np.unravel_index(int(det_j.argmin()), det_j.shape)
            raise MeshError(
                f"element {e} is inverted: Jacobian determinant {det_j[e, g]:.3e} "
                f"at Gauss point {g}"
            )
        used = np.zeros(n, dtype=bool)
        used[self.elements.ravel()] = True
        bnodes = set(int(i) for i in self.boundary_nodes())
        for name, bset in self.boundary_sets.items():
            bset.node_ids = np.asarray(bset.node_ids, dtype=np.int64)
            if len(bset.node_ids) and (bset.node_ids.min() < 0 or bset.node_ids.max() >= n):
                raise MeshError(f"boundary set {name!r} references nonexistent nodes")
            if not used[bset.node_ids].all():
                raise MeshError(f"boundary set {name!r} has nodes not used by any element")
            off = [int(i) for i in bset.node_ids if int(i) not in bnodes]
            if off:
                raise MeshError(
                    f"boundary set {name!r} node {off[0]} does not lie on the mesh boundary"
                )


# ----------------------------------------------------------------------
# generators and I/O
# ----------------------------------------------------------------------

def generate_rectangle(width: float, height: float, nx: int, ny: int) -> Mesh:
    """Structured nx-by-ny element mesh of a [0,w] x [0,h] rectangle.

    Produces (2*nx+1)*(2*ny+1) nodes and boundary sets "left", "right",
    "top", "bottom" (with edge lists).
    """
    if width <= 0 or height <= 0:
        raise MeshError(f"rectangle dimensions must be positive, got {width} x {height}")
    if nx < 1 or ny < 1:
        raise MeshError(f"element counts must be >= 1, got {nx} x {ny}")
    mx, my = 2 * nx + 1, 2 * ny + 1
    xs = np.linspace(0.0, width, mx)
    ys = np.linspace(0.0, height, my)

    def nid(i, j):
        return j * mx + i

    coords = np.empty((mx * my, 2))
    for j in range(my):
        for i in range(mx):
            coords[nid(i, j)] = (xs[i], ys[j])

    elements = np.empty((nx * ny, 9), dtype=np.int64)
    for ey in range(ny):
        for ex in range(nx):
            i0, j0 = 2 * ex, 2 * ey
            elements[ey * nx + ex] = [
                nid(i0, j0), nid(i0 + 2, j0), nid(i0 + 2, j0 + 2), nid(i0, j0 + 2),
                nid(i0 + 1, j0), nid(i0 + 2, j0 + 1), nid(i0 + 1, j0 + 2), nid(i0, j0 + 1),
                nid(i0 + 1, j0 + 1),
            ]

    def elem(ex, ey):
        return ey * nx + ex

    sets = {
        "left": BoundarySet(
            "left",
            np.array([nid(0, j) for j in range(my)]),
            [(elem(0, ey), 3) for ey in range(ny)],
        ),
        "right": BoundarySet(
            "right",
            np.array([nid(mx - 1, j) for j in range(my)]),
            [(elem(nx - 1, ey), 1) for ey in range(ny)],
        ),
        "bottom": BoundarySet(
            "bottom",
            np.array([nid(i, 0) for i in range(mx)]),
            [(elem(ex, 0), 0) for ex in range(nx)],
        ),
        "top": BoundarySet(
            "top",
            np.array([nid(i, my - 1) for i in range(mx)]),
            [(elem(ex, ny - 1), 2) for ex in range(nx)],
        ),
    }
    return Mesh(coords, elements, sets)


def load_mesh(path) -> Mesh:
    """Read a mesh from the neutral whitespace-delimited text format.

    Layout: a header ``nodes <N> elements <E>``, then N lines ``id x y``,
    then E lines ``id n0 .. n8``, then zero or more blocks
    ``boundary <name> <count>`` followed by <count> node ids (any line
    wrapping). ``#`` starts a comment; indices are 0-based.
    """
    path = Path(path)
    tokens: list[tuple[str, int]] = []
    with path.open() as fh:
        for lno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0]
            tokens.extend((tok, lno) for tok in line.split())

    pos = 0

    def take(what: str) -> tuple[str, int]:
        nonlocal pos
        if pos >= len(tokens):
            last = tokens[-1][1] if tokens else 1
            raise MeshFormatError(f"unexpected end of file while reading {what}", last)
        tok = tokens[pos]
        pos += 1
        return tok

    def take_int(what: str) -> tuple[int, int]:
        tok, lno = take(what)
        try:
            return int(tok), lno
        except ValueError:
            raise MeshFormatError(f"expected integer for {what}, got {tok!r}", lno) from None

    def take_float(what: str) -> tuple[float, int]:
        tok, lno = take(what)
        try:
            return float(tok), lno
        except ValueError:
            raise MeshFormatError(f"expected number for {what}, got {tok!r}", lno) from None

    kw, lno = take("header")
    if kw != "nodes":
        raise MeshFormatError(f"expected header keyword 'nodes', got {kw!r}", lno)
    n_nodes, _ = take_int("node count")
    kw, lno = take("header")
    if kw != "elements":
        raise MeshFormatError(f"expected header keyword 'elements', got {kw!r}", lno)
    n_elem, _ = take_int("element count")
    if n_nodes <= 0 or n_elem <= 0:
        raise MeshFormatError(f"empty mesh declared ({n_nodes} nodes, {n_elem} elements)", lno)

    coords = np.empty((n_nodes, 2))
    seen = np.zeros(n_nodes, dtype=bool)
    for _ in range(n_nodes):
        nid, lno = take_int("node id")
        if not 0 <= nid < n_nodes:
            raise MeshFormatError(f"node id {nid} out of range 0..{n_nodes - 1}", lno)
        if seen[nid]:
            raise MeshFormatError(f"duplicate node id {nid}", lno)
        seen[nid] = True
        coords[nid, 0], _ = take_float("x")
        coords[nid, 1], _ = take_float("y")

    elements = np.empty((n_elem, 9), dtype=np.int64)
    eseen = np.zeros(n_elem, dtype=bool)
    for _ in range(n_elem):
        eid, lno = take_int("element id")
        if not 0 <= eid < n_elem:
            raise MeshFormatError(f"element id {eid} out of range 0..{n_elem - 1}", lno)
        if eseen[eid]:
            raise MeshFormatError(f"duplicate element id {eid}", lno)
        eseen[eid] = True
        for k in range(9):
            nid, nlno = take_int("element node")
            if not 0 <= nid < n_nodes:
                raise MeshFormatError(f"element {eid} references nonexistent node {nid}", nlno)
            elements[eid, k] = nid

    sets: dict[str, BoundarySet] = {}
    while pos < len(tokens):
        kw, lno = take("boundary block")
        if kw != "boundary":
            raise MeshFormatError(f"expected 'boundary', got {kw!r}", lno)
        name, _ = take("boundary name")
        count, _ = take_int("boundary node count")
        ids = np.empty(count, dtype=np.int64)
        for k in range(count):
            nid, nlno = take_int("boundary node id")
            if not 0 <= nid < n_nodes:
                raise MeshFormatError(f"boundary {name!r} references nonexistent node {nid}", nlno)
            ids[k] = nid
        if name in sets:
            raise MeshFormatError(f"duplicate boundary set {name!r}", lno)
        sets[name] = BoundarySet(name, ids)

    try:
        mesh = Mesh(coords, elements, sets)
    except MeshError as exc:
        raise MeshError(f"{path.name}: {exc}") from exc

    # derive edge lists: boundary edges whose three nodes all belong to the set
    for name, bset in mesh.boundary_sets.items():
        member = np.zeros(n_nodes, dtype=bool)
        member[bset.node_ids] = True
        edges = []
        for e, le in mesh.boundary_edges():
            tri = [int(mesh.elements[e, k]) for k in EDGE_NODES[le]]
            if member[tri].all():
                edges.append((e, le))
        bset.edge_list = sorted(edges)
    return mesh


def save_mesh(mesh: Mesh, path) -> None:
    """Write a mesh in the neutral text format read by :func:`load_mesh`."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"nodes {mesh.n_nodes} elements {mesh.n_elements}\n")
        for i, (x, y) in enumerate(mesh.coords):
            fh.write(f"{i} {float(x)!r} {float(y)!r}\n")
        for e, conn in enumerate(mesh.elements):
            fh.write(f"{e} " + " ".join(str(int(n)) for n in conn) + "\n")
        for name, bset in mesh.boundary_sets.items():
            fh.write(f"boundary {name} {len(bset.node_ids)}\n")
            ids = [str(int(i)) for i in bset.node_ids]
            for k in range(0, len(ids), 16):
                fh.write(" ".join(ids[k:k + 16]) + "\n")
