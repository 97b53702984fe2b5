"""Steady-state heat conduction on nine-node quadrilateral meshes.

Conductivity is evaluated at the 3x3 Gauss points from the bilinearly
interpolated ceramic fraction; Dirichlet values are imposed exactly by
eliminating constrained rows and columns. Edge terms (prescribed flux and
convection) use 3-point Gauss quadrature on the quadratic edges.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field as dfield
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .materials import MaterialPair, VolumeFractionField, bilinear_shape, blend_arrays, element_corner_values
from .mesh import (
    EDGE_DN_TABLE,
    EDGE_N_TABLE,
    EDGE_NODES,
    GAUSS_1D_WTS,
    GAUSS_PTS,
    GAUSS_WTS,
    Mesh,
    N_TABLE,
    NODE_ETA,
    NODE_XI,
)

__all__ = [
    "ThermalBCs",
    "TemperatureField",
    "SolverError",
    "assemble_and_solve_thermal",
    "temperature_at_gauss_points",
]

ValueLike = float | Callable[[np.ndarray, np.ndarray], np.ndarray]

# bilinear shape values at the local positions of all nine nodes; used to
# spread a corner-node field onto mid-edge and center nodes consistently
N4_AT_NODES = bilinear_shape(NODE_XI, NODE_ETA)  # (9, 4)
N4_GAUSS = bilinear_shape(GAUSS_PTS[:, 0], GAUSS_PTS[:, 1])  # (9 Gauss pts, 4 corners)


class SolverError(RuntimeError):
    """Finite element system could not be solved."""


@dataclass
class ThermalBCs:
    """Thermal boundary conditions keyed by boundary-set name.

    dirichlet: (set name, value) with value a constant or f(x, y)
    flux: (set name, prescribed normal flux) entering the domain, W/m^2
    convection: (set name, h, t_inf)
    heat_source: volumetric source, constant or f(x, y), W/m^3
    """

    dirichlet: list[tuple[str, ValueLike]] = dfield(default_factory=list)
    flux: list[tuple[str, ValueLike]] = dfield(default_factory=list)
    convection: list[tuple[str, float, float]] = dfield(default_factory=list)
    heat_source: ValueLike = 0.0


@dataclass
class TemperatureField:
    """Nodal temperatures over all mesh nodes (quadratic interpolation)."""

    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)


def _eval_value(value: ValueLike, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if callable(value):
        return np.broadcast_to(np.asarray(value(x, y), dtype=float), x.shape).copy()
    return np.full(x.shape, float(value))


def _edge_geometry(mesh: Mesh, e: int, ledge: int):
    """Edge node ids, Gauss coordinates and arc-length scale factors."""
    ids = mesh.elements[e, list(EDGE_NODES[ledge])]
    pts = mesh.coords[ids]                      # (3, 2)
    xy = EDGE_N_TABLE @ pts                     # (3 gauss, 2)
    tangent = EDGE_DN_TABLE @ pts               # (3 gauss, 2)
    scale = np.hypot(tangent[:, 0], tangent[:, 1])
    return ids, xy, scale


def conductivity_at_gauss(mesh: Mesh, field: VolumeFractionField, pair: MaterialPair) -> np.ndarray:
    vc = element_corner_values(mesh, field) @ N4_GAUSS.T  # (E, 9)
    return blend_arrays(pair, vc).k


# per-mesh integrand tensor of weighted grad-grad products, (E, 9, 9, 9)
_COND_CACHE: "weakref.WeakKeyDictionary[Mesh, np.ndarray]" = weakref.WeakKeyDictionary()


def _conduction_tensor(mesh: Mesh) -> np.ndarray:
    tensor = _COND_CACHE.get(mesh)
    if tensor is None:
        det_j, grad_n, _ = mesh.geometry()
        tensor = np.einsum("g,eg,egai,egbi->egab", GAUSS_WTS, det_j, grad_n, grad_n, optimize=True)
        _COND_CACHE[mesh] = tensor
    return tensor


def assemble_conductivity(mesh: Mesh, k_gauss: np.ndarray) -> sp.csr_matrix:
    """Global conduction matrix from per-Gauss-point conductivities (E, 9)."""
    ke = np.einsum("eg,egab->eab", k_gauss, _conduction_tensor(mesh))
    rows = np.broadcast_to(mesh.elements[:, :, None], ke.shape)
    cols = np.broadcast_to(mesh.elements[:, None, :], ke.shape)
    n = mesh.n_nodes
    return sp.coo_matrix((ke.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)).tocsr()


def _source_vector(mesh: Mesh, source: ValueLike) -> np.ndarray:
    f = np.zeros(mesh.n_nodes)
    if not callable(source) and float(source) == 0.0:
        return f
    det_j, _, gauss_xy = mesh.geometry()
    q = _eval_value(source, gauss_xy[..., 0], gauss_xy[..., 1])  # (E, 9)
    fe = np.einsum("g,eg,eg,ga->ea", GAUSS_WTS, det_j, q, N_TABLE, optimize=True)
    np.add.at(f, mesh.elements.ravel(), fe.ravel())
    return f


def _get_set(mesh: Mesh, name: str):
    try:
        return mesh.boundary_sets[name]
    except KeyError:
        raise KeyError(
            f"mesh has no boundary set {name!r}; available: {sorted(mesh.boundary_sets)}"
        ) from None


def _solve_reduced(k: sp.csr_matrix, f: np.ndarray, fixed_idx: np.ndarray,
                   fixed_val: np.ndarray, context: str) -> np.ndarray:
    """Solve K x = f with prescribed entries eliminated exactly."""
    n = k.shape[0]
    free = np.setdiff1d(np.arange(n), fixed_idx)
    x = np.zeros(n)
    x[fixed_idx] = fixed_val
    rhs = f[free]
    if len(fixed_idx):
        rhs = rhs - k[free][:, fixed_idx] @ fixed_val
    try:
        # minimum-degree on A^T+A suits the symmetric positive-definite systems here
        lu = spla.splu(k[free][:, free].tocsc(), permc_spec="MMD_AT_PLUS_A")
        x[free] = lu.solve(rhs)
    except RuntimeError as exc:
        raise SolverError(f"{context}: factorization failed ({exc})") from exc
    if not np.all(np.isfinite(x)):
        raise SolverError(f"{context}: solution is not finite (singular system?)")
    return x


def _assemble_thermal_system(
    mesh: Mesh,
    field: VolumeFractionField,
    pair: MaterialPair,
    bcs: ThermalBCs,
):
    """Full system (K, F, fixed indices, fixed values) before elimination."""
    # Dirichlet bookkeeping first: detect floating problems and overlaps early
    dir_nodes: list[int] = []
    dir_vals: list[float] = []
    claimed: dict[int, str] = {}
    for name, value in bcs.dirichlet:
        bset = _get_set(mesh, name)
        for nid in bset.node_ids:
            nid = int(nid)
            if nid in claimed and claimed[nid] != name:
                raise ValueError(
                    f"node {nid} appears in Dirichlet sets {claimed[nid]!r} and {name!r}"
                )
            claimed[nid] = name
        x, y = mesh.coords[bset.node_ids, 0], mesh.coords[bset.node_ids, 1]
        vals = _eval_value(value, x, y)
        dir_nodes.extend(int(i) for i in bset.node_ids)
        dir_vals.extend(float(v) for v in vals)
    if not dir_nodes and not bcs.convection:
        raise SolverError(
            "floating thermal problem: no Dirichlet or convection boundary anywhere"
        )
    # deduplicate repeated nodes within one set / shared corners of one set
    fixed: dict[int, float] = {}
    for nid, v in zip(dir_nodes, dir_vals):
        fixed[nid] = v
    fixed_idx = np.array(sorted(fixed), dtype=np.int64)
    fixed_val = np.array([fixed[i] for i in fixed_idx])

    k_gauss = conductivity_at_gauss(mesh, field, pair)
    k_mat = assemble_conductivity(mesh, k_gauss)
    f = _source_vector(mesh, bcs.heat_source)

    for name, qhat in bcs.flux:
        bset = _get_set(mesh, name)
        for e, le in bset.edge_list:
            ids, xy, scale = _edge_geometry(mesh, e, le)
            q = _eval_value(qhat, xy[:, 0], xy[:, 1])
            f[ids] += (GAUSS_1D_WTS * scale * q) @ EDGE_N_TABLE

    conv_rows, conv_cols, conv_data = [], [], []
    for name, h, t_inf in bcs.convection:
        if h < 0:
            raise ValueError(f"convection coefficient must be >= 0, got {h}")
        bset = _get_set(mesh, name)
        for e, le in bset.edge_list:
            ids, _, scale = _edge_geometry(mesh, e, le)
            w = GAUSS_1D_WTS * scale
            he = h * np.einsum("g,ga,gb->ab", w, EDGE_N_TABLE, EDGE_N_TABLE)
            conv_rows.append(np.broadcast_to(ids[:, None], (3, 3)).ravel())
            conv_cols.append(np.broadcast_to(ids[None, :], (3, 3)).ravel())
            conv_data.append(he.ravel())
            f[ids] += h * t_inf * (w @ EDGE_N_TABLE)
    if conv_data:
        n = mesh.n_nodes
        k_mat = k_mat + sp.coo_matrix(
            (np.concatenate(conv_data), (np.concatenate(conv_rows), np.concatenate(conv_cols))),
            shape=(n, n),
        ).tocsr()
    return k_mat, f, fixed_idx, fixed_val


def assemble_and_solve_thermal(
    mesh: Mesh,
    field: VolumeFractionField,
    pair: MaterialPair,
    bcs: ThermalBCs,
) -> TemperatureField:
    """Galerkin solution of steady conduction with the given BCs."""
    k_mat, f, fixed_idx, fixed_val = _assemble_thermal_system(mesh, field, pair, bcs)
    theta = _solve_reduced(k_mat, f, fixed_idx, fixed_val, "thermal solve")
    return TemperatureField(theta)


def temperature_at_gauss_points(mesh: Mesh, temp: TemperatureField) -> np.ndarray:
    """Temperatures at the 3x3 Gauss points of every element, shape (E, 9)."""
    return temp.theta[mesh.elements] @ N_TABLE.T
