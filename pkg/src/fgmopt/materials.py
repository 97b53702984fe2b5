"""Volume-fraction fields and rule-of-mixtures property blending.

The ceramic volume fraction lives on element corner nodes only; inside an
element it is interpolated bilinearly from the four corner values, and all
material properties are evaluated pointwise (per Gauss point) from the
interpolated fraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh

__all__ = [
    "MaterialProps",
    "MaterialPair",
    "BlendedPointProps",
    "VolumeFractionField",
    "AL_ZRO2",
    "bilinear_shape",
    "interpolate_vf",
    "blend",
    "blend_arrays",
]

PLANE_KINDS = ("stress", "strain")


@dataclass(frozen=True)
class MaterialProps:
    """Isotropic constituent properties (SI units)."""

    E: float          # Young's modulus, Pa
    nu: float         # Poisson's ratio
    alpha: float      # thermal expansion, 1/K
    k: float          # thermal conductivity, W/(m K)
    rho: float = 0.0  # density, kg/m^3 (carried, unused without body forces)

    def __post_init__(self):
        if self.E <= 0:
            raise ValueError(f"E must be positive, got {self.E}")
        if not 0.0 < self.nu < 0.5:
            raise ValueError(f"nu must be in (0, 0.5), got {self.nu}")
        if self.k <= 0:
            raise ValueError(f"k must be positive, got {self.k}")


@dataclass(frozen=True)
class MaterialPair:
    metal: MaterialProps
    ceramic: MaterialProps


# aluminum / zirconia pair used by all benchmark problems
AL_ZRO2 = MaterialPair(
    metal=MaterialProps(E=70.0e9, nu=0.3, alpha=23.4e-6, k=233.0, rho=2707.0),
    ceramic=MaterialProps(E=200.0e9, nu=0.3, alpha=10.0e-6, k=2.2, rho=5700.0),
)


@dataclass(frozen=True)
class BlendedPointProps:
    """Pointwise blended properties plus derived elastic coefficients."""

    E: float
    nu: float
    alpha: float
    k: float
    beta: float         # stress-temperature coefficient, Pa/K
    lambda_lame: float  # 3D Lame lambda from blended E, nu
    mu_lame: float


class VolumeFractionField:
    """Ceramic fraction per corner node; the optimization chromosome.

    Values are clamped into [0, 1] at construction, so every field produced
    by sampling, projection, crossover or mutation is physically valid.
    """

    __slots__ = ("values",)

    def __init__(self, values):
        v = np.asarray(values, dtype=float)
        if v.ndim != 1:
            raise ValueError(f"volume fraction values must be a vector, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("volume fraction values must be finite")
        self.values = np.clip(v, 0.0, 1.0)
        self.values.flags.writeable = False

    def __len__(self) -> int:
        return len(self.values)

    def __repr__(self) -> str:
        return f"VolumeFractionField(n={len(self.values)})"

    def copy(self) -> "VolumeFractionField":
        return VolumeFractionField(self.values.copy())


def bilinear_shape(xi, eta) -> np.ndarray:
    """Four-node bilinear shape functions, corner order as in the Quad9 corners."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return 0.25 * np.stack(
        [
            (1 - xi) * (1 - eta),
            (1 + xi) * (1 - eta),
            (1 + xi) * (1 + eta),
            (1 - xi) * (1 + eta),
        ],
        axis=-1,
    )


def element_corner_values(mesh: Mesh, field: VolumeFractionField) -> np.ndarray:
    """Corner-node fraction values per element, shape (E, 4)."""
    if len(field) != mesh.n_corner_nodes:
        raise ValueError(
            f"field length {len(field)} != corner node count {mesh.n_corner_nodes}"
        )
    return field.values[mesh.corner_pos[mesh.elements[:, :4]]]


def interpolate_vf(field: VolumeFractionField, mesh: Mesh, element: int, xi: float, eta: float) -> float:
    """Bilinearly interpolated ceramic fraction at (xi, eta) of one element."""
    if not (-1.0 <= xi <= 1.0 and -1.0 <= eta <= 1.0):
        raise ValueError(f"parametric coordinates ({xi}, {eta}) outside [-1, 1]^2")
    corners = mesh.corner_pos[mesh.elements[element, :4]]
    return float(bilinear_shape(xi, eta) @ field.values[corners])


def _check_plane(plane: str):
    if plane not in PLANE_KINDS:
        raise ValueError(f"plane must be one of {PLANE_KINDS}, got {plane!r}")


def blend(pair: MaterialPair, vc: float, plane: str = "stress") -> BlendedPointProps:
    """Rule-of-mixtures blend at ceramic fraction ``vc``.

    E, nu, alpha and k blend affinely; beta and the Lame constants are then
    computed from the blended values under the given planar assumption.
    """
    _check_plane(plane)
    if not 0.0 <= vc <= 1.0:
        raise ValueError(f"vc must lie in [0, 1], got {vc}")
    m, c = pair.metal, pair.ceramic
    E = m.E * (1 - vc) + c.E * vc
    nu = m.nu * (1 - vc) + c.nu * vc
    alpha = m.alpha * (1 - vc) + c.alpha * vc
    k = m.k * (1 - vc) + c.k * vc
    if plane == "stress":
        beta = E * alpha / (1 - nu)
    else:
        beta = E * alpha / (1 - 2 * nu)
    lam = E * nu / ((1 + nu) * (1 - 2 * nu))
    mu = E / (2 * (1 + nu))
    return BlendedPointProps(E=E, nu=nu, alpha=alpha, k=k, beta=beta, lambda_lame=lam, mu_lame=mu)


@dataclass(frozen=True)
class BlendedArrays:
    """Vectorized blend over an array of fraction values."""

    E: np.ndarray
    nu: np.ndarray
    alpha: np.ndarray
    k: np.ndarray
    beta: np.ndarray
    lam: np.ndarray       # 3D Lame lambda
    lam_eff: np.ndarray   # lambda entering the in-plane constitutive matrix
    mu: np.ndarray


def blend_arrays(pair: MaterialPair, vc: np.ndarray, plane: str = "stress") -> BlendedArrays:
    """Array version of :func:`blend` used by the assembly kernels.

    ``lam_eff`` is the plane-reduced lambda: for plane strain it equals the
    3D lambda, for plane stress it is 2*lam*mu/(lam + 2*mu) so that the
    isotropic D-matrix built from (lam_eff, mu) matches E/(1-nu^2) form.
    """
    _check_plane(plane)
    vc = np.asarray(vc, dtype=float)
    m, c = pair.metal, pair.ceramic
    E = m.E * (1 - vc) + c.E * vc
    nu = m.nu * (1 - vc) + c.nu * vc
    alpha = m.alpha * (1 - vc) + c.alpha * vc
    k = m.k * (1 - vc) + c.k * vc
    lam = E * nu / ((1 + nu) * (1 - 2 * nu))
    mu = E / (2 * (1 + nu))
    if plane == "stress":
        beta = E * alpha / (1 - nu)
        lam_eff = 2.0 * lam * mu / (lam + 2.0 * mu)
    else:
        beta = E * alpha / (1 - 2 * nu)
        lam_eff = lam
    return BlendedArrays(E=E, nu=nu, alpha=alpha, k=k, beta=beta, lam=lam, lam_eff=lam_eff, mu=mu)
