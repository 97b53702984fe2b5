"""Gaussian-process design space over corner nodes.

A squared-exponential kernel over nodal coordinates defines a prior on
smooth volume-fraction profiles; conditioning on prescribed boundary
fractions yields a posterior from which candidate profiles are drawn.
The same kernel powers the smoothing projection used to repair profiles
after crossover: the deviation from the posterior mean is multiplied by
K (K + s^2 I)^-1, which attenuates rough (small-eigenvalue) components.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .materials import VolumeFractionField
from .mesh import Mesh

__all__ = [
    "KernelConfig",
    "BoundaryConstraint",
    "PosteriorModel",
    "IllConditionedKernel",
    "rbf_kernel",
    "build_kernel",
    "condition",
    "condition_points",
    "sample",
    "project",
    "sample_perturbation",
]

log = logging.getLogger(__name__)

_JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


class IllConditionedKernel(np.linalg.LinAlgError):
    """Covariance factorization failed even after jitter escalation."""


@dataclass(frozen=True)
class KernelConfig:
    """RBF kernel hyperparameters.

    length_scale controls profile smoothness (same units as the mesh
    coordinates), amplitude the vertical spread, noise_var the small
    regularizing variance added when conditioning. proj_var regularizes
    the smoothing projection; None means "amplitude squared", i.e. the
    same vertical hyperparameter as the design space, which truncates the
    projected profile to the few leading covariance eigenvectors.
    """

    length_scale: float
    amplitude: float = 1.0
    noise_var: float = 1e-3
    proj_var: float | None = None

    def __post_init__(self):
        if self.length_scale <= 0:
            raise ValueError(f"length_scale must be positive, got {self.length_scale}")
        if self.amplitude <= 0:
            raise ValueError(f"amplitude must be positive, got {self.amplitude}")
        if self.noise_var <= 0:
            raise ValueError(f"noise_var must be positive, got {self.noise_var}")
        if self.proj_var is not None and self.proj_var <= 0:
            raise ValueError(f"proj_var must be positive, got {self.proj_var}")

    @property
    def projection_var(self) -> float:
        return self.amplitude ** 2 if self.proj_var is None else self.proj_var


@dataclass(frozen=True)
class BoundaryConstraint:
    """Prescribed fractions at corner nodes (global node ids)."""

    node_ids: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "node_ids", np.asarray(self.node_ids, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.node_ids.shape != self.values.shape:
            raise ValueError("node_ids and values must have matching shapes")
        if len(self.values) and (self.values.min() < 0.0 or self.values.max() > 1.0):
            raise ValueError("prescribed fractions must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.node_ids)


def rbf_kernel(xa: np.ndarray, xb: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    """Squared-exponential covariance between coordinate arrays (na,2), (nb,2)."""
    diff = np.asarray(xa, float)[:, None, :] - np.asarray(xb, float)[None, :, :]
    d2 = np.einsum("abi,abi->ab", diff, diff)
    return cfg.amplitude ** 2 * np.exp(-d2 / (2.0 * cfg.length_scale ** 2))


def build_kernel(mesh: Mesh, cfg: KernelConfig, a, b) -> np.ndarray:
    """Kernel matrix between two node-id lists of a mesh."""
    d2 = mesh.pairwise_sq_distances(a, b)
    return cfg.amplitude ** 2 * np.exp(-d2 / (2.0 * cfg.length_scale ** 2))


def _chol_with_jitter(mat: np.ndarray, what: str, cfg: KernelConfig) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor with additive jitter escalated 1e-10 .. 1e-6."""
    n = len(mat)
    eye = np.eye(n)
    for jit in _JITTERS:
        try:
            return np.linalg.cholesky(mat + jit * eye if jit else mat), jit
        except np.linalg.LinAlgError:
            continue
    raise IllConditionedKernel(
        f"factorization of {what} failed after jitter up to {_JITTERS[-1]:g} "
        f"(length_scale={cfg.length_scale}, noise_var={cfg.noise_var}); "
        f"the kernel is too ill-conditioned for this node layout"
    )


def condition_points(
    x_all: np.ndarray, x_b: np.ndarray, f_b: np.ndarray, cfg: KernelConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and covariance at x_all given observations (x_b, f_b).

    Zero prior mean; the boundary-block kernel is regularized with
    noise_var. With no observations the prior (0, K) is returned.
    """
    k_all = rbf_kernel(x_all, x_all, cfg)
    if len(x_b) == 0:
        return np.zeros(len(x_all)), k_all
    k_b = rbf_kernel(x_b, x_b, cfg)
    k_cross = rbf_kernel(x_b, x_all, cfg)  # (n_b, n_all)
    a = k_b + cfg.noise_var * np.eye(len(x_b))
    chol, _ = _chol_with_jitter(a, "boundary kernel block", cfg)
    alpha = cho_solve((chol, True), f_b)
    mu = k_cross.T @ alpha
    v = solve_triangular(chol, k_cross, lower=True)
    k_post = k_all - v.T @ v
    # enforce exact symmetry before any downstream factorization
    k_post = 0.5 * (k_post + k_post.T)
    return mu, k_post


class PosteriorModel:
    """Conditioned design space over all corner nodes of a mesh.

    Holds the posterior mean, a Cholesky factor of the posterior covariance
    for sampling, and the factorization of (K + proj_var I) for the
    smoothing projection. Immutable after construction; drawing takes an
    explicit seed or generator so concurrent use stays reproducible.
    """

    def __init__(self, mesh: Mesh, cfg: KernelConfig, bc: BoundaryConstraint | None = None):
        self.mesh = mesh
        self.cfg = cfg
        self.bc = bc if bc is not None else BoundaryConstraint(np.empty(0, np.int64), np.empty(0))
        corner_ids = mesh.corner_node_ids
        cpos = mesh.corner_pos[self.bc.node_ids]
        if len(cpos) and cpos.min() < 0:
            bad = int(self.bc.node_ids[int(np.argmin(cpos))])
            raise ValueError(f"constrained node {bad} is not a corner node")
        self.constrained_pos = cpos  # positions within the corner-node ordering
        self.free_pos = np.setdiff1d(np.arange(len(corner_ids)), cpos)
        self.free_ids = corner_ids[self.free_pos]

        x_all = mesh.coords[corner_ids]
        x_b = mesh.coords[self.bc.node_ids]
        self.mu, self.k_post = condition_points(x_all, x_b, self.bc.values, cfg)
        self.k_all = rbf_kernel(x_all, x_all, cfg)
        self._sample_chol, self.sample_jitter = _chol_with_jitter(
            self.k_post, "posterior covariance", cfg
        )
        if self.sample_jitter:
            log.debug("posterior covariance required jitter %g", self.sample_jitter)
        # the projection smooths deviations with the covariance the design
        # space is actually generated from (the conditioned one), so the
        # prescribed boundary values survive by construction: its
        # eigenvectors carry no amplitude at constrained nodes
        self.proj_kernel = self.k_post
        proj = self.proj_kernel + cfg.projection_var * np.eye(len(corner_ids))
        self._proj_chol, _ = _chol_with_jitter(proj, "projection operator", cfg)

    # ------------------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.mu)

    def posterior_std(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.k_post), 0.0, None))

    def draw_raw(self, rng, size: int | None = None) -> np.ndarray:
        """Unclamped posterior draws: mu + L z. Shape (n,) or (size, n)."""
        rng = np.random.default_rng(rng)
        if size is None:
            return self.mu + self._sample_chol @ rng.standard_normal(self.n)
        z = rng.standard_normal((self.n, size))
        return (self.mu[:, None] + self._sample_chol @ z).T

    def sample(self, rng) -> VolumeFractionField:
        """One posterior profile, clamped into [0, 1]. Deterministic per seed."""
        return VolumeFractionField(self.draw_raw(rng))

    def sample_perturbation(self, rng, size: int | None = None) -> np.ndarray:
        """Zero-mean draw(s) with the posterior covariance (mutation noise)."""
        rng = np.random.default_rng(rng)
        if size is None:
            return self._sample_chol @ rng.standard_normal(self.n)
        return (self._sample_chol @ rng.standard_normal((self.n, size))).T

    def project_deviation(self, d: np.ndarray) -> np.ndarray:
        """Apply the spectral shrinkage K (K + s^2 I)^-1 to a deviation vector."""
        return self.proj_kernel @ cho_solve((self._proj_chol, True), np.asarray(d, float))

    def project(self, field: VolumeFractionField) -> VolumeFractionField:
        """Pull a profile back toward the design space.

        The deviation from the posterior mean is shrunk spectrally, which
        preserves the prescribed boundary values by construction, then the
        result is clamped into [0, 1].
        """
        if len(field) != self.n:
            raise ValueError(f"field length {len(field)} != corner count {self.n}")
        d = field.values - self.mu
        return VolumeFractionField(self.mu + self.project_deviation(d))


def condition(mesh: Mesh, cfg: KernelConfig, bc: BoundaryConstraint | None = None) -> PosteriorModel:
    """Build the conditioned design space for a mesh."""
    return PosteriorModel(mesh, cfg, bc)


def sample(model: PosteriorModel, rng) -> VolumeFractionField:
    return model.sample(rng)


def project(model: PosteriorModel, field: VolumeFractionField) -> VolumeFractionField:
    return model.project(field)


def sample_perturbation(model: PosteriorModel, rng) -> np.ndarray:
    return model.sample_perturbation(rng)
