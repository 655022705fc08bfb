"""Kernel PCA fitting and squared projections onto principal subspaces.

A fitted model holds the spectrum of the training Gram matrix.  The
squared norm of the projection of an arbitrary point x onto the span of
the top-k eigendirections is computed with the kernel trick:

    proj(x, k) = sum_{i <= min(k, rank)} ( (1/sqrt(l_i)) sum_j v_i[j] kappa(x_j, x) )^2

where (l_i, v_i) are eigenpairs of K(train).  The residual is
kappa(x, x) - proj(x, k).  No feature-space vectors are ever formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericalError
from .kernels import (
    GramMatrix,
    KernelSpec,
    _as_point,
    _as_sample,
    diagonal_values,
    gram,
    kernel_matrix,
)
from .spectrum import EigenSpectrum, eigendecompose

#: Eigendirections with eigenvalue <= RANK_RTOL * leading eigenvalue are
#: excluded from projections (their 1/sqrt scaling is unstable).
RANK_RTOL = 1e-10

#: A computed residual below ``-RESIDUAL_RTOL * kappa(x, x)`` is treated
#: as a numerical failure instead of being clamped to zero.
RESIDUAL_RTOL = 1e-10


@dataclass(frozen=True)
class KpcaModel:
    """Result of fitting kernel PCA on one training sample.

    Attributes
    ----------
    train : ndarray of shape (m, d)
    kernel : KernelSpec
    gram : GramMatrix
        Gram matrix of ``train`` under ``kernel``.
    spectrum : EigenSpectrum
        Eigendecomposition of the Gram matrix.
    rank : int
        Number of eigenvalues above ``RANK_RTOL`` times the largest.
    r_squared : float
        Upper bound on kappa(x, x); defaults to the training maximum.
    """

    train: np.ndarray
    kernel: KernelSpec
    gram: GramMatrix
    spectrum: EigenSpectrum
    rank: int
    r_squared: float
    coeffs: np.ndarray = field(repr=False, default=None)

    def __post_init__(self) -> None:
        train = np.asarray(self.train, dtype=float).copy()
        train.flags.writeable = False
        object.__setattr__(self, "train", train)
        if self.coeffs is None:
            # Rows scale eigenvector j by 1/sqrt(lambda_j); multiplying a
            # kernel column vector by this matrix yields the point's
            # coordinates along the principal directions.
            if self.rank:
                with_mass = self.spectrum.vectors[:, : self.rank]
                scale = np.sqrt(self.spectrum.values[: self.rank])
                coeffs = np.ascontiguousarray((with_mass / scale).T)
            else:
                coeffs = np.zeros((0, train.shape[0]))
            coeffs.flags.writeable = False
            object.__setattr__(self, "coeffs", coeffs)

    @property
    def m(self) -> int:
        return self.train.shape[0]

    @property
    def dim(self) -> int:
        return self.train.shape[1]


def fit(kernel: KernelSpec, sample, *, r_squared: float | None = None) -> KpcaModel:
    """Fit kernel PCA on a nonempty sample.

    Parameters
    ----------
    kernel : KernelSpec
    sample : array-like of shape (m, d)
    r_squared : float, optional
        Override for the kappa(x, x) upper bound.  Must be at least the
        maximum diagonal value actually observed on the sample; by
        default that maximum is used.
    """
    arr = _as_sample(sample, "sample")
    g = gram(kernel, arr)
    spec = eigendecompose(g)
    lead = float(spec.values[0])
    rank = int(np.sum(spec.values > RANK_RTOL * lead)) if lead > 0 else 0
    observed = float(np.max(g.diag))
    if r_squared is None:
        r_squared = observed
    else:
        r_squared = float(r_squared)
        if not np.isfinite(r_squared) or r_squared <= 0:
            raise InputError(f"r_squared must be finite and > 0, got {r_squared!r}")
        if r_squared < observed:
            raise InputError(
                f"r_squared={r_squared:.6g} is below the observed kernel "
                f"diagonal maximum {observed:.6g}"
            )
    return KpcaModel(
        train=arr, kernel=kernel, gram=g, spectrum=spec, rank=rank, r_squared=r_squared
    )


def _check_point(model: KpcaModel, x) -> np.ndarray:
    arr = _as_point(x, "x")
    if arr.shape[0] != model.dim:
        raise InputError(
            f"point has dimension {arr.shape[0]}, model expects {model.dim}"
        )
    return arr


def _check_points(model: KpcaModel, pts) -> np.ndarray:
    arr = _as_sample(pts, "pts")
    if arr.shape[1] != model.dim:
        raise InputError(
            f"points have dimension {arr.shape[1]}, model expects {model.dim}"
        )
    return arr


def _check_k(model: KpcaModel, k: int) -> int:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise InputError(f"k must be an integer, got {k!r}")
    if not 1 <= k <= model.m:
        raise InputError(f"k must be in [1, {model.m}], got {k}")
    return int(k)


def projection_sq_norm(model: KpcaModel, x, k: int) -> float:
    """Squared norm of the projection of x onto the top-k subspace.

    k beyond the numerical rank is truncated silently; the subspace
    cannot exceed the span of the training sample.
    """
    k = _check_k(model, k)
    arr = _check_point(model, x)
    kk = min(k, model.rank)
    if kk == 0:
        return 0.0
    kvec = kernel_matrix(model.kernel, model.train, arr[None, :])[:, 0]
    coords = model.coeffs[:kk] @ kvec
    return float(np.sum(coords**2))


def residual_sq_norm(model: KpcaModel, x, k: int) -> float:
    """Squared distance from psi(x) to the top-k subspace.

    Computed as kappa(x, x) minus the squared projection; tiny negative
    rounding results are clamped to zero, anything below
    ``-RESIDUAL_RTOL * kappa(x, x)`` raises :class:`NumericalError`.
    """
    arr = _check_point(model, x)
    kxx = float(diagonal_values(model.kernel, arr[None, :])[0])
    resid = kxx - projection_sq_norm(model, arr, k)
    if resid < -RESIDUAL_RTOL * kxx:
        raise NumericalError(
            f"residual {resid:.6e} is negative beyond tolerance for kappa(x,x)={kxx:.6e}"
        )
    return max(resid, 0.0)


def _coord_sq_cumsums(model: KpcaModel, pts: np.ndarray) -> np.ndarray:
    """Cumulative squared coordinates, shape (rank, n).

    Row r holds, for every point, the squared projection norm at
    k = r + 1.
    """
    kmat = kernel_matrix(model.kernel, model.train, pts)
    coords = model.coeffs @ kmat
    return np.cumsum(coords**2, axis=0)


def pointwise_curves(model: KpcaModel, pts, k_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-point projection and residual squared norms for k = 1..k_max.

    Returns two arrays of shape (k_max, n): projections and residuals.
    Residuals follow the same clamp/error behavior as
    :func:`residual_sq_norm`, applied pointwise.
    """
    k_max = _check_k(model, k_max)
    arr = _check_points(model, pts)
    cums = _coord_sq_cumsums(model, arr)
    idx = np.minimum(np.arange(1, k_max + 1), model.rank) - 1
    if model.rank > 0:
        proj = cums[np.maximum(idx, 0)]
        proj[idx < 0] = 0.0
    else:
        proj = np.zeros((k_max, arr.shape[0]))
    kxx = diagonal_values(model.kernel, arr)
    resid = kxx[None, :] - proj
    bad = resid < -RESIDUAL_RTOL * kxx[None, :]
    if np.any(bad):
        worst = float(np.min(resid))
        raise NumericalError(
            f"residual {worst:.6e} is negative beyond tolerance"
        )
    np.maximum(resid, 0.0, out=resid)
    return proj, resid


def projection_profiles(
    model: KpcaModel, pts, k_max: int
) -> tuple[np.ndarray, np.ndarray]:
    """Mean projection and residual squared norms for k = 1..k_max.

    Returns two arrays of shape (k_max,).
    """
    proj, resid = pointwise_curves(model, pts, k_max)
    return np.mean(proj, axis=1), np.mean(resid, axis=1)


def empirical_projection_mean(model: KpcaModel, pts, k: int) -> float:
    """Arithmetic mean of ``projection_sq_norm`` over a nonempty point set."""
    k = _check_k(model, k)
    arr = _check_points(model, pts)
    kk = min(k, model.rank)
    if kk == 0:
        return 0.0
    kmat = kernel_matrix(model.kernel, model.train, arr)
    coords = model.coeffs[:kk] @ kmat
    return float(np.mean(np.sum(coords**2, axis=0)))


def empirical_residual_mean(model: KpcaModel, pts, k: int) -> float:
    """Arithmetic mean of ``residual_sq_norm`` over a nonempty point set."""
    k = _check_k(model, k)
    arr = _check_points(model, pts)
    kxx = diagonal_values(model.kernel, arr)
    kk = min(k, model.rank)
    if kk == 0:
        vals = kxx.copy()
    else:
        kmat = kernel_matrix(model.kernel, model.train, arr)
        coords = model.coeffs[:kk] @ kmat
        vals = kxx - np.sum(coords**2, axis=0)
    bad = vals < -RESIDUAL_RTOL * kxx
    if np.any(bad):
        raise NumericalError(
            f"residual {float(np.min(vals)):.6e} is negative beyond tolerance"
        )
    return float(np.mean(np.maximum(vals, 0.0)))
