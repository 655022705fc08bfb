"""Positive-definite kernels and Gram matrices.

Three kernel families are supported: ``linear`` (dot product),
``polynomial`` ((x.y + offset)^degree), and ``gaussian``
(exp(-||x - y||^2 / (2 sigma^2))).  Gram matrices are stored fully
materialized with an exactly symmetric entry array; no centering is
applied anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import InputError

KernelFamily = Literal["linear", "polynomial", "gaussian"]

#: Relative floor for positive-semidefiniteness checks.  A quadratic form
#: or eigenvalue is treated as numerically nonnegative when it is at least
#: ``-PSD_RTOL * trace``.
PSD_RTOL = 1e-8

# Target element count for one block of the pairwise-difference buffer
# used by the gaussian kernel (keeps peak memory around 16 MB).
_BLOCK_ELEMS = 2_000_000


@dataclass(frozen=True)
class KernelSpec:
    """Parameter set identifying one kernel function.

    Parameters
    ----------
    family : {"linear", "polynomial", "gaussian"}
        Kernel family.
    degree : int, optional
        Polynomial degree (>= 1).  Ignored outside the polynomial family.
    offset : float, optional
        Additive constant inside the polynomial (>= 0).  Ignored outside
        the polynomial family.
    sigma : float, optional
        Gaussian bandwidth (> 0).  Ignored outside the gaussian family.
    """

    family: KernelFamily
    degree: int = 1
    offset: float = 0.0
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in ("linear", "polynomial", "gaussian"):
            raise InputError(f"unknown kernel family: {self.family!r}")
        if self.family == "polynomial":
            if not isinstance(self.degree, int) or self.degree < 1:
                raise InputError(
                    f"polynomial degree must be an integer >= 1, got {self.degree!r}"
                )
            if not np.isfinite(self.offset) or self.offset < 0:
                raise InputError(
                    f"polynomial offset must be finite and >= 0, got {self.offset!r}"
                )
        if self.family == "gaussian":
            if not np.isfinite(self.sigma) or self.sigma <= 0:
                raise InputError(
                    f"gaussian sigma must be finite and > 0, got {self.sigma!r}"
                )

    @staticmethod
    def linear() -> "KernelSpec":
        return KernelSpec(family="linear")

    @staticmethod
    def polynomial(degree: int, offset: float = 0.0) -> "KernelSpec":
        return KernelSpec(family="polynomial", degree=degree, offset=float(offset))

    @staticmethod
    def gaussian(sigma: float = 1.0) -> "KernelSpec":
        return KernelSpec(family="gaussian", sigma=float(sigma))

    def describe(self) -> str:
        """Short human-readable form, e.g. ``gaussian(sigma=1)``."""
        if self.family == "linear":
            return "linear"
        if self.family == "polynomial":
            return f"polynomial(degree={self.degree}, offset={self.offset:g})"
        return f"gaussian(sigma={self.sigma:g})"


def _as_point(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InputError(f"{name} must be a nonempty 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite coordinates")
    return arr


def _as_sample(xs, name: str) -> np.ndarray:
    arr = np.asarray(xs, dtype=float)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InputError(
            f"{name} must be a nonempty 2-d array of points, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite coordinates")
    return arr


def evaluate(kernel: KernelSpec, x, y) -> float:
    """Evaluate ``kernel(x, y)`` for two points of equal dimension.

    The evaluation is exactly symmetric in its arguments, and for the
    gaussian family ``evaluate(k, x, x)`` is exactly 1.0.
    """
    xa = _as_point(x, "x")
    ya = _as_point(y, "y")
    if xa.shape != ya.shape:
        raise InputError(
            f"points must share a dimension, got {xa.shape[0]} and {ya.shape[0]}"
        )
    if kernel.family == "linear":
        return float(xa @ ya)
    if kernel.family == "polynomial":
        return float((xa @ ya + kernel.offset) ** kernel.degree)
    diff = xa - ya
    return float(np.exp(-(diff @ diff) / (2.0 * kernel.sigma * kernel.sigma)))


def diagonal_values(kernel: KernelSpec, xs) -> np.ndarray:
    """Closed-form ``kernel(x, x)`` for every row of ``xs``."""
    arr = _as_sample(xs, "xs")
    if kernel.family == "gaussian":
        return np.ones(arr.shape[0])
    sq_norms = np.einsum("ij,ij->i", arr, arr)
    if kernel.family == "linear":
        return sq_norms
    return (sq_norms + kernel.offset) ** kernel.degree


def kernel_matrix(kernel: KernelSpec, xs, ys) -> np.ndarray:
    """Cross-kernel matrix ``K[i, j] = kernel(xs[i], ys[j])``.

    The gaussian family is computed from exact pairwise differences in
    row blocks, so identical points give exactly 1.0 and the matrix of a
    sample against itself is exactly symmetric.
    """
    xa = _as_sample(xs, "xs")
    ya = _as_sample(ys, "ys")
    if xa.shape[1] != ya.shape[1]:
        raise InputError(
            f"samples must share a dimension, got {xa.shape[1]} and {ya.shape[1]}"
        )
    if kernel.family == "linear":
        return xa @ ya.T
    if kernel.family == "polynomial":
        return (xa @ ya.T + kernel.offset) ** kernel.degree
    n, d = xa.shape
    p = ya.shape[0]
    out = np.empty((n, p))
    denom = 2.0 * kernel.sigma * kernel.sigma
    block = max(1, _BLOCK_ELEMS // max(1, p * d))
    for start in range(0, n, block):
        stop = min(start + block, n)
        diff = xa[start:stop, None, :] - ya[None, :, :]
        sq = np.einsum("bpd,bpd->bp", diff, diff)
        out[start:stop] = np.exp(-sq / denom)
    return out


@dataclass(frozen=True)
class GramMatrix:
    """Fully materialized kernel matrix of a sample against itself.

    Attributes
    ----------
    entries : ndarray of shape (m, m)
        Exactly symmetric, finite kernel values.
    diag : ndarray of shape (m,)
        The diagonal of ``entries`` (same storage order).
    diag_sq_sum : float
        ``sum(diag ** 2)``, cached for bound evaluation.
    """

    entries: np.ndarray
    diag: np.ndarray
    diag_sq_sum: float

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InputError(f"Gram entries must be square, got shape {entries.shape}")
        if entries.shape[0] == 0:
            raise InputError("Gram matrix must be nonempty")
        if not np.all(np.isfinite(entries)):
            raise InputError("Gram entries contain non-finite values")
        if not np.array_equal(entries, entries.T):
            raise InputError("Gram entries are not exactly symmetric")
        diag = np.asarray(self.diag, dtype=float)
        if not np.array_equal(diag, entries.diagonal()):
            raise InputError("diag does not match the Gram diagonal")
        expect = float(np.sum(diag**2))
        if self.diag_sq_sum != expect:
            raise InputError("diag_sq_sum does not match sum(diag ** 2)")
        entries = entries.copy()
        entries.flags.writeable = False
        diag = diag.copy()
        diag.flags.writeable = False
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "diag", diag)

    @classmethod
    def from_entries(cls, entries) -> "GramMatrix":
        arr = np.asarray(entries, dtype=float)
        if arr.ndim != 2:
            raise InputError(f"Gram entries must be 2-d, got shape {arr.shape}")
        diag = arr.diagonal().copy() if arr.size else arr.diagonal()
        return cls(entries=arr, diag=diag, diag_sq_sum=float(np.sum(diag**2)))

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> float:
        return float(np.sum(self.diag))


def gram(kernel: KernelSpec, sample) -> GramMatrix:
    """Gram matrix of ``sample`` under ``kernel``.

    The upper triangle is mirrored onto the lower one, so the result is
    exactly symmetric regardless of how the raw entries were produced.
    """
    arr = _as_sample(sample, "sample")
    raw = kernel_matrix(kernel, arr, arr)
    entries = np.triu(raw) + np.triu(raw, 1).T
    return GramMatrix.from_entries(entries)


def psd_spot_check(g: GramMatrix, trials: int = 100, rng_seed: int = 0) -> bool:
    """Randomized sanity check that ``g`` behaves positive semidefinite.

    Draws ``trials`` standard-normal coefficient vectors ``c`` and checks
    each quadratic form ``c' K c`` against the floor ``-PSD_RTOL * trace``.
    Returns False on the first violation.  This is a spot check, not a
    proof: it can miss a slightly indefinite matrix.
    """
    if trials < 1:
        raise InputError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(rng_seed)
    floor = -PSD_RTOL * g.trace
    for _ in range(trials):
        c = rng.standard_normal(g.size)
        if float(c @ g.entries @ c) < floor:
            return False
    return True
