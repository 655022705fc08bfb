"""Symmetric eigendecomposition of Gram matrices and spectral sums.

The solver is a cyclic Jacobi iteration: each sweep rotates every
off-diagonal pair (p, q) to zero in turn, and the loop stops once the
off-diagonal Frobenius norm falls below ``1e-12`` times the Frobenius
norm of the input.  Jacobi converges slower than tridiagonalization-based
solvers but delivers small eigenvalues and eigenvectors to high relative
accuracy, which the tail sums here depend on.  The inner loop is JIT
compiled with numba.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InputError, InvalidKernelError, NumericalError
from .kernels import PSD_RTOL, GramMatrix

#: Convergence threshold for the off-diagonal Frobenius norm, relative to
#: the Frobenius norm of the input matrix.
JACOBI_TOL_REL = 1e-12

#: Sweep budget; exceeding it raises :class:`NumericalError`.
JACOBI_MAX_SWEEPS = 100

#: Two adjacent eigenvalues count as tied when their gap is at most this
#: fraction of the leading eigenvalue.
TIE_RTOL = 1e-10


@njit(cache=True)
def _jacobi_sweeps(A, V, tol, max_sweeps):  # pragma: no cover - jitted
    m = A.shape[0]
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(m - 1):
            for j in range(i + 1, m):
                off += 2.0 * A[i, j] * A[i, j]
        if np.sqrt(off) <= tol:
            return sweep
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                # Smaller root of t^2 + 2 tau t - 1 = 0; switch to the
                # series form when tau*tau would overflow.
                if np.abs(tau) > 1e150:
                    t = 1.0 / (2.0 * tau)
                elif tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for i in range(m):
                    aip = A[i, p]
                    aiq = A[i, q]
                    A[i, p] = c * aip - s * aiq
                    A[i, q] = s * aip + c * aiq
                for i in range(m):
                    api = A[p, i]
                    aqi = A[q, i]
                    A[p, i] = c * api - s * aqi
                    A[q, i] = s * api + c * aqi
                for i in range(m):
                    vip = V[i, p]
                    viq = V[i, q]
                    V[i, p] = c * vip - s * viq
                    V[i, q] = s * vip + c * viq
    return -1


def jacobi_eigh(
    matrix, tol_rel: float = JACOBI_TOL_REL, max_sweeps: int = JACOBI_MAX_SWEEPS
):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    matrix : ndarray of shape (m, m)
        Symmetric input; only validated for shape and finiteness.

    Returns
    -------
    values : ndarray of shape (m,)
        Unsorted eigenvalues (the final diagonal).
    vectors : ndarray of shape (m, m)
        Accumulated rotations; column ``i`` pairs with ``values[i]``.
    sweeps : int
        Number of completed sweeps before convergence.

    Raises
    ------
    NumericalError
        If the off-diagonal norm has not converged within ``max_sweeps``.
    """
    A = np.array(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise InputError(f"matrix must be square and nonempty, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError("matrix contains non-finite entries")
    m = A.shape[0]
    V = np.eye(m)
    fnorm = float(np.linalg.norm(A))
    if fnorm == 0.0:
        return np.zeros(m), V, 0
    sweeps = _jacobi_sweeps(A, V, tol_rel * fnorm, int(max_sweeps))
    if sweeps < 0:
        raise NumericalError(
            f"Jacobi iteration did not converge within {max_sweeps} sweeps"
        )
    return np.diag(A).copy(), V, int(sweeps)


@dataclass(frozen=True)
class EigenSpectrum:
    """Eigenvalues and eigenvectors of one Gram matrix.

    Attributes
    ----------
    values : ndarray of shape (m,)
        Eigenvalues sorted in descending order, all >= 0.
    vectors : ndarray of shape (m, m)
        Orthonormal eigenvectors; column ``i`` pairs with ``values[i]``.
    source_dim : int
        Side length m of the decomposed matrix.
    """

    values: np.ndarray
    vectors: np.ndarray
    source_dim: int

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        vectors = np.asarray(self.vectors, dtype=float)
        m = self.source_dim
        if values.shape != (m,) or vectors.shape != (m, m):
            raise InputError(
                f"inconsistent spectrum shapes: {values.shape}, {vectors.shape}, m={m}"
            )
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(vectors))):
            raise InputError("spectrum contains non-finite entries")
        if np.any(values < 0):
            raise InputError("eigenvalues must be nonnegative")
        if np.any(np.diff(values) > 0):
            raise InputError("eigenvalues must be sorted in descending order")
        values = values.copy()
        values.flags.writeable = False
        vectors = vectors.copy()
        vectors.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "vectors", vectors)

    @property
    def trace(self) -> float:
        return float(np.sum(self.values))


def eigendecompose(g: GramMatrix) -> EigenSpectrum:
    """Full eigendecomposition of a Gram matrix.

    Eigenvalues in ``[-eps, 0)`` with ``eps = 1e-8 * trace`` are clamped
    to zero; anything below ``-eps`` means the matrix is not positive
    semidefinite to working accuracy and raises
    :class:`InvalidKernelError`.
    """
    values, vectors, _ = jacobi_eigh(g.entries)
    eps = PSD_RTOL * g.trace
    lowest = float(np.min(values))
    if lowest < -eps:
        raise InvalidKernelError(
            f"Gram matrix has eigenvalue {lowest:.6e} below -{eps:.6e}; "
            "not positive semidefinite"
        )
    values = np.maximum(values, 0.0)
    order = np.argsort(-values, kind="stable")
    return EigenSpectrum(
        values=values[order], vectors=vectors[:, order], source_dim=g.size
    )


def _check_k(spectrum: EigenSpectrum, k: int, low: int) -> int:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise InputError(f"k must be an integer, got {k!r}")
    if not low <= k <= spectrum.source_dim:
        raise InputError(
            f"k must be in [{low}, {spectrum.source_dim}], got {k}"
        )
    return int(k)


def initial_sum(spectrum: EigenSpectrum, k: int) -> float:
    """Sum of the k largest eigenvalues; 0.0 when k = 0."""
    k = _check_k(spectrum, k, 0)
    return float(np.sum(spectrum.values[:k]))


def tail_sum(spectrum: EigenSpectrum, k: int) -> float:
    """Sum of all eigenvalues after the k largest; 0.0 when k = m."""
    k = _check_k(spectrum, k, 0)
    return float(np.sum(spectrum.values[k:]))


def tie_split(spectrum: EigenSpectrum, k: int) -> bool:
    """True when the spectral gap at k is too small to separate subspaces.

    A cut between positions k and k+1 is flagged when the gap is at most
    ``TIE_RTOL`` times the leading eigenvalue; the k-dimensional principal
    subspace is then numerically ill-determined.  k = m never flags.
    """
    k = _check_k(spectrum, k, 1)
    if k == spectrum.source_dim:
        return False
    gap = float(spectrum.values[k - 1] - spectrum.values[k])
    return gap <= TIE_RTOL * float(spectrum.values[0])
