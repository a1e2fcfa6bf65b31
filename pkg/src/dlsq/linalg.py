"""
Dense real linear algebra kernel.

Every routine takes and returns numpy arrays and never mutates its inputs.
Intended for desk-scale problems (a few hundred rows at most).
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg
import scipy.linalg.lapack

__all__ = [
    "LinAlgError", "SingularMatrixError", "NotSymmetricError",
    "ConvergenceError", "LUFactor", "lu_factor", "lu_solve",
    "sym_eig", "sym_eigenvalues", "gen_eigenvalues", "rank", "nullspace",
    "kron", "max_abs", "DEFAULT_RANK_TOL",
]

DEFAULT_RANK_TOL = 1e-9

_PIVOT_TOL = 1e-13

_getrs = scipy.linalg.lapack.get_lapack_funcs("getrs", dtype=np.float64)
_JACOBI_TOL = 1e-12


class LinAlgError(ValueError):
    """Base class for kernel errors."""


class SingularMatrixError(LinAlgError):
    """Raised when an LU pivot falls below the singularity threshold."""


class NotSymmetricError(LinAlgError):
    """Raised when a symmetric routine receives a non-symmetric matrix."""


class ConvergenceError(LinAlgError):
    """Raised when an iterative eigensolver exceeds its iteration cap."""


def max_abs(M):
    """Largest entry magnitude (0 for empty input)."""
    M = np.asarray(M)
    return float(np.max(np.abs(M))) if M.size else 0.0


def _as_square(M, name="M"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise LinAlgError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise LinAlgError(f"{name} has non-finite entries")
    return M


class LUFactor:
    """
    Partial-pivoting LU factorization of a square matrix.

    Built once, then applied to any number of right-hand sides.
    """

    __slots__ = ("_lu", "_piv", "n")

    def __init__(self, M):
        M = _as_square(M)
        self.n = M.shape[0]
        with warnings.catch_warnings():
            # exact zero pivots are reported below as SingularMatrixError
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
        scale = max_abs(M)
        pivots = np.abs(np.diag(lu))
        if self.n and (scale == 0.0 or pivots.min() < _PIVOT_TOL * scale):
            k = int(np.argmin(pivots))
            raise SingularMatrixError(
                f"pivot {k} has magnitude {pivots[k]:.3e} "
                f"(threshold {_PIVOT_TOL * scale:.3e})")
        self._lu, self._piv = lu, piv

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.n:
            raise LinAlgError(
                f"rhs has {rhs.shape[0]} rows, matrix has {self.n}")
        x, info = _getrs(self._lu, self._piv, rhs)
        if info != 0:
            raise LinAlgError(f"getrs failed with info={info}")
        return x


def lu_factor(M):
    return LUFactor(M)


def lu_solve(M, rhs):
    """
    Solve ``M X = rhs`` by LU with partial pivoting.

    Raises
    ------
    SingularMatrixError
        If a pivot magnitude is below ``1e-13 * max|M|``.
    """
    return LUFactor(M).solve(rhs)


def _check_symmetric(S):
    S = _as_square(S, "S")
    scale = max_abs(S)
    asym = max_abs(S - S.T)
    if asym > 1e-9 * scale:
        raise NotSymmetricError(
            f"max|S - S'| = {asym:.3e} exceeds 1e-9 * max|S| = {1e-9 * scale:.3e}")
    return 0.5 * (S + S.T)


def sym_eig(S, max_sweeps=100):
    """
    Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps continue until the off-diagonal Frobenius norm drops below
    ``1e-12`` times the Frobenius norm of ``S``.

    Parameters
    ----------
    S : array_like, shape (n, n)
        Symmetric input.
    max_sweeps : int, optional
        Cap on the number of full cyclic sweeps.

    Returns
    -------
    w : ndarray, shape (n,)
        Eigenvalues in ascending order.
    V : ndarray, shape (n, n)
        Orthonormal eigenvectors, ``V[:, k]`` pairs with ``w[k]``.
    """
    A = _check_symmetric(S).copy()
    n = A.shape[0]
    V = np.eye(n)
    total = np.linalg.norm(A)
    target = _JACOBI_TOL * total
    # entries this small cannot move any eigenvalue at double precision
    skip = 1e-20 * total

    def off_norm(A):
        return np.linalg.norm(A - np.diag(np.diag(A)))

    for _ in range(max_sweeps):
        if off_norm(A) <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= skip:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap, aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        if off_norm(A) > target:
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")

    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def sym_eigenvalues(S):
    """Ascending eigenvalues of a symmetric matrix (cyclic Jacobi)."""
    return sym_eig(S)[0]


def gen_eigenvalues(M):
    """
    All eigenvalues of a general real square matrix.

    Uses LAPACK's Hessenberg reduction followed by shifted QR.

    Returns
    -------
    ndarray of complex, shape (n,)
    """
    M = _as_square(M)
    try:
        return np.linalg.eigvals(M).astype(complex)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(str(exc)) from exc


def rank(M, tol=DEFAULT_RANK_TOL):
    """
    Numerical rank by Gaussian elimination with full pivoting.

    A pivot whose magnitude is below ``tol * max|M|`` ends the elimination.
    """
    if tol <= 0:
        raise LinAlgError("tol must be positive")
    A = np.array(M, dtype=complex if np.iscomplexobj(M) else float)
    if A.ndim != 2 or A.size == 0:
        return 0
    cutoff = tol * max_abs(A)
    if cutoff == 0.0:
        return 0
    rows, cols = A.shape
    r = 0
    for k in range(min(rows, cols)):
        sub = np.abs(A[k:, k:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        if sub[i, j] < cutoff:
            break
        i += k
        j += k
        A[[k, i], :] = A[[i, k], :]
        A[:, [k, j]] = A[:, [j, k]]
        A[k + 1:, k:] -= np.outer(A[k + 1:, k] / A[k, k], A[k, k:])
        r += 1
    return r


def nullspace(M, tol=DEFAULT_RANK_TOL, dim=None):
    """
    Orthonormal basis of the numerical kernel of ``M``.

    The basis dimension is ``cols - rank(M, tol)`` unless ``dim`` is
    given explicitly; the vectors are the right singular vectors of the
    smallest singular values.

    Returns
    -------
    ndarray, shape (cols, k)
        Columns form the basis (``k`` may be zero).
    """
    M = np.asarray(M)
    if M.ndim != 2:
        raise LinAlgError("M must be 2-D")
    cols = M.shape[1]
    if dim is None:
        dim = cols - rank(M, tol)
    if dim <= 0:
        return np.zeros((cols, 0), dtype=M.dtype if np.iscomplexobj(M) else float)
    if M.shape[0] == 0:
        return np.eye(cols)[:, :dim]
    _, _, vh = np.linalg.svd(M)
    basis = vh[cols - dim:, :].conj().T
    return basis if np.iscomplexobj(M) else basis.real


def kron(A, B):
    """Kronecker product ``A (x) B``."""
    return np.kron(np.asarray(A, dtype=float), np.asarray(B, dtype=float))
