"""
Partitioned linear systems: per-agent blocks, stacked operators and the
centralized least-squares reference solution.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from . import linalg

__all__ = [
    "DimensionMismatchError", "LocalData", "StackedSystem", "LsqSolution",
    "assemble", "lsq_oracle", "is_lsq_solution", "normal_residual",
]

PINV_CUTOFF = 1e-10


class DimensionMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class LocalData:
    """Rows ``A_i`` (n_i x n) and right-hand side ``b_i`` known to agent ``index``."""

    A: np.ndarray
    b: np.ndarray
    index: int = 0

    def __post_init__(self):
        A = np.array(self.A, dtype=float, ndmin=2)
        b = np.array(self.b, dtype=float).ravel()
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise DimensionMismatchError(f"agent {self.index + 1}: A must be a nonempty matrix")
        if b.size != A.shape[0]:
            raise DimensionMismatchError(
                f"agent {self.index + 1}: A has {A.shape[0]} rows but b has {b.size} entries")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise DimensionMismatchError(f"agent {self.index + 1}: non-finite data")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def n(self):
        return self.A.shape[1]


@dataclass(frozen=True)
class StackedSystem:
    A: np.ndarray
    b: np.ndarray
    Abar: np.ndarray
    blocks: tuple

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def m(self):
        return len(self.blocks)

    @cached_property
    def AtA(self):
        return self.A.T @ self.A

    @cached_property
    def Atb(self):
        return self.A.T @ self.b


@dataclass(frozen=True)
class LsqSolution:
    x_star: np.ndarray
    residual: float
    kernel_dim: int
    kernel: np.ndarray


def assemble(blocks):
    """Row-stack the blocks into ``A``, ``b`` and build block-diagonal ``Abar``."""
    blocks = tuple(blocks)
    if not blocks:
        raise DimensionMismatchError("at least one agent is required")
    n = blocks[0].n
    for k, blk in enumerate(blocks):
        if blk.n != n:
            raise DimensionMismatchError(
                f"agent {k + 1} has {blk.n} unknowns, agent 1 has {n}")
    A = np.vstack([blk.A for blk in blocks])
    b = np.concatenate([blk.b for blk in blocks])
    Abar = scipy.linalg.block_diag(*[blk.A for blk in blocks])
    return StackedSystem(A=A, b=b, Abar=Abar, blocks=blocks)


def lsq_oracle(sys):
    """
    Minimum-norm least-squares solution of the stacked system.

    Pseudo-inverts ``A'A`` through its symmetric eigendecomposition,
    discarding eigenvalues below ``1e-10`` times the largest.

    Returns
    -------
    LsqSolution
        ``residual`` is ``0.5 * |A x* - b|^2``; ``kernel`` holds an
        orthonormal basis of ``ker A`` as columns.
    """
    w, V = linalg.sym_eig(sys.AtA)
    top = max(float(w[-1]), 0.0)
    keep = w > PINV_CUTOFF * top if top > 0 else np.zeros_like(w, dtype=bool)
    Vk = V[:, keep]
    x = Vk @ ((Vk.T @ sys.Atb) / w[keep])
    r = sys.A @ x - sys.b
    return LsqSolution(x_star=x, residual=0.5 * float(r @ r),
                       kernel_dim=int(np.count_nonzero(~keep)), kernel=V[:, ~keep])


def normal_residual(sys, x):
    """``|A'A x - A'b|_2``."""
    return float(np.linalg.norm(sys.AtA @ np.asarray(x, dtype=float) - sys.Atb))


def is_lsq_solution(sys, x, tol):
    """True iff ``|A'A x - A'b| <= tol * (1 + |A'b|)``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = np.asarray(x, dtype=float)
    if x.shape != (sys.n,):
        raise DimensionMismatchError(f"x must have shape ({sys.n},), got {x.shape}")
    return normal_residual(sys, x) <= tol * (1.0 + float(np.linalg.norm(sys.Atb)))
