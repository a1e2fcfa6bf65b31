"""
Weighted undirected networks with self-arcs, gains, and the convergence
condition checkers for the distributed least-squares update.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import linalg

__all__ = [
    "NetworkError", "AsymmetricWeightsError", "NegativeWeightError",
    "ZeroSelfWeightError", "DisconnectedGraphError",
    "NetworkModel", "Gains", "GainVerdict", "DegenerateDirection",
    "build", "default_gains", "make_gains", "check_gain_condition",
    "check_degenerate_direction", "lift",
]


class NetworkError(ValueError):
    """Invalid weighting matrix."""


class AsymmetricWeightsError(NetworkError):
    def __init__(self, pairs):
        self.pairs = pairs
        shown = ", ".join(f"({i + 1},{j + 1})" for i, j in pairs[:5])
        super().__init__(f"weights are not symmetric at {shown}")


class NegativeWeightError(NetworkError):
    def __init__(self, pairs):
        self.pairs = pairs
        shown = ", ".join(f"({i + 1},{j + 1})" for i, j in pairs[:5])
        super().__init__(f"negative weights at {shown}")


class ZeroSelfWeightError(NetworkError):
    def __init__(self, nodes):
        self.nodes = nodes
        shown = ", ".join(str(i + 1) for i in nodes)
        super().__init__(f"self-weight must be positive for agents {shown}")


class DisconnectedGraphError(NetworkError):
    def __init__(self, unreachable):
        self.unreachable = unreachable
        shown = ", ".join(str(i + 1) for i in unreachable)
        super().__init__(f"graph is disconnected: agents {shown} unreachable from agent 1")


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class NetworkModel:
    """
    Validated network.

    Attributes
    ----------
    W : ndarray, shape (m, m)
        Symmetric nonnegative weights with positive diagonal.
    D : ndarray, shape (m, m)
        Diagonal degree matrix, ``d_i`` = i-th row sum of ``W``.
    L : ndarray, shape (m, m)
        Laplacian ``D - W``.
    neighbors : tuple of tuple of int
        ``neighbors[i]`` lists every ``j`` with ``w_ij > 0``, ``i`` included.
    """

    W: np.ndarray
    D: np.ndarray = field(repr=False)
    L: np.ndarray = field(repr=False)
    neighbors: tuple

    @property
    def m(self):
        return self.W.shape[0]

    @property
    def degrees(self):
        return np.diag(self.D).copy()


@dataclass(frozen=True)
class Gains:
    """Per-agent positive gains ``kappa_i`` and their diagonal matrix."""

    kappa: np.ndarray

    def __post_init__(self):
        k = _frozen(self.kappa).ravel()
        if k.size == 0 or not np.all(np.isfinite(k)) or np.any(k <= 0):
            raise ValueError("gains must be finite and strictly positive")
        object.__setattr__(self, "kappa", k)

    @property
    def K(self):
        return np.diag(self.kappa)


@dataclass(frozen=True)
class GainVerdict:
    min_eigenvalue: float
    passed: bool
    tol: float


@dataclass(frozen=True)
class DegenerateDirection:
    exists: bool
    witness: np.ndarray | None


def build(weights):
    """
    Validate a weighting matrix and derive degrees, Laplacian and
    neighbor lists.

    Raises
    ------
    AsymmetricWeightsError, NegativeWeightError, ZeroSelfWeightError,
    DisconnectedGraphError
    """
    W = np.array(weights, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1] or W.shape[0] == 0:
        raise NetworkError(f"weights must be a nonempty square matrix, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise NetworkError("weights must be finite")
    m = W.shape[0]

    asym = [(int(i), int(j)) for i, j in zip(*np.nonzero(W != W.T)) if i < j]
    if asym:
        raise AsymmetricWeightsError(asym)
    neg = [(int(i), int(j)) for i, j in zip(*np.nonzero(W < 0)) if i <= j]
    if neg:
        raise NegativeWeightError(neg)
    zero_self = [int(i) for i in np.nonzero(np.diag(W) <= 0)[0]]
    if zero_self:
        raise ZeroSelfWeightError(zero_self)

    neighbors = tuple(tuple(int(j) for j in np.nonzero(W[i] > 0)[0]) for i in range(m))
    seen = {0}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in neighbors[i]:
            if j not in seen:
                seen.add(j)
                queue.append(j)
    if len(seen) < m:
        raise DisconnectedGraphError(sorted(set(range(m)) - seen))

    D = np.diag(W.sum(axis=1))
    return NetworkModel(W=_frozen(W), D=_frozen(D), L=_frozen(D - W), neighbors=neighbors)


def default_gains(net):
    """Gains ``kappa_i = 1 / d_i``."""
    return Gains(1.0 / net.degrees)


def make_gains(net, kappa):
    g = Gains(kappa)
    if g.kappa.size != net.m:
        raise ValueError(f"expected {net.m} gains, got {g.kappa.size}")
    return g


def lift(M, n):
    """``M (x) I_n``."""
    return linalg.kron(M, np.eye(n))


def gain_matrix(net, g):
    """``D K D - W K W``."""
    K = g.K
    return net.D @ K @ net.D - net.W @ K @ net.W


def check_gain_condition(net, g):
    """
    Test whether ``D K D - W K W`` is positive semi-definite.

    The matrix passes when its smallest eigenvalue is at least
    ``-1e-9 * max|S|``.
    """
    if g.kappa.size != net.m:
        raise ValueError(f"expected {net.m} gains, got {g.kappa.size}")
    S = gain_matrix(net, g)
    S = 0.5 * (S + S.T)
    tol = 1e-9 * linalg.max_abs(S)
    lam = float(linalg.sym_eigenvalues(S)[0])
    return GainVerdict(min_eigenvalue=lam, passed=lam >= -tol, tol=tol)


def check_degenerate_direction(net, g, blocks, tol=linalg.DEFAULT_RANK_TOL):
    """
    Look for a nonzero ``u`` with ``Abar u = 0``, ``(DKD - WKW) (x) I u = 0``
    and ``Lbar u != 0``.

    When one exists the update needs ``c > 0`` to converge. The search is a
    subspace-containment test: such a ``u`` exists iff appending ``Lbar`` to
    the stacked constraints lowers the kernel dimension.

    Returns
    -------
    DegenerateDirection
        ``witness`` is a unit vector satisfying the three conditions, or
        ``None``.
    """
    from .problem import assemble

    sys = assemble(blocks)
    n = sys.n
    if len(blocks) != net.m:
        raise ValueError(f"network has {net.m} agents but {len(blocks)} blocks given")
    Sbar = lift(0.5 * (gain_matrix(net, g) + gain_matrix(net, g).T), n)
    Lbar = lift(net.L, n)

    def scaled(M):
        s = linalg.max_abs(M)
        return M / s if s > 0 else M

    base = np.vstack([scaled(sys.Abar), scaled(Sbar)])
    k_base = base.shape[1] - linalg.rank(base, tol)
    k_full = base.shape[1] - linalg.rank(np.vstack([base, scaled(Lbar)]), tol)
    if k_base == 0 or k_full == k_base:
        return DegenerateDirection(False, None)

    B = linalg.nullspace(base, tol, dim=k_base)
    _, _, vh = np.linalg.svd(Lbar @ B)
    u = B @ vh[0]
    return DegenerateDirection(True, u / np.linalg.norm(u))
