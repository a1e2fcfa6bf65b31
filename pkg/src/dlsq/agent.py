"""
Per-agent update.

Each round agent ``i`` receives the time-``t`` states ``(x_j, z_j)`` of every
neighbor ``j`` in ``N_i`` -- which always includes ``i`` itself through the
self-arc ``w_ii`` -- and computes

    [x_i(t+1); z_i(t+1)] = E_i [ x_i + kappa_i sum_j w_ij (c x_j + z_j) + cbar kappa_i A_i'b_i ;
                                 z_i - kappa_i sum_j w_ij x_j ]

with ``E_i`` the inverse of

    [[ (1 + c kappa_i d_i) I + cbar kappa_i A_i'A_i,  kappa_i d_i I ],
     [ -kappa_i d_i I,                                 I            ]].

Leaving the self term out of the neighbor sums gives a different (and
wrong) iteration, since ``d_i`` counts ``w_ii``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg

__all__ = [
    "Hyperparams", "AgentState", "AgentUpdater", "MissingMessageError",
    "precompute", "step", "implicit_residual", "zero_state",
]


class MissingMessageError(KeyError):
    pass


@dataclass(frozen=True)
class Hyperparams:
    """Global constants shared by all agents: ``c >= 0`` and ``cbar > 0``."""

    c: float = 0.0
    cbar: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.c) or self.c < 0:
            raise ValueError(f"c must be a finite number >= 0, got {self.c}")
        if not np.isfinite(self.cbar) or self.cbar <= 0:
            raise ValueError(f"cbar must be a finite number > 0, got {self.cbar}")


@dataclass(frozen=True)
class AgentState:
    x: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float).ravel()
        z = np.array(self.z, dtype=float).ravel()
        if x.shape != z.shape:
            raise ValueError(f"x and z differ in size: {x.size} vs {z.size}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
            raise ValueError("state has non-finite entries")
        x.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    @classmethod
    def _trusted(cls, x, z):
        # caller guarantees finite 1-D arrays of equal size
        obj = object.__new__(cls)
        x.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(obj, "x", x)
        object.__setattr__(obj, "z", z)
        return obj


def zero_state(n):
    return AgentState(np.zeros(n), np.zeros(n))


@dataclass(frozen=True)
class AgentUpdater:
    index: int
    kappa: float
    degree: float
    weights: dict
    A: np.ndarray
    b: np.ndarray
    hp: Hyperparams
    AtA: np.ndarray
    gain_Atb: np.ndarray
    system: np.ndarray
    factor: linalg.LUFactor
    order: tuple
    w: np.ndarray

    @property
    def n(self):
        return self.A.shape[1]


def precompute(i, net, g, hp, data):
    """
    Cache ``A_i'A_i``, ``cbar kappa_i A_i'b_i`` and the LU factors of the
    2n x 2n system behind ``E_i``.

    The system's symmetric part is block-diagonal positive definite, so the
    factorization cannot fail for valid inputs.
    """
    kappa = float(g.kappa[i])
    d = float(net.degrees[i])
    A = data.A
    n = A.shape[1]
    AtA = A.T @ A
    I = np.eye(n)
    system = np.block([
        [(1.0 + hp.c * kappa * d) * I + hp.cbar * kappa * AtA, kappa * d * I],
        [-kappa * d * I, I],
    ])
    try:
        factor = linalg.lu_factor(system)
    except linalg.SingularMatrixError as exc:
        raise RuntimeError(f"agent {i + 1}: update system is singular") from exc
    weights = {j: float(net.W[i, j]) for j in net.neighbors[i]}
    return AgentUpdater(index=i, kappa=kappa, degree=d, weights=weights, A=A, b=data.b,
                        hp=hp, AtA=AtA, gain_Atb=hp.cbar * kappa * (A.T @ data.b),
                        system=system, factor=factor, order=tuple(weights),
                        w=np.array(list(weights.values())))


def _check_msgs(u, msgs):
    if len(msgs) == len(u.order) and all(j in msgs for j in u.order):
        return
    missing = [j for j in u.weights if j not in msgs]
    if missing:
        raise MissingMessageError(
            f"agent {u.index + 1}: no message from neighbors {[j + 1 for j in missing]}")
    extra = [j for j in msgs if j not in u.weights]
    if extra:
        raise ValueError(
            f"agent {u.index + 1}: received messages from non-neighbors {[j + 1 for j in extra]}")


def _neighbor_sums(u, msgs):
    X = np.array([msgs[j][0] for j in u.order], dtype=float)
    Z = np.array([msgs[j][1] for j in u.order], dtype=float)
    if X.shape != (len(u.order), u.A.shape[1]) or Z.shape != X.shape:
        raise ValueError(f"agent {u.index + 1}: neighbor messages must be {u.A.shape[1]}-vectors")
    return u.w @ X, u.w @ Z


def step(u, own, msgs):
    """
    One synchronous update of agent ``u.index``.

    Parameters
    ----------
    u : AgentUpdater
    own : AgentState
        The agent's own time-t state.
    msgs : mapping
        ``msgs[j] = (x_j(t), z_j(t))`` for exactly the neighbors ``j`` in
        ``N_i``, including ``j = i``.

    Returns
    -------
    AgentState
        The time-(t+1) state.
    """
    n = u.A.shape[1]
    if own.x.shape != (n,):
        raise ValueError(f"agent {u.index + 1}: state has dimension {own.x.size}, expected {n}")
    _check_msgs(u, msgs)
    sx, sz = _neighbor_sums(u, msgs)
    k = u.kappa
    rhs = np.empty(2 * n)
    rhs[:n] = own.x + k * (u.hp.c * sx + sz) + u.gain_Atb
    rhs[n:] = own.z - k * sx
    new = u.factor.solve(rhs)
    if not np.isfinite(new).all():
        raise FloatingPointError(f"agent {u.index + 1}: update produced non-finite state")
    return AgentState._trusted(new[:n], new[n:])


def implicit_residual(u, own, msgs, new):
    """
    Residuals of the implicit update equations at ``new``.

    Returns ``(rx, rz)``: the norms of the x- and z-equations, each divided
    by ``1 + `` the largest state magnitude involved.
    """
    _check_msgs(u, msgs)
    k, c, cbar = u.kappa, u.hp.c, u.hp.cbar
    rx = own.x - new.x - cbar * k * (u.AtA @ new.x - u.A.T @ u.b)
    rz = own.z - new.z
    for j, w in u.weights.items():
        xj, zj = (np.asarray(v) for v in msgs[j])
        rx -= k * w * (new.z - zj) + c * k * w * (new.x - xj)
        rz += k * w * (new.x - xj)
    scale = 1.0 + max(np.max(np.abs(v)) for v in
                      [own.x, own.z, new.x, new.z] + [np.asarray(a) for pair in msgs.values() for a in pair])
    return float(np.linalg.norm(rx)) / scale, float(np.linalg.norm(rz)) / scale
