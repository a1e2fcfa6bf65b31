"""
Global form of the distributed update and numerical certification of its
spectral properties.

Stacking ``y = col(x, z)`` turns one round of all agents into
``y(t+1) = Q y(t) + offset``. The checks here verify, on a concrete
instance, that the spectrum of ``Q`` has the structure that forces
convergence: no eigenvalue outside the unit disk, none at ``-1``, and a
semisimple eigenvalue ``1`` whose eigenvectors are exactly the consensus
least-squares directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .network import check_degenerate_direction, lift
from .problem import assemble

__all__ = [
    "GlobalSystem", "SpectralReport", "QuadraticPencil", "PencilReport",
    "EquilibriumResidual", "build_global", "spectral_report", "build_pencil",
    "pencil_check", "equilibrium_residual", "lagrangian_value",
    "lagrangian_gradient", "kkt_multiplier", "MAX_DIM", "UNIT_WINDOW",
]

MAX_DIM = 200
UNIT_WINDOW = 1e-6


class TooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class GlobalSystem:
    """
    ``Q`` and ``offset`` of the stacked iteration, plus the lifted operators
    they were built from (each ``M (x) I_n``).
    """

    Q: np.ndarray
    offset: np.ndarray
    Abar: np.ndarray
    b: np.ndarray
    Lbar: np.ndarray
    Dbar: np.ndarray
    Wbar: np.ndarray
    Kbar: np.ndarray
    c: float
    cbar: float
    m: int
    n: int

    @property
    def dim(self):
        return self.Q.shape[0]


def build_global(net, gains, hp, blocks):
    """
    Form ``Q = Left^{-1} Right`` and ``offset = Left^{-1} [cbar K A'b; 0]``
    by an LU solve, where

        Left  = [[I + cbar K A'A + c K D,  K D], [-K D, I]]
        Right = [[I + c K W,               K W], [-K W, I]]

    with every graph matrix lifted by ``(x) I_n``.
    """
    sys = assemble(blocks)
    m, n = net.m, sys.n
    if len(blocks) != m:
        raise ValueError(f"network has {m} agents but {len(blocks)} blocks given")
    if 2 * m * n > MAX_DIM:
        raise TooLargeError(f"2mn = {2 * m * n} exceeds the desk-scale limit {MAX_DIM}")
    Abar = sys.Abar
    Dbar, Wbar, Kbar, Lbar = (lift(M, n) for M in (net.D, net.W, gains.K, net.L))
    I = np.eye(m * n)
    left = np.block([
        [I + hp.cbar * Kbar @ Abar.T @ Abar + hp.c * Kbar @ Dbar, Kbar @ Dbar],
        [-Kbar @ Dbar, I],
    ])
    right = np.block([
        [I + hp.c * Kbar @ Wbar, Kbar @ Wbar],
        [-Kbar @ Wbar, I],
    ])
    rhs = np.concatenate([hp.cbar * Kbar @ Abar.T @ sys.b, np.zeros(m * n)])
    factor = linalg.lu_factor(left)
    return GlobalSystem(Q=factor.solve(right), offset=factor.solve(rhs), Abar=Abar,
                        b=sys.b, Lbar=Lbar, Dbar=Dbar, Wbar=Wbar, Kbar=Kbar,
                        c=hp.c, cbar=hp.cbar, m=m, n=n)


@dataclass
class SpectralReport:
    eigenvalues: np.ndarray
    max_magnitude: float
    min_dist_to_minus_one: float
    unit_algebraic: int
    unit_geometric: int
    unit_expected: int
    kernel_dim: int
    max_non_unit_on_circle: float
    verdicts: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.verdicts.values())


def spectral_report(gs, net, gains, blocks, tol=1e-9, minus_one_gap=0.01,
                    rank_tol=1e-8):
    """
    Check the eigenvalue structure of ``Q``.

    Verdicts
    --------
    radius
        Every ``|lambda| <= 1 + tol``.
    not_minus_one
        ``min |lambda + 1| > minus_one_gap``.
    unit_semisimple
        The number of eigenvalues within ``1e-6`` of 1 equals
        ``2mn - rank(Q - I)``.
    unit_eigenspace
        That number also equals the dimension of
        ``{(u, v) : Abar u = 0, Lbar u = 0, Lbar v = 0}``, which for a
        connected graph is ``n + dim ker A``.
    only_one_on_circle
        Unless ``c == 0`` and a degenerate direction exists, no eigenvalue
        other than 1 has ``|lambda| >= 1 - tol``.
    """
    lam = linalg.gen_eigenvalues(gs.Q)
    mag = np.abs(lam)
    near_one = np.abs(lam - 1.0) < UNIT_WINDOW
    alg = int(np.count_nonzero(near_one))
    geo = gs.dim - linalg.rank(gs.Q - np.eye(gs.dim), rank_tol)

    mn = gs.m * gs.n
    ker_AL = mn - linalg.rank(np.vstack([gs.Abar, gs.Lbar]), rank_tol)
    ker_L = mn - linalg.rank(gs.Lbar, rank_tol)
    A = assemble(blocks).A
    kernel_dim = gs.n - linalg.rank(A, rank_tol)

    others = mag[~near_one]
    max_other = float(others.max()) if others.size else 0.0
    if gs.c > 0:
        allowed = False
    else:
        allowed = check_degenerate_direction(net, gains, blocks).exists

    verdicts = {
        "radius": bool(mag.max() <= 1.0 + tol),
        "not_minus_one": bool(np.min(np.abs(lam + 1.0)) > minus_one_gap),
        "unit_semisimple": alg == geo,
        "unit_eigenspace": alg == ker_AL + ker_L == gs.n + kernel_dim,
        "only_one_on_circle": allowed or max_other < 1.0 - tol,
    }
    return SpectralReport(eigenvalues=lam, max_magnitude=float(mag.max()),
                          min_dist_to_minus_one=float(np.min(np.abs(lam + 1.0))),
                          unit_algebraic=alg, unit_geometric=geo,
                          unit_expected=ker_AL + ker_L, kernel_dim=kernel_dim,
                          max_non_unit_on_circle=max_other, verdicts=verdicts)


@dataclass(frozen=True)
class QuadraticPencil:
    """``M(lambda) = lambda^2 M2 + lambda M1 + M0``."""

    M0: np.ndarray
    M1: np.ndarray
    M2: np.ndarray

    def __call__(self, lam):
        return lam * lam * self.M2 + lam * self.M1 + self.M0


def build_pencil(gs):
    D, W, K, AtA = gs.Dbar, gs.Wbar, gs.Kbar, gs.Abar.T @ gs.Abar
    Kinv = np.diag(1.0 / np.diag(K))
    c, cbar = gs.c, gs.cbar
    M2 = D @ K @ D + Kinv + c * D + cbar * AtA
    M1 = -W @ K @ D - D @ K @ W - 2 * Kinv - c * D - c * W - cbar * AtA
    M0 = W @ K @ W + Kinv + c * W
    return QuadraticPencil(M0=M0, M1=M1, M2=M2)


@dataclass
class PencilReport:
    min_eig_M2: float
    min_eig_M0: float
    min_eig_M_minus_one: float
    max_pencil_residual: float
    max_reconstruction_residual: float
    checked: int
    violations: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations


def _clusters(lam, width):
    groups = []
    for k in np.argsort(-np.abs(lam)):
        for g in groups:
            if abs(lam[k] - lam[g[0]]) < width:
                g.append(k)
                break
        else:
            groups.append([k])
    return groups


def pencil_check(pencil, gs, tol=1e-6, cluster=UNIT_WINDOW, eig_tol=1e-8):
    """
    Cross-check the non-unit spectrum of ``Q`` against the quadratic pencil.

    For every eigenvalue ``lambda`` of ``Q`` away from 1, each eigenvector
    ``col(u, v)`` must satisfy ``M(lambda) u = 0`` (relative to
    ``|u| (|lambda|^2 |M2| + |lambda| |M1| + |M0|)``) and
    ``v = K (lambda D - W) u / (lambda - 1)``. Also checks that ``M2``,
    ``M0`` and ``M(-1)`` are positive definite.

    Eigenvectors come from the kernel of ``Q - lambda I``, one basis per
    cluster of nearly equal eigenvalues; the basis dimension is the
    numerical nullity at ``eig_tol`` so Jordan blocks contribute only
    true eigenvectors.
    """
    lam = linalg.gen_eigenvalues(gs.Q)
    mn = gs.m * gs.n
    violations = []
    mins = {}
    for name, M in [("M2", pencil.M2), ("M0", pencil.M0), ("M(-1)", pencil(-1.0))]:
        mins[name] = float(linalg.sym_eigenvalues(M)[0])
        if not mins[name] > 0:
            violations.append(f"{name} is not positive definite (min eigenvalue {mins[name]:.3e})")

    worst_M = worst_rec = 0.0
    checked = 0
    I = np.eye(gs.dim)
    for group in _clusters(lam, cluster):
        mu = complex(np.mean(lam[group]))
        if abs(mu - 1.0) <= 10 * tol:
            continue
        shifted = gs.Q - mu * I
        # defective clusters have fewer eigenvectors than members
        geo = gs.dim - linalg.rank(shifted, eig_tol)
        basis = linalg.nullspace(shifted, dim=min(max(geo, 1), len(group)))
        Mlam = pencil(mu)
        # scale of the summed terms; |M(lambda)| itself can vanish at a root
        Mnorm = (abs(mu) ** 2 * np.linalg.norm(pencil.M2, 2) + abs(mu) * np.linalg.norm(pencil.M1, 2)
                 + np.linalg.norm(pencil.M0, 2))
        for vec in basis.T:
            u, v = vec[:mn], vec[mn:]
            un = np.linalg.norm(u)
            res = np.linalg.norm(Mlam @ u) / (un * Mnorm) if un > 0 else np.inf
            rec = gs.Kbar @ (mu * gs.Dbar - gs.Wbar) @ u / (mu - 1.0)
            rres = np.linalg.norm(v - rec) / max(np.linalg.norm(vec), 1e-300)
            worst_M, worst_rec = max(worst_M, res), max(worst_rec, rres)
            checked += 1
            if not res <= tol:
                violations.append(f"|M(lambda) u| residual {res:.3e} at lambda={mu:.6g}")
            if not rres <= tol:
                violations.append(f"multiplier reconstruction residual {rres:.3e} at lambda={mu:.6g}")
    return PencilReport(min_eig_M2=mins["M2"], min_eig_M0=mins["M0"],
                        min_eig_M_minus_one=mins["M(-1)"], max_pencil_residual=worst_M,
                        max_reconstruction_residual=worst_rec, checked=checked,
                        violations=violations)


@dataclass(frozen=True)
class EquilibriumResidual:
    r1: float
    r2: float
    fixed_point: float
    consistent: bool


def equilibrium_residual(gs, x, z, tol=1e-8):
    """
    KKT residuals ``r1 = |cbar (A'A x - A'b) + L z|``, ``r2 = |L x|`` and
    the fixed-point residual ``|(I - Q) y - offset|`` at ``y = col(x, z)``.

    ``consistent`` records whether both views agree on whether ``y`` is an
    equilibrium at ``tol``.
    """
    x = np.asarray(x, dtype=float).ravel()
    z = np.asarray(z, dtype=float).ravel()
    mn = gs.m * gs.n
    if x.size != mn or z.size != mn:
        raise ValueError(f"stacked states must have length {mn}")
    r1 = float(np.linalg.norm(gs.cbar * (gs.Abar.T @ (gs.Abar @ x - gs.b)) + gs.Lbar @ z))
    r2 = float(np.linalg.norm(gs.Lbar @ x))
    y = np.concatenate([x, z])
    fp = float(np.linalg.norm(y - gs.Q @ y - gs.offset))
    return EquilibriumResidual(r1=r1, r2=r2, fixed_point=fp,
                               consistent=(max(r1, r2) < tol) == (fp < tol))


def kkt_multiplier(gs, x):
    """
    A multiplier ``z`` solving ``Lbar z = -cbar (A'A x - A'b)`` in the
    least-squares sense (minimum norm).
    """
    g = gs.cbar * (gs.Abar.T @ (gs.Abar @ np.asarray(x, dtype=float) - gs.b))
    return -np.linalg.pinv(gs.Lbar) @ g


def lagrangian_value(x, z, blocks, net, hp):
    """``G(x, z) = cbar/2 |Abar x - b|^2 + z' Lbar x``."""
    sys = assemble(blocks)
    x = np.asarray(x, dtype=float).ravel()
    z = np.asarray(z, dtype=float).ravel()
    if x.size != sys.Abar.shape[1] or z.size != x.size:
        raise ValueError(f"stacked states must have length {sys.Abar.shape[1]}")
    r = sys.Abar @ x - sys.b
    return float(0.5 * hp.cbar * r @ r + z @ (lift(net.L, sys.n) @ x))


def lagrangian_gradient(x, z, blocks, net, hp):
    """Analytic ``(dG/dx, dG/dz)``."""
    sys = assemble(blocks)
    Lbar = lift(net.L, sys.n)
    x = np.asarray(x, dtype=float).ravel()
    z = np.asarray(z, dtype=float).ravel()
    return (hp.cbar * sys.Abar.T @ (sys.Abar @ x - sys.b) + Lbar @ z, Lbar @ x)
