"""
Synchronous round engine for the distributed least-squares update.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import agent as agent_mod
from .network import check_gain_condition
from .problem import assemble

__all__ = [
    "RunConfig", "RoundRecord", "RunTrajectory", "InsufficientDataError",
    "metric_W", "consensus_spread", "initial_states", "run", "exp_fit",
    "DIVERGENCE_FACTOR",
]

log = logging.getLogger(__name__)

DIVERGENCE_FACTOR = 1e12
FIT_FLOOR = 1e-14


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """
    Parameters
    ----------
    max_rounds : int
    tol : float
        Stop as soon as ``W(t) <= tol``.
    record_every : int
        Keep every k-th round (round 0 and the last round are always kept).
    init : {"zeros", "random"} or sequence of (x, z) pairs
    rng_seed : int
        Seed for ``init="random"``.
    keep_states : bool
        Store every agent's state on recorded rounds.
    """

    max_rounds: int = 5000
    tol: float = 1e-12
    record_every: int = 1
    init: object = "zeros"
    rng_seed: int = 0
    keep_states: bool = False

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass(frozen=True)
class RoundRecord:
    t: int
    W: float
    spread: float
    normal_residual: float
    states: tuple | None = None


@dataclass
class RunTrajectory:
    records: list = field(default_factory=list)
    final_states: tuple = ()
    reason: str = ""
    rounds: int = 0

    @property
    def t(self):
        return np.array([r.t for r in self.records])

    @property
    def W(self):
        return np.array([r.W for r in self.records])

    @property
    def final_mean(self):
        return np.mean([s.x for s in self.final_states], axis=0)


def _xs(states):
    return np.array([s.x for s in states], dtype=float)


def metric_W(states, sys):
    """
    ``W(t) = 1/(2m) sum_i |A'A x_i - A'b|^2 + 1/(2m^2) sum_ij |x_i - x_j|^2``.

    Uses the global stacked ``A``; it is a diagnostic, not something any
    agent could compute.
    """
    X = _xs(states)
    m = X.shape[0]
    if X.ndim != 2 or X.shape[1] != sys.n:
        raise ValueError(f"expected {sys.n}-dimensional states")
    G = X @ sys.AtA - sys.Atb
    opt = np.sum(G * G) / (2 * m)
    # sum_ij |x_i - x_j|^2 = 2m sum_i |x_i - xbar|^2
    dev = X - X.mean(axis=0)
    return float(opt + np.sum(dev * dev) / m)


def consensus_spread(states):
    """``max_ij |x_i - x_j|_2``."""
    X = _xs(states)
    diff = X[:, None, :] - X[None, :, :]
    return float(np.sqrt(np.max(np.sum(diff * diff, axis=-1))))


def initial_states(init, m, n, seed=0):
    if isinstance(init, str):
        if init == "zeros":
            return tuple(agent_mod.zero_state(n) for _ in range(m))
        if init == "random":
            rng = np.random.default_rng(seed)
            return tuple(agent_mod.AgentState(rng.standard_normal(n), rng.standard_normal(n))
                         for _ in range(m))
        raise ValueError(f"unknown init {init!r}")
    states = tuple(s if isinstance(s, agent_mod.AgentState) else agent_mod.AgentState(*s)
                   for s in init)
    if len(states) != m or any(s.x.size != n for s in states):
        raise ValueError(f"init must give {m} states of dimension {n}")
    return states


def run(net, gains, hp, blocks, cfg=RunConfig(), observer=None):
    """
    Run synchronous rounds until ``W(t) <= cfg.tol``, ``cfg.max_rounds``
    rounds have elapsed, or ``W(t)`` exceeds ``1e12 * max(W(0), 1)``.

    Every round all agents read the same time-t snapshot, then all states
    advance together.

    Parameters
    ----------
    observer : callable, optional
        Called as ``observer(t, i, msgs)`` right before agent ``i`` steps in
        round ``t``; for instrumentation only.

    Returns
    -------
    RunTrajectory
        ``reason`` is one of ``"tolerance"``, ``"max_rounds"``, ``"diverged"``.
    """
    sys = assemble(blocks)
    if len(blocks) != net.m:
        raise ValueError(f"network has {net.m} agents but {len(blocks)} blocks given")
    verdict = check_gain_condition(net, gains)
    if not verdict.passed:
        log.warning("gain condition DKD - WKW >= 0 fails (min eigenvalue %.3e); "
                    "convergence is not guaranteed", verdict.min_eigenvalue)

    updaters = [agent_mod.precompute(i, net, gains, hp, blocks[i]) for i in range(net.m)]
    states = initial_states(cfg.init, net.m, sys.n, cfg.rng_seed)

    def record(t, states, W):
        return RoundRecord(t=t, W=W, spread=consensus_spread(states),
                           normal_residual=float(np.linalg.norm(sys.AtA @ _xs(states).mean(axis=0) - sys.Atb)),
                           states=states if cfg.keep_states else None)

    W0 = metric_W(states, sys)
    traj = RunTrajectory(records=[record(0, states, W0)])
    limit = DIVERGENCE_FACTOR * max(W0, 1.0)
    reason = "max_rounds"
    t = 0
    while t < cfg.max_rounds:
        snapshot = {i: (s.x, s.z) for i, s in enumerate(states)}
        new = []
        for u in updaters:
            msgs = {j: snapshot[j] for j in u.weights}
            if observer is not None:
                observer(t, u.index, msgs)
            new.append(agent_mod.step(u, states[u.index], msgs))
        states = tuple(new)
        t += 1
        W = metric_W(states, sys)
        if not math.isfinite(W) or W > limit:
            reason = "diverged"
        elif W <= cfg.tol:
            reason = "tolerance"
        done = reason != "max_rounds" or t == cfg.max_rounds
        if done or t % cfg.record_every == 0:
            if math.isfinite(W):
                traj.records.append(record(t, states, W))
        if done:
            break
    traj.final_states = states
    traj.reason = reason
    traj.rounds = t
    return traj


def exp_fit(trajectory, floor=FIT_FLOOR):
    """
    Fit ``log W(t) = a + rate * t`` over the last half of the recorded
    rounds with ``W(t) > floor``.

    ``trajectory`` is a RunTrajectory or an iterable of ``(t, W)`` pairs.

    Returns
    -------
    dict
        ``rate`` (natural-log decay per round) and ``r_squared``.
    """
    if isinstance(trajectory, RunTrajectory):
        pairs = [(r.t, r.W) for r in trajectory.records]
    else:
        pairs = list(trajectory)
    pts = np.array([(t, w) for t, w in pairs if w > floor], dtype=float).reshape(-1, 2)
    if len(pts) < 20:
        raise InsufficientDataError(f"need >= 20 rounds above {floor:g}, have {len(pts)}")
    pts = pts[len(pts) // 2:]
    t, y = pts[:, 0], np.log(pts[:, 1])
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    # a constant or exactly geometric series fits perfectly
    r2 = 1.0 if ss_res <= 1e-20 * max(ss_tot, 1.0) else 1.0 - ss_res / ss_tot
    return {"rate": float(slope), "r_squared": r2}
