"""
JSON problem files.

Layout::

    {
      "graph":     {"m": 5, "weights": [[1, 1, 0.9], [1, 2, 1.5], ...]},
      "equations": {"agents": [{"A": [[1, 2, 3, 4]], "b": [10]}, ...]},
      "params":    {"c": 0, "cbar": 1, "gains": "default", ...}
    }

Agent indices are 1-based. Each undirected edge may be listed once in
either orientation (it is mirrored) or twice with equal weights. Every
agent needs a self-weight ``[i, i, w]``.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from . import network
from .problem import LocalData

__all__ = [
    "ProblemFileError", "Params", "ProblemFile", "loads", "load", "dumps",
    "write_atomic", "fixture_path", "FIXTURES",
]

FIXTURES = ("five_agents",)

_TOP_KEYS = {"graph", "equations", "params"}
_GRAPH_KEYS = {"m", "weights"}
_EQ_KEYS = {"agents"}
_AGENT_KEYS = {"A", "b"}
_PARAM_KEYS = {"c", "cbar", "gains", "max_rounds", "tol", "init", "seed", "record_every"}


class ProblemFileError(ValueError):
    pass


@dataclass(frozen=True)
class Params:
    c: float = 0.0
    cbar: float = 1.0
    gains: object = "default"
    max_rounds: int = 5000
    tol: float = 1e-12
    init: str = "zeros"
    seed: int = 0
    record_every: int = 1

    def __post_init__(self):
        if not (isinstance(self.gains, str) and self.gains == "default"):
            object.__setattr__(self, "gains", tuple(float(k) for k in self.gains))
        if self.init not in ("zeros", "random"):
            raise ProblemFileError(f"params.init must be 'zeros' or 'random', got {self.init!r}")


@dataclass(frozen=True)
class ProblemFile:
    weights: np.ndarray
    blocks: tuple
    params: Params = field(default_factory=Params)

    @property
    def m(self):
        return self.weights.shape[0]

    def network(self):
        return network.build(self.weights)

    def gains(self, net=None):
        net = net or self.network()
        if self.params.gains == "default":
            return network.default_gains(net)
        return network.make_gains(net, self.params.gains)

    def with_params(self, **changes):
        return replace(self, params=replace(self.params, **changes))


def _unknown(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ProblemFileError(f"{where} must be an object")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ProblemFileError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _require(obj, keys, where):
    missing = sorted(k for k in keys if k not in obj)
    if missing:
        raise ProblemFileError(f"missing key(s) in {where}: {', '.join(missing)}")


def _parse_weights(graph):
    m = graph["m"]
    if not isinstance(m, int) or isinstance(m, bool) or m < 1:
        raise ProblemFileError("graph.m must be a positive integer")
    W = np.zeros((m, m))
    given = {}
    for k, entry in enumerate(graph["weights"]):
        if not (isinstance(entry, list) and len(entry) == 3):
            raise ProblemFileError(f"graph.weights[{k}] must be [i, j, w]")
        i, j, w = entry
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (i, j)):
            raise ProblemFileError(f"graph.weights[{k}]: indices must be integers")
        if not (1 <= i <= m and 1 <= j <= m):
            raise ProblemFileError(f"graph.weights[{k}]: index out of range 1..{m}")
        w = float(w)
        key = (min(i, j), max(i, j))
        if key in given and given[key] != w:
            raise ProblemFileError(
                f"graph.weights[{k}]: weight {w} for ({i},{j}) conflicts with earlier {given[key]}")
        given[key] = w
        W[i - 1, j - 1] = W[j - 1, i - 1] = w
    return W


def _parse_agents(eqs, m):
    agents = eqs["agents"]
    if not isinstance(agents, list) or len(agents) != m:
        raise ProblemFileError(f"equations.agents must list exactly {m} agents")
    blocks = []
    for k, a in enumerate(agents):
        where = f"equations.agents[{k}]"
        _unknown(a, _AGENT_KEYS, where)
        _require(a, _AGENT_KEYS, where)
        try:
            blocks.append(LocalData(np.array(a["A"], dtype=float), np.array(a["b"], dtype=float), k))
        except (TypeError, ValueError) as exc:
            raise ProblemFileError(f"{where}: {exc}") from exc
    n = {blk.n for blk in blocks}
    if len(n) > 1:
        raise ProblemFileError(f"agents disagree on the number of unknowns: {sorted(n)}")
    return tuple(blocks)


def loads(text):
    """
    Parse problem-file text.

    Raises
    ------
    ProblemFileError
        On malformed JSON (with line and column), unknown or missing keys,
        or inconsistent data. Graph validity (symmetry, connectivity, ...)
        is checked later by ``network.build``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    _unknown(doc, _TOP_KEYS, "top level")
    _require(doc, ("graph", "equations"), "top level")
    _unknown(doc["graph"], _GRAPH_KEYS, "graph")
    _require(doc["graph"], _GRAPH_KEYS, "graph")
    _unknown(doc["equations"], _EQ_KEYS, "equations")
    _require(doc["equations"], _EQ_KEYS, "equations")
    params = doc.get("params", {})
    _unknown(params, _PARAM_KEYS, "params")

    W = _parse_weights(doc["graph"])
    blocks = _parse_agents(doc["equations"], W.shape[0])
    try:
        p = Params(**params)
    except (TypeError, ValueError) as exc:
        raise ProblemFileError(f"params: {exc}") from exc
    return ProblemFile(weights=W, blocks=blocks, params=p)


def load(path):
    """Read a problem file, or a shipped fixture by name (e.g. ``five_agents``)."""
    if not os.path.exists(path) and path in FIXTURES:
        path = fixture_path(path)
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def fixture_path(name):
    return str(resources.files("dlsq") / "data" / f"{name}.json")


def to_dict(pf):
    m = pf.m
    weights = [[i + 1, j + 1, float(pf.weights[i, j])]
               for i in range(m) for j in range(i, m) if pf.weights[i, j] != 0]
    p = pf.params
    return {
        "graph": {"m": m, "weights": weights},
        "equations": {"agents": [{"A": blk.A.tolist(), "b": blk.b.tolist()} for blk in pf.blocks]},
        "params": {
            "c": p.c, "cbar": p.cbar,
            "gains": p.gains if p.gains == "default" else list(p.gains),
            "max_rounds": p.max_rounds, "tol": p.tol, "init": p.init,
            "seed": p.seed, "record_every": p.record_every,
        },
    }


def dumps(pf):
    return json.dumps(to_dict(pf), indent=2)


def write_atomic(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
