"""Random test instances: connected weighted graphs with self-arcs and
partitioned linear systems."""

from __future__ import annotations

import numpy as np

from . import network
from .problem import LocalData

__all__ = ["random_weights", "random_network", "random_blocks", "random_instance"]


def random_weights(m, rng, edge_prob=0.4, low=0.2, high=2.0):
    """
    Symmetric weights of a random connected graph on ``m`` nodes.

    A random spanning tree guarantees connectivity; each remaining pair is
    joined with probability ``edge_prob``. Every node gets a self-arc.
    Weights are uniform on ``[low, high]``.
    """
    W = np.zeros((m, m))
    perm = rng.permutation(m)
    for k in range(1, m):
        i, j = perm[k], perm[rng.integers(k)]
        W[i, j] = W[j, i] = rng.uniform(low, high)
    for i in range(m):
        for j in range(i + 1, m):
            if W[i, j] == 0 and rng.random() < edge_prob:
                W[i, j] = W[j, i] = rng.uniform(low, high)
    W[np.diag_indices(m)] = rng.uniform(low, high, size=m)
    return W


def random_network(m, rng, **kw):
    return network.build(random_weights(m, rng, **kw))


def random_blocks(m, n, rng, max_rows=2, rank=None):
    """
    Random per-agent blocks with ``1..max_rows`` rows each.

    With ``rank`` given, every ``A_i`` has its rows in one common
    ``rank``-dimensional row space, so ``dim ker A >= n - rank``.
    """
    rows = rng.integers(1, max_rows + 1, size=m)
    basis = rng.standard_normal((rank, n)) if rank is not None else None
    blocks = []
    for i, r in enumerate(rows):
        if basis is None:
            A = rng.standard_normal((r, n))
        else:
            A = rng.standard_normal((r, rank)) @ basis
        blocks.append(LocalData(A, rng.standard_normal(r), i))
    return blocks


def random_instance(rng, m_max=4, n_max=3, max_rows=2, full_rank=None, max_cond=100.0,
                    min_sv=0.1):
    """
    ``(net, blocks)`` with ``m <= m_max`` agents and ``n <= n_max`` unknowns.

    ``full_rank=True`` redraws until the stacked ``A`` has full column rank
    with condition number at most ``max_cond`` and smallest singular value
    at least ``min_sv`` (tiny singular values mean very slow modes);
    ``False`` forces a nontrivial kernel; ``None`` takes whatever comes.
    """
    while True:
        m = int(rng.integers(1, m_max + 1))
        n = int(rng.integers(1, n_max + 1))
        if full_rank is False:
            if n < 2:
                continue
            blocks = random_blocks(m, n, rng, max_rows, rank=int(rng.integers(1, n)))
        else:
            blocks = random_blocks(m, n, rng, max_rows)
        A = np.vstack([b.A for b in blocks])
        sv = np.linalg.svd(A, compute_uv=False)
        full = len(sv) == n and sv[-1] * max_cond >= sv[0] and sv[-1] >= min_sv
        if full_rank is None:
            full = None
        if full == full_rank:
            return random_network(m, rng), blocks
