import numpy as np
import pytest

from dlsq import generate, network
from dlsq.problem import LocalData
from dlsq.problemfile import load

FIVE_W = np.array([
    [0.9, 1.5, 0.0, 0.6, 0.0],
    [1.5, 0.7, 1.8, 0.0, 0.0],
    [0.0, 1.8, 1.0, 2.2, 0.0],
    [0.6, 0.0, 2.2, 0.8, 1.4],
    [0.0, 0.0, 0.0, 1.4, 0.6],
])
FIVE_A = np.array([[1, 2, 3, 4], [4, 5, 6, 7], [1, 2, 3, 4], [5, 6, 3, 4], [4, 3, 2, 1]], float)
FIVE_B = np.array([10, 20, 15, 17, 6], float)

# minimum-norm least-squares solution, frozen from numpy.linalg.lstsq
FIVE_XSTAR = np.array([-0.59659091, 1.99431818, -0.33522727, 2.25568182])


@pytest.fixture(scope="session")
def five_agents():
    pf = load("five_agents")
    net = pf.network()
    return pf, net, network.default_gains(net), pf.blocks


@pytest.fixture
def scalar_case():
    """m = 1, n = 1, w = 1, A = 1, b = 1: the smallest nontrivial instance."""
    net = network.build([[1.0]])
    return net, network.default_gains(net), (LocalData([[1.0]], [1.0], 0),)


def corpus(count, seed, **kw):
    rng = np.random.default_rng(seed)
    return [generate.random_instance(rng, **kw) for _ in range(count)]
