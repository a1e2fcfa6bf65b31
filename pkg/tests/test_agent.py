import numpy as np
import pytest

from dlsq import agent, network, problem
from dlsq.agent import AgentState, Hyperparams
from dlsq.problem import LocalData


def _scalar_updater(c=0.0):
    net = network.build([[1.0]])
    return agent.precompute(0, net, network.default_gains(net), Hyperparams(c=c),
                            LocalData([[1.0]], [1.0]))


def test_update_system_scalar():
    u = _scalar_updater()
    # (1 + c k d) + cbar k A'A = 2, k d = 1
    np.testing.assert_allclose(u.system, [[2.0, 1.0], [-1.0, 1.0]])


def test_first_step_from_zero():
    u = _scalar_updater()
    own = agent.zero_state(1)
    new = agent.step(u, own, {0: (own.x, own.z)})
    # [[2, 1], [-1, 1]] (x, z) = (1, 0)  ->  x = z = 1/3
    np.testing.assert_allclose([new.x[0], new.z[0]], [1 / 3, 1 / 3], rtol=1e-14)


def test_least_squares_point_is_fixed():
    u = _scalar_updater(c=2.0)
    own = AgentState(np.array([1.0]), np.array([0.7]))
    new = agent.step(u, own, {0: (own.x, own.z)})
    np.testing.assert_allclose(new.x, own.x, atol=1e-15)
    np.testing.assert_allclose(new.z, own.z, atol=1e-15)


def test_cached_gain_times_local_rhs(five_agents):
    _, net, g, blocks = five_agents
    u = agent.precompute(0, net, g, Hyperparams(), blocks[0])
    np.testing.assert_allclose(u.gain_Atb, np.array([1, 2, 3, 4]) * 10 / 3, rtol=1e-14)
    assert u.order == (0, 1, 3)


def test_step_satisfies_implicit_equations(five_agents):
    _, net, g, blocks = five_agents
    rng = np.random.default_rng(0)
    hp = Hyperparams(c=1.5, cbar=0.7)
    states = [AgentState(rng.standard_normal(4), rng.standard_normal(4)) for _ in range(5)]
    for i in range(5):
        u = agent.precompute(i, net, g, hp, blocks[i])
        msgs = {j: (states[j].x, states[j].z) for j in net.neighbors[i]}
        new = agent.step(u, states[i], msgs)
        rx, rz = agent.implicit_residual(u, states[i], msgs, new)
        assert rx < 1e-14 and rz < 1e-14


def test_missing_and_extra_messages(five_agents):
    _, net, g, blocks = five_agents
    u = agent.precompute(4, net, g, Hyperparams(), blocks[4])
    s = agent.zero_state(4)
    with pytest.raises(agent.MissingMessageError, match="neighbors \\[5\\]"):
        agent.step(u, s, {3: (s.x, s.z)})
    with pytest.raises(ValueError, match="non-neighbors"):
        agent.step(u, s, {3: (s.x, s.z), 4: (s.x, s.z), 0: (s.x, s.z)})


def test_wrong_message_dimension(five_agents):
    _, net, g, blocks = five_agents
    u = agent.precompute(4, net, g, Hyperparams(), blocks[4])
    s = agent.zero_state(4)
    with pytest.raises(ValueError):
        agent.step(u, s, {3: (np.zeros(3), np.zeros(3)), 4: (s.x, s.z)})


def test_zero_row_block_only_averages():
    # an agent whose equations are all zero still participates in consensus
    net = network.build([[1.0, 1.0], [1.0, 1.0]])
    g = network.default_gains(net)
    u = agent.precompute(0, net, g, Hyperparams(c=1.0), LocalData([[0.0]], [0.0]))
    assert not u.gain_Atb.any()
    s0 = AgentState(np.array([0.0]), np.array([0.0]))
    s1 = AgentState(np.array([2.0]), np.array([0.0]))
    new = agent.step(u, s0, {0: (s0.x, s0.z), 1: (s1.x, s1.z)})
    assert 0.0 < new.x[0] < 2.0


def test_hyperparam_and_state_validation():
    with pytest.raises(ValueError):
        Hyperparams(c=-1.0)
    with pytest.raises(ValueError):
        Hyperparams(cbar=0.0)
    with pytest.raises(ValueError):
        AgentState(np.zeros(2), np.zeros(3))
    with pytest.raises(ValueError):
        AgentState(np.array([np.inf]), np.zeros(1))
