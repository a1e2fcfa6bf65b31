import numpy as np
import pytest

from dlsq import network, problem, simulator
from dlsq.agent import AgentState, Hyperparams
from dlsq.problem import LocalData
from dlsq.simulator import RunConfig


def test_metric_two_scalar_agents():
    # A'A = 2, A'b = 2; x = (0, 2): optimality 8 / 4 = 2, consensus 8 / 8 = 1
    sys_ = problem.assemble([LocalData([[1.0]], [1.0], 0), LocalData([[1.0]], [1.0], 1)])
    states = (AgentState([0.0], [0.0]), AgentState([2.0], [0.0]))
    assert simulator.metric_W(states, sys_) == pytest.approx(3.0, rel=1e-15)
    assert simulator.consensus_spread(states) == pytest.approx(2.0)


def test_fixture_initial_metric(five_agents):
    *_, blocks = five_agents
    sys_ = problem.assemble(blocks)
    # A'b = (214, 270, 258, 314) by hand, so W(0) = |A'b|^2 / 2
    states = simulator.initial_states("zeros", 5, 4)
    assert simulator.metric_W(states, sys_) == 141928.0


def test_single_agent_at_equilibrium_stops_after_one_round(scalar_case):
    net, g, blocks = scalar_case
    cfg = RunConfig(init=[([1.0], [0.0])])
    traj = simulator.run(net, g, Hyperparams(), blocks, cfg)
    assert traj.reason == "tolerance" and traj.rounds == 1
    assert [r.t for r in traj.records] == [0, 1]


def test_scalar_case_converges(scalar_case):
    net, g, blocks = scalar_case
    traj = simulator.run(net, g, Hyperparams(), blocks, RunConfig(tol=1e-20))
    assert traj.reason == "tolerance"
    assert traj.final_states[0].x[0] == pytest.approx(1.0, abs=1e-9)


def test_runs_are_deterministic(five_agents):
    _, net, g, blocks = five_agents
    cfg = RunConfig(max_rounds=50, init="random", rng_seed=4)
    a = simulator.run(net, g, Hyperparams(c=1.0), blocks, cfg)
    b = simulator.run(net, g, Hyperparams(c=1.0), blocks, cfg)
    np.testing.assert_array_equal(a.W, b.W)
    assert a.reason == "max_rounds" and a.rounds == 50


def test_record_every_keeps_first_and_last(five_agents):
    _, net, g, blocks = five_agents
    traj = simulator.run(net, g, Hyperparams(), blocks, RunConfig(max_rounds=23, record_every=5))
    assert list(traj.t) == [0, 5, 10, 15, 20, 23]


def test_agents_see_one_snapshot_per_round(five_agents):
    _, net, g, blocks = five_agents
    seen = {}

    def observer(t, i, msgs):
        seen.setdefault(t, {}).update({j: np.array(x) for j, (x, _) in msgs.items()})
        for j, (x, _) in msgs.items():
            np.testing.assert_array_equal(x, seen[t][j])

    cfg = RunConfig(max_rounds=5, keep_states=True)
    traj = simulator.run(net, g, Hyperparams(), blocks, cfg, observer=observer)
    for r in traj.records[:-1]:
        for j, s in enumerate(r.states):
            np.testing.assert_array_equal(seen[r.t][j], s.x)


def test_divergence_detected(caplog):
    # gains far outside DKD - WKW >= 0; spectral radius of the iteration ~ 1.2
    net = network.build([[0.77954885, 0.96084136], [0.96084136, 0.23568451]])
    g = network.make_gains(net, [7.876, 0.554])
    blocks = [LocalData([[-0.773, -3.041, -1.6]], [2.025], 0),
              LocalData([[-0.379, 0.939, -1.658], [-0.225, 0.251, -0.026]], [0.283, 0.15], 1)]
    traj = simulator.run(net, g, Hyperparams(), blocks, RunConfig(max_rounds=5000))
    assert traj.reason == "diverged"
    assert traj.rounds < 5000
    assert "gain condition" in caplog.text


def test_exp_fit_geometric_series():
    pairs = [(t, 5.0 * 0.9 ** t) for t in range(100)]
    fit = simulator.exp_fit(pairs)
    assert fit["rate"] == pytest.approx(np.log(0.9), rel=1e-10)
    assert fit["r_squared"] == 1.0


def test_exp_fit_constant_series():
    fit = simulator.exp_fit([(t, 1.0) for t in range(40)])
    assert fit["rate"] == pytest.approx(0.0, abs=1e-12)
    assert fit["r_squared"] == 1.0


def test_exp_fit_ignores_floor_and_needs_data():
    pairs = [(t, 0.5 ** t) for t in range(30)] + [(t, 1e-20) for t in range(30, 60)]
    assert simulator.exp_fit(pairs)["rate"] == pytest.approx(np.log(0.5))
    with pytest.raises(simulator.InsufficientDataError):
        simulator.exp_fit([(t, 1.0) for t in range(10)])


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(max_rounds=0)
    with pytest.raises(ValueError):
        RunConfig(tol=0.0)
    with pytest.raises(ValueError):
        simulator.initial_states("ones", 2, 2)
    with pytest.raises(ValueError):
        simulator.initial_states([([0.0], [0.0])], 2, 1)
