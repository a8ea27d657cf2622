import numpy as np
import pytest
from scipy import stats

from adaptsched.agent import (
    AgentConfig,
    DqnAgent,
    build_target,
    epsilon_at,
    preprocess,
    run_episode,
    select_action,
    train_step,
)
from adaptsched.qnet import QNetworkParams, forward
from adaptsched.replay import Experience, PriorityStore
from adaptsched.rewards import RewardWeights
from adaptsched.schedulers import SchedulerKind
from adaptsched.sim import SimConfig, Simulation

from conftest import make_job, make_user


def constant_net(value: float, n_inputs=6) -> QNetworkParams:
    """A network whose output is `value` for every state and action."""
    params = QNetworkParams(n_inputs=n_inputs, hidden=(4,), branch=3, dtype=np.float64, seed=0)
    params.theta[...] = 0.0
    params.biases[len(params.hidden) + 1][...] = value  # value head bias
    return params


# ---------------------------------------------------------------- preprocess

def test_preprocess_empty_queues():
    users = [make_user(0, gain=0.5), make_user(1, gain=2.0, requested=4, scheduled=1)]
    state = preprocess([], users)
    assert state.tolist() == [0.0, 0.5, 0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 0.0, 0.25]


def test_preprocess_queue_features():
    users = [make_user(0, gain=1.5)]
    queue = [make_job(0, 0, 3, 5), make_job(1, 0, 2, 1)]
    state = preprocess(queue, users)
    assert state.tolist() == [5.0, 1.5, 3.0, 1.0, 1.0]


def test_preprocess_length_is_five_per_user():
    users = [make_user(i) for i in range(10)]
    assert preprocess([], users).shape == (50,)


# ---------------------------------------------------------------- action choice

def test_greedy_argmax_with_low_index_ties():
    rng = np.random.default_rng(0)
    assert select_action(np.array([1.0, 3.0, 2.0, 0.0]), 0.0, rng) == 1
    assert select_action(np.array([2.0, 2.0, 2.0, 2.0]), 0.0, rng) == 0


def test_full_exploration_is_uniform():
    rng = np.random.default_rng(12)
    counts = np.zeros(4)
    for _ in range(100_000):
        counts[select_action(np.zeros(4), 1.0, rng)] += 1
    assert stats.chisquare(counts).pvalue > 0.01


def test_greedy_invariant_to_constant_shift():
    rng = np.random.default_rng(3)
    for _ in range(100):
        q = rng.normal(size=4)
        assert select_action(q, 0.0, rng) == select_action(q + 123.456, 0.0, rng)


# ---------------------------------------------------------------- epsilon schedule

def test_epsilon_anchors_and_linearity():
    cfg = AgentConfig(episodes=10_000)
    assert epsilon_at(0, cfg) == pytest.approx(0.99)
    assert epsilon_at(8_000, cfg) == 0.0
    assert epsilon_at(4_000, cfg) == pytest.approx(0.495)
    assert epsilon_at(10_000, cfg) == 0.0
    values = [epsilon_at(e, cfg) for e in range(0, 10_001, 250)]
    assert all(a >= b for a, b in zip(values, values[1:]))
    for episode in range(0, 8_001, 800):
        expected = 0.99 * (1 - episode / 8_000)
        assert epsilon_at(episode, cfg) == pytest.approx(expected)


# ---------------------------------------------------------------- targets

def test_target_reduces_to_reward_when_myopic():
    net = constant_net(5.0)
    e = Experience(np.zeros(6, np.float32), 1, 2.5, np.ones(6, np.float32))
    assert build_target(e, net, gamma=0.0) == pytest.approx(2.5)


def test_target_bootstraps_from_target_net_max():
    net = constant_net(2.0)
    e = Experience(np.zeros(6, np.float32), 0, 1.0, np.ones(6, np.float32))
    assert build_target(e, net, gamma=0.9) == pytest.approx(2.8)


def test_terminal_target_ignores_next_state():
    net = constant_net(2.0)
    for fill in (0.0, 7.0, -3.0):
        e = Experience(
            np.zeros(6, np.float32), 0, 1.0, np.full(6, fill, np.float32), terminal=True
        )
        assert build_target(e, net, gamma=0.9) == pytest.approx(1.0)


# ---------------------------------------------------------------- training

def _fresh_trainer(batch_size=1, lr=1e-4):
    cfg = AgentConfig(batch_size=batch_size, learning_rate=lr, target_sync_period=100)
    online = QNetworkParams(n_inputs=4, hidden=(32, 32), branch=16, dtype=np.float64, seed=11)
    target = online.clone()
    store = PriorityStore(64)
    return cfg, online, target, store


def test_train_step_skips_until_batch_available():
    cfg, online, target, store = _fresh_trainer(batch_size=4)
    store.push(Experience(np.zeros(4, np.float32), 0, 1.0, np.zeros(4, np.float32)))
    before = online.theta.copy()
    train_step(online, target, store, np.random.default_rng(0), cfg)
    assert np.array_equal(online.theta, before)
    assert online.adam_steps == 0


def test_train_step_noop_on_exact_estimates():
    cfg, online, target, store = _fresh_trainer(batch_size=1)
    rng = np.random.default_rng(2)
    s = rng.normal(size=4).astype(np.float32)
    a = int(rng.integers(4))
    store.push(Experience(s, a, float(forward(online, s)[a]), s, terminal=True))
    before = online.theta.copy()
    train_step(online, target, store, rng, cfg)
    assert np.array_equal(online.theta, before)  # zero TD error, zero gradient


def test_single_experience_regression_converges():
    cfg, online, target, store = _fresh_trainer(batch_size=1, lr=1e-4)
    s = np.array([0.3, -0.2, 0.9, 0.1], dtype=np.float32)
    store.push(Experience(s, 2, 1.0, np.zeros(4, np.float32), terminal=True))
    rng = np.random.default_rng(1)
    for _ in range(5_000):
        target = train_step(online, target, store, rng, cfg)
    assert abs(1.0 - forward(online, s)[2]) < 1e-3


def test_train_step_refreshes_sampled_priorities():
    cfg, online, target, store = _fresh_trainer(batch_size=2)
    rng = np.random.default_rng(3)
    for _ in range(2):
        s = rng.normal(size=4).astype(np.float32)
        store.push(Experience(s, 1, 5.0, s, terminal=True))
    before = store.priorities().copy()
    train_step(online, target, store, rng, cfg)
    assert not np.array_equal(store.priorities(), before)


def test_target_syncs_on_period():
    cfg, online, target, store = _fresh_trainer(batch_size=1)
    cfg.target_sync_period = 3
    s = np.zeros(4, np.float32)
    store.push(Experience(s, 0, 1.0, s, terminal=True))
    rng = np.random.default_rng(0)
    for step in range(1, 7):
        target = train_step(online, target, store, rng, cfg)
        if step % 3 == 0:
            assert np.array_equal(target.theta, online.theta)
        else:
            assert not np.array_equal(target.theta, online.theta)


# ---------------------------------------------------------------- episodes

def _agent(sim_users=10, **cfg_kwargs) -> DqnAgent:
    cfg = AgentConfig(**cfg_kwargs)
    return DqnAgent(n_users=sim_users, config=cfg, seed=42)


def test_fixed_policy_episode_logs_only_that_action():
    sim = Simulation(SimConfig(seed=1))
    log = run_episode(sim, None, SchedulerKind.MT, np.random.default_rng(0))
    assert log.actions == [SchedulerKind.MT] * 50
    assert log.action_counts() == [50, 0, 0, 0]
    assert len(log.rewards) == 50


def test_episode_without_jobs_hits_packet_rate_ceiling():
    sim = Simulation(SimConfig(seed=2, job_probability=0.0))
    log = run_episode(sim, None, SchedulerKind.DS, np.random.default_rng(0))
    for step in log.rewards:
        assert step.timeout == 0.0
        assert step.packet_rate == 10.0


def test_training_episode_fills_store_and_learns():
    sim = Simulation(SimConfig(seed=3))
    agent = _agent(batch_size=8, episodes=100)
    log = run_episode(sim, agent, "train", np.random.default_rng(7))
    assert len(agent.store) == 50
    assert agent.online.adam_steps > 0
    assert agent.episode_index == 1
    assert log.epsilon == pytest.approx(0.99)
    # terminal flag set exactly once, on the final experience
    terminals = [item.terminal for item in agent.store._items[:50]]
    assert terminals.count(True) == 1 and terminals[-1]


def test_greedy_episode_is_reproducible_and_greedy():
    sim1 = Simulation(SimConfig(seed=4))
    sim2 = Simulation(SimConfig(seed=4))
    agent = _agent()
    log1 = run_episode(sim1, agent, "greedy", np.random.default_rng(5))
    log2 = run_episode(sim2, agent, "greedy", np.random.default_rng(5))
    assert log1.actions == log2.actions
    assert [r.total for r in log1.rewards] == [r.total for r in log2.rewards]


def test_value_head_shift_does_not_change_greedy_actions():
    sim1 = Simulation(SimConfig(seed=9))
    sim2 = Simulation(SimConfig(seed=9))
    agent = _agent()
    log1 = run_episode(sim1, agent, "greedy", np.random.default_rng(5))
    agent.online.biases[len(agent.online.hidden) + 1][...] += 50.0
    log2 = run_episode(sim2, agent, "greedy", np.random.default_rng(5))
    assert log1.actions == log2.actions


def test_terminal_td_error_independent_of_next_state():
    net = constant_net(3.0, n_inputs=4)
    e1 = Experience(np.ones(4, np.float32), 0, 2.0, np.zeros(4, np.float32), terminal=True)
    e2 = Experience(np.ones(4, np.float32), 0, 2.0, np.full(4, 9.0, np.float32), terminal=True)
    t1 = build_target(e1, net, 0.9) - forward(net, e1.state)[0]
    t2 = build_target(e2, net, 0.9) - forward(net, e2.state)[0]
    assert t1 == t2


def test_two_training_runs_identical_with_same_seeds():
    def run():
        sim = Simulation(SimConfig(seed=8))
        agent = DqnAgent(n_users=10, config=AgentConfig(batch_size=8, episodes=50), seed=99)
        logs = []
        for episode in range(5):
            log = run_episode(sim, agent, "train", np.random.default_rng(episode))
            logs.append((log.actions, [r.total for r in log.rewards]))
        return logs, agent.online.theta.copy()

    logs1, theta1 = run()
    logs2, theta2 = run()
    assert logs1 == logs2
    assert np.array_equal(theta1, theta2)
