"""The epsilon-greedy selection agent and its training loop.

The agent does not allocate blocks itself; per step it picks one of the four
model-based schedulers, observes the resulting weighted reward, and learns
per-state action values from replayed experience.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qnet
from .replay import Experience, PriorityStore
from .rewards import RewardBreakdown, RewardWeights, reward_breakdown
from .schedulers import DsWeights, SchedulerKind, schedule
from .sim import Job, Simulation, UserState, packet_rate

N_ACTIONS = len(SchedulerKind)
FEATURES_PER_USER = 5


@dataclass
class AgentConfig:
    gamma: float = 0.9
    epsilon_start: float = 0.99
    epsilon_end: float = 0.0
    epsilon_decay_fraction: float = 0.8  # fraction of episodes until epsilon_end
    batch_size: int = 64
    learning_rate: float = 1e-4
    target_sync_period: int = 100  # gradient steps between hard target updates
    episodes: int = 10_000
    steps_per_episode: int = 50
    replay_capacity: int = 100_000

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not 0.0 < self.epsilon_decay_fraction <= 1.0:
            raise ValueError("epsilon_decay_fraction must lie in (0, 1]")


def preprocess(queue: list[Job], users: list[UserState]) -> np.ndarray:
    """System state vector: 5 features per user, concatenated by user id.

    Per user: total queued blocks, channel gain, mean and minimum remaining
    time over queued jobs (0 with an empty queue), and the past packet rate.
    """
    state = np.zeros(FEATURES_PER_USER * len(users), dtype=np.float32)
    for user in users:
        jobs = [job for job in queue if job.owner == user.user_id]
        base = FEATURES_PER_USER * user.user_id
        if jobs:
            state[base] = sum(job.remaining_size for job in jobs)
            times = [job.time_to_timeout for job in jobs]
            state[base + 2] = sum(times) / len(times)
            state[base + 3] = min(times)
        state[base + 1] = user.gain
        state[base + 4] = packet_rate(user)
    return state


def select_action(qvalues: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Uniform random action with probability epsilon, else argmax (ties low)."""
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(len(qvalues)))
    return int(np.argmax(qvalues))


def epsilon_at(episode: int, config: AgentConfig) -> float:
    """Linear decay from epsilon_start to epsilon_end, then clamped."""
    horizon = config.epsilon_decay_fraction * config.episodes
    if horizon <= 0:
        return config.epsilon_end
    frac = min(1.0, episode / horizon)
    return config.epsilon_start + (config.epsilon_end - config.epsilon_start) * frac


def build_target(
    experience: Experience, target_params: qnet.QNetworkParams, gamma: float
) -> float:
    """Bootstrap target r + gamma * max_k q_target(s', a_k); bare r on terminal."""
    if experience.terminal:
        return experience.reward
    next_q = qnet.forward(target_params, experience.next_state)
    return experience.reward + gamma * float(next_q.max())


class DqnAgent:
    """Online/target networks, replay store, and exploration bookkeeping."""

    def __init__(
        self,
        n_users: int,
        config: AgentConfig | None = None,
        seed: int | None = None,
        use_is_weights: bool = False,
        dtype=np.float32,
    ):
        self.config = config if config is not None else AgentConfig()
        seq = np.random.SeedSequence(seed)
        net_seed, rng_seed = seq.spawn(2)
        self.online = qnet.QNetworkParams(
            n_inputs=FEATURES_PER_USER * n_users,
            n_actions=N_ACTIONS,
            dtype=dtype,
            seed=int(net_seed.generate_state(1)[0]),
        )
        self.target = qnet.sync_target(self.online)
        self.store = PriorityStore(self.config.replay_capacity)
        self.rng = np.random.default_rng(rng_seed)
        self.episode_index = 0
        self.use_is_weights = use_is_weights

    def epsilon(self) -> float:
        return epsilon_at(self.episode_index, self.config)

    def act(self, state: np.ndarray, epsilon: float) -> int:
        return select_action(qnet.forward(self.online, state), epsilon, self.rng)


def train_step(
    online: qnet.QNetworkParams,
    target: qnet.QNetworkParams,
    store: PriorityStore,
    rng: np.random.Generator,
    config: AgentConfig,
    use_is_weights: bool = False,
) -> qnet.QNetworkParams:
    """One minibatch update; returns the (possibly re-synced) target network.

    Skips silently until the store holds a full batch.  Samples B experiences
    proportional to priority, regresses q(s, a) onto the bootstrap targets
    with one Adam step on the batch-mean squared TD error, refreshes the
    sampled priorities with the new-target residual magnitudes, and hard-syncs
    the target network every `target_sync_period` gradient steps.
    """
    B = config.batch_size
    if len(store) < B:
        return target
    picks = store.sample(B, rng)
    indices = np.array([slot for slot, _ in picks])
    states = np.stack([exp.state for _, exp in picks])
    actions = np.array([exp.action for _, exp in picks])
    rewards = np.array([exp.reward for _, exp in picks])
    next_states = np.stack([exp.next_state for _, exp in picks])
    terminal = np.array([exp.terminal for _, exp in picks])

    next_best = qnet.forward_batch(target, next_states).max(axis=1)
    targets = rewards + config.gamma * np.where(terminal, 0.0, next_best)

    sample_weights = None
    if use_is_weights:
        probs = store.sample_probabilities()[indices]
        weights = 1.0 / (len(store) * probs)
        sample_weights = weights / weights.max()

    grad, td_errors = qnet.batch_gradients(
        online, states, actions, targets, sample_weights, reuse_buffer=True
    )
    qnet.adam_step(online, grad, config.learning_rate)
    store.update_priorities(indices, td_errors)
    if online.adam_steps % config.target_sync_period == 0:
        return qnet.sync_target(online)
    return target


@dataclass
class EpisodeLog:
    epsilon: float
    actions: list[int] = field(default_factory=list)
    rewards: list[RewardBreakdown] = field(default_factory=list)

    def sums(self) -> tuple[float, float, float, float, float]:
        return (
            sum(r.total for r in self.rewards),
            sum(r.capacity for r in self.rewards),
            sum(r.packet_rate for r in self.rewards),
            sum(r.timeout for r in self.rewards),
            sum(r.timeout_ev for r in self.rewards),
        )

    def action_counts(self) -> list[int]:
        return [self.actions.count(k) for k in range(N_ACTIONS)]


def run_episode(
    sim: Simulation,
    agent: DqnAgent | None,
    mode: str | SchedulerKind,
    rng: np.random.Generator,
    reward_weights: RewardWeights = RewardWeights(),
    ds_weights: DsWeights = DsWeights(),
    capacity_scheduled_only: bool = True,
    mmf_strict_cap: bool = True,
) -> EpisodeLog:
    """Run one fixed-length episode and log per-step rewards and selections.

    mode: "train" (epsilon-greedy, learn every step), "greedy" (epsilon = 0,
    no learning), or a SchedulerKind to pin that algorithm for every step.
    `rng` drives the EV-priority scheduler's random block distribution;
    exploration draws come from the agent's own stream.
    """
    fixed = mode if isinstance(mode, SchedulerKind) else None
    training = mode == "train"
    if fixed is None and agent is None:
        raise ValueError("agent required unless a fixed scheduler is pinned")
    if training:
        eps = agent.epsilon()
    else:
        eps = 0.0

    sim.reset()
    log = EpisodeLog(epsilon=eps)
    snr = sim.config.tx_snr_linear
    pending: tuple[np.ndarray, int, float] | None = None

    for _ in range(sim.config.steps_per_episode):
        sim.advance()
        state = preprocess(sim.queue, sim.users)
        if training and pending is not None:
            s, a, r = pending
            agent.store.push(Experience(s, a, r, next_state=state, terminal=False))
            agent.target = train_step(
                agent.online, agent.target, agent.store, agent.rng, agent.config,
                agent.use_is_weights,
            )
        if fixed is not None:
            action = int(fixed)
        else:
            action = agent.act(state, eps)
        allocation = schedule(
            SchedulerKind(action), sim.queue, sim.users, sim.config.num_resources,
            rng, ds_weights=ds_weights, mmf_strict_cap=mmf_strict_cap,
        )
        outcome = sim.apply(allocation)
        breakdown = reward_breakdown(
            outcome, sim.users, reward_weights, snr, scheduled_only=capacity_scheduled_only
        )
        log.actions.append(action)
        log.rewards.append(breakdown)
        pending = (state, action, breakdown.total)

    if training and pending is not None:
        s, a, r = pending
        agent.store.push(
            Experience(s, a, r, next_state=np.zeros_like(s), terminal=True)
        )
        agent.target = train_step(
            agent.online, agent.target, agent.store, agent.rng, agent.config,
            agent.use_is_weights,
        )
        agent.episode_index += 1
    return log
