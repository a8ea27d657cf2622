"""Campaign runners: training, evaluation sweeps, CSV/JSON emission, selftest.

Every run derives its random streams from (base seed, stream tag, indices)
through numpy's SeedSequence, so results are reproducible byte-for-byte and
evaluation episodes can be distributed over workers without changing them.
All policies replay the same per-episode arrival and channel realizations,
which makes the per-episode metric sums directly comparable.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import qnet
from .agent import AgentConfig, DqnAgent, EpisodeLog, run_episode
from .config import ExperimentConfig
from .replay import PriorityStore
from .schedulers import SchedulerKind
from .sim import Simulation

log = logging.getLogger("adaptsched")

# Stream tags for seed derivation.
_ENV_TRAIN, _AGENT, _POLICY_TRAIN, _ENV_EVAL, _POLICY_EVAL = 0, 1, 2, 10, 11

TRAIN_CSV_HEADER = [
    "episode", "epsilon", "sum_r", "sum_rC", "sum_rP", "sum_rL", "sum_rL_ev",
    "n_MT", "n_MMF", "n_DS", "n_EVP",
]
EVAL_CSV_HEADER = [
    "policy", "episode", "seed", "sum_r", "sum_rC", "sum_rP", "sum_rL", "sum_rL_ev",
    "n_MT", "n_MMF", "n_DS", "n_EVP",
]

FIXED_POLICIES = {
    "mt": SchedulerKind.MT,
    "mmf": SchedulerKind.MMF,
    "ds": SchedulerKind.DS,
    "evp": SchedulerKind.EV_PRIORITY,
}


def _rng(*key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(key))


def _row_values(log_: EpisodeLog) -> list:
    sums = [float(v) for v in log_.sums()]
    return sums + log_.action_counts()


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


@dataclass
class TrainResult:
    checkpoint_path: str
    csv_path: str
    agent: DqnAgent


def train_campaign(
    config: ExperimentConfig,
    progress=None,
    checkpoint_every: int | None = None,
) -> TrainResult:
    """Run the full training loop, writing per-episode CSV and checkpoints."""
    seed = config.sim.seed
    episodes = config.agent.episodes
    os.makedirs(config.out_dir, exist_ok=True)
    csv_path = os.path.join(config.out_dir, "training.csv")
    ckpt_path = config.checkpoint_path()
    if checkpoint_every is None:
        checkpoint_every = max(1, episodes // 10)

    sim = Simulation(config.sim, rng=_rng(seed, _ENV_TRAIN))
    agent = DqnAgent(
        n_users=config.sim.num_users,
        config=config.agent,
        seed=int(_rng(seed, _AGENT).integers(2**63)),
        use_is_weights=config.replay_is_weights,
    )

    rows = []
    recent: list[float] = []
    for episode in range(episodes):
        log_ = run_episode(
            sim, agent, "train", _rng(seed, _POLICY_TRAIN, episode),
            reward_weights=config.reward, ds_weights=config.ds,
            capacity_scheduled_only=config.capacity_scheduled_only,
            mmf_strict_cap=config.mmf_strict_cap,
        )
        rows.append([episode, float(log_.epsilon)] + _row_values(log_))
        recent.append(log_.sums()[0])
        if progress is not None and (episode + 1) % 100 == 0:
            progress(
                f"episode {episode + 1}/{episodes}  eps={log_.epsilon:.3f}  "
                f"avg_r(last {len(recent)})={sum(recent) / len(recent):.2f}"
            )
            recent.clear()
        if (episode + 1) % checkpoint_every == 0:
            qnet.save_checkpoint(agent.online, ckpt_path)

    _write_csv(csv_path, TRAIN_CSV_HEADER, rows)
    qnet.save_checkpoint(agent.online, ckpt_path)
    return TrainResult(checkpoint_path=ckpt_path, csv_path=csv_path, agent=agent)


def _eval_agent(params: qnet.QNetworkParams, config: ExperimentConfig) -> DqnAgent:
    """Greedy-only wrapper around a frozen network."""
    agent = DqnAgent(n_users=config.sim.num_users, config=config.agent, seed=0)
    agent.online = params
    agent.store = PriorityStore(1)  # unused in greedy mode
    return agent


def _eval_one(
    config: ExperimentConfig,
    policy: str,
    episode: int,
    params: qnet.QNetworkParams | None,
) -> list:
    seed = config.sim.seed
    sim = Simulation(config.sim, rng=_rng(seed, _ENV_EVAL, episode))
    policy_rng = _rng(seed, _POLICY_EVAL, list(FIXED_POLICIES).index(policy) + 1 if policy != "dqn" else 0, episode)
    if policy == "dqn":
        agent = _eval_agent(params, config)
        mode: str | SchedulerKind = "greedy"
    else:
        agent = None
        mode = FIXED_POLICIES[policy]
    log_ = run_episode(
        sim, agent, mode, policy_rng,
        reward_weights=config.reward, ds_weights=config.ds,
        capacity_scheduled_only=config.capacity_scheduled_only,
        mmf_strict_cap=config.mmf_strict_cap,
    )
    return [policy, episode, seed] + _row_values(log_)


def eval_campaign(
    config: ExperimentConfig,
    params: qnet.QNetworkParams | None = None,
    episodes: int | None = None,
    policies: tuple[str, ...] | None = None,
    workers: int = 1,
) -> dict:
    """Evaluate each requested policy over independently seeded episodes.

    Writes eval.csv (one row per policy and episode) plus eval_summary.json
    carrying per-policy means, selection rates, and the normalization
    constant used for reward plots (the highest achieved reward sum).
    """
    episodes = config.eval_episodes if episodes is None else episodes
    policies = config.eval_policies if policies is None else policies
    if "dqn" in policies and params is None:
        raise ValueError("evaluating the dqn policy requires a checkpoint")

    tasks = [(policy, episode) for policy in policies for episode in range(episodes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda t: _eval_one(config, t[0], t[1], params), tasks))
    else:
        rows = [_eval_one(config, policy, episode, params) for policy, episode in tasks]

    os.makedirs(config.out_dir, exist_ok=True)
    csv_path = os.path.join(config.out_dir, "eval.csv")
    _write_csv(csv_path, EVAL_CSV_HEADER, rows)

    summary = {"episodes": episodes, "seed": config.sim.seed, "policies": {}}
    for policy in policies:
        block = [row for row in rows if row[0] == policy]
        if not block:
            summary["policies"][policy] = None
            continue
        counts = np.array([row[8:12] for row in block], dtype=float).sum(axis=0)
        total_counts = counts.sum()
        summary["policies"][policy] = {
            "mean_sum_r": float(np.mean([row[3] for row in block])),
            "mean_sum_rC": float(np.mean([row[4] for row in block])),
            "mean_sum_rP": float(np.mean([row[5] for row in block])),
            "mean_sum_rL": float(np.mean([row[6] for row in block])),
            "mean_sum_rL_ev": float(np.mean([row[7] for row in block])),
            "selection_rates": [float(c / total_counts) for c in counts],
        }
    summary["max_reward_sum"] = float(max(row[3] for row in rows)) if rows else None
    summary_path = os.path.join(config.out_dir, "eval_summary.json")
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {"csv_path": csv_path, "summary_path": summary_path, "summary": summary, "rows": rows}
