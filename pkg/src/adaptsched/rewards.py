"""Per-step performance metrics and their weighted combination.

All functions are pure; they read a StepOutcome plus user states and never
mutate either.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .sim import StepOutcome, UserState, packet_rate


@dataclass(frozen=True)
class RewardWeights:
    capacity: float = 0.25
    packet_rate: float = 0.25
    timeout: float = 1.0
    timeout_ev: float = 1.0

    def __post_init__(self):
        for name, value in vars(self).items():
            if not math.isfinite(value) or value < 0.0:
                raise ValueError(f"reward weight {name} must be finite and >= 0")


@dataclass(frozen=True)
class RewardBreakdown:
    capacity: float  # nats
    packet_rate: float
    timeout: float  # blocks
    timeout_ev: float  # blocks
    total: float


def capacity_metric(
    outcome: StepOutcome, tx_snr_linear: float, scheduled_only: bool = True
) -> float:
    """Sum of log(1 + gain * SNR) in nats, by default over served users only."""
    if scheduled_only:
        users = sorted(outcome.scheduled_users)
    else:
        users = range(len(outcome.gains_snapshot))
    return sum(math.log1p(outcome.gains_snapshot[u] * tx_snr_linear) for u in users)


def packet_rate_metric(users: list[UserState]) -> float:
    """Sum of the lifetime scheduled/requested ratios over all users."""
    return sum(packet_rate(u) for u in users)


def timeout_metrics(outcome: StepOutcome, users: list[UserState]) -> tuple[float, float]:
    """Blocks discarded this step, total and for emergency-vehicle owners."""
    total = 0.0
    ev = 0.0
    for owner, blocks in outcome.failed_jobs:
        total += blocks
        if users[owner].is_ev:
            ev += blocks
    return total, ev


def combine(
    capacity: float,
    packet_rate_sum: float,
    timeout: float,
    timeout_ev: float,
    weights: RewardWeights,
) -> float:
    return (
        weights.capacity * capacity
        + weights.packet_rate * packet_rate_sum
        - weights.timeout * timeout
        - weights.timeout_ev * timeout_ev
    )


def reward_breakdown(
    outcome: StepOutcome,
    users: list[UserState],
    weights: RewardWeights,
    tx_snr_linear: float,
    scheduled_only: bool = True,
) -> RewardBreakdown:
    r_c = capacity_metric(outcome, tx_snr_linear, scheduled_only)
    r_p = packet_rate_metric(users)
    r_l, r_l_ev = timeout_metrics(outcome, users)
    return RewardBreakdown(
        capacity=r_c,
        packet_rate=r_p,
        timeout=r_l,
        timeout_ev=r_l_ev,
        total=combine(r_c, r_p, r_l, r_l_ev, weights),
    )
