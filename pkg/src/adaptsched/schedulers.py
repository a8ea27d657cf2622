"""The four model-based scheduling algorithms.

Each maps (queue, user states, available blocks) to an Allocation and is a
pure function of its inputs; only the EV-priority scheduler draws randomness,
through an explicit generator.  Ties are broken by lower user id, then lower
job id, so replays are bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .sim import Allocation, Job, UserState


class SchedulerKind(IntEnum):
    """Action space of the selection agent; the index order is fixed."""

    MT = 0
    MMF = 1
    DS = 2
    EV_PRIORITY = 3


@dataclass(frozen=True)
class DsWeights:
    w1: float = 1.0  # channel-priority weight
    w2: float = 1.0  # timeout-urgency weight

    def __post_init__(self):
        if self.w1 < 0 or self.w2 < 0 or self.w1 + self.w2 <= 0:
            raise ValueError("DS weights must be non-negative with w1 + w2 > 0")


def _jobs_by_user(queue: list[Job]) -> dict[int, list[Job]]:
    """Group queued jobs per owner, most urgent first (deadline, then FIFO)."""
    grouped: dict[int, list[Job]] = {}
    for job in queue:
        grouped.setdefault(job.owner, []).append(job)
    for jobs in grouped.values():
        jobs.sort(key=lambda j: (j.time_to_timeout, j.job_id))
    return grouped


def _demand(jobs: list[Job]) -> int:
    return sum(job.remaining_size for job in jobs)


def _grant_user(jobs: list[Job], budget: int, alloc: dict[int, int]) -> int:
    """Serve a user's jobs in order until the budget runs out; returns blocks spent."""
    spent = 0
    for job in jobs:
        if budget <= 0:
            break
        open_blocks = job.remaining_size - alloc.get(job.job_id, 0)
        grant = min(open_blocks, budget)
        if grant > 0:
            alloc[job.job_id] = alloc.get(job.job_id, 0) + grant
            budget -= grant
            spent += grant
    return spent


def _serve_all(grouped: dict[int, list[Job]]) -> Allocation:
    alloc: dict[int, int] = {}
    for jobs in grouped.values():
        for job in jobs:
            alloc[job.job_id] = job.remaining_size
    return Allocation(alloc)


def schedule_mt(queue: list[Job], users: list[UserState], num_resources: int) -> Allocation:
    """Maximum Throughput: serve full requests by descending channel gain."""
    grouped = _jobs_by_user(queue)
    order = sorted(grouped, key=lambda uid: (-users[uid].gain, uid))
    alloc: dict[int, int] = {}
    left = num_resources
    for uid in order:
        if left <= 0:
            break
        left -= _grant_user(grouped[uid], left, alloc)
    return Allocation(alloc)


def schedule_mmf(
    queue: list[Job],
    users: list[UserState],
    num_resources: int,
    strict_cap: bool = True,
) -> Allocation:
    """Max-Min-Fair: equal-share cap, priority g / (queued blocks).

    When everything fits, everything is served.  Under contention every user
    gets at most floor(N / U_req) blocks; with `strict_cap` the blocks left
    over by small requests stay unallocated, otherwise they are redistributed
    in priority order.
    """
    grouped = _jobs_by_user(queue)
    if not grouped:
        return Allocation({})
    demands = {uid: _demand(jobs) for uid, jobs in grouped.items()}
    if sum(demands.values()) <= num_resources:
        return _serve_all(grouped)

    cap = num_resources // len(grouped)
    order = sorted(grouped, key=lambda uid: (-users[uid].gain / demands[uid], uid))
    alloc: dict[int, int] = {}
    left = num_resources
    for uid in order:
        spent = _grant_user(grouped[uid], min(cap, left), alloc)
        left -= spent
    if strict_cap:
        return Allocation(alloc)

    while left > 0:
        unmet = [uid for uid in order if demands[uid] > sum(alloc.get(j.job_id, 0) for j in grouped[uid])]
        if not unmet:
            break
        share = max(1, left // len(unmet))
        for uid in unmet:
            spent = _grant_user(grouped[uid], min(share, left), alloc)
            left -= spent
            if left <= 0:
                break
    return Allocation(alloc)


def _normalized(scores: dict[int, float]) -> dict[int, float]:
    """Scale scores to sum 1; degenerate all-zero scores become uniform."""
    total = sum(scores.values())
    if total <= 0.0:
        return {uid: 1.0 / len(scores) for uid in scores}
    return {uid: value / total for uid, value in scores.items()}


def ds_priorities(
    queue: list[Job], users: list[UserState], weights: DsWeights
) -> dict[int, float]:
    """Mixed channel/urgency priorities over requesting users, summing to 1.

    Channel priority is the normalized product of packet rate and gain;
    urgency is the normalized ratio of lifetime timeouts to the owner's
    closest deadline.  Users with no queued jobs are excluded (priority 0).
    """
    grouped = _jobs_by_user(queue)
    if not grouped:
        return {}
    channel = {}
    urgency = {}
    for uid, jobs in grouped.items():
        user = users[uid]
        rate = user.lifetime_scheduled / user.lifetime_requested if user.lifetime_requested else 1.0
        channel[uid] = rate * user.gain
        closest = min(job.time_to_timeout for job in jobs)
        urgency[uid] = user.lifetime_timeouts / closest
    channel = _normalized(channel)
    urgency = _normalized(urgency)
    scale = weights.w1 + weights.w2
    return {
        uid: (weights.w1 * channel[uid] + weights.w2 * urgency[uid]) / scale for uid in grouped
    }


def schedule_ds(
    queue: list[Job],
    users: list[UserState],
    num_resources: int,
    weights: DsWeights = DsWeights(),
) -> Allocation:
    """Delay Sensitive: priority-proportional shares with a last-chance skip.

    Each requesting user is allotted floor(priority * N) blocks, leftovers
    going one each to the highest priorities.  Jobs are served most-urgent
    first, but a job on its last step that cannot be finished with the user's
    unspent allotment is skipped, freeing those blocks for the next job or
    user in priority order.
    """
    grouped = _jobs_by_user(queue)
    if not grouped:
        return Allocation({})
    if sum(_demand(jobs) for jobs in grouped.values()) <= num_resources:
        return _serve_all(grouped)

    priorities = ds_priorities(queue, users, weights)
    total_p = sum(priorities.values())
    order = sorted(grouped, key=lambda uid: (-priorities[uid], uid))
    shares = {uid: int(priorities[uid] / total_p * num_resources) for uid in grouped}
    leftover = num_resources - sum(shares.values())
    for uid in order:
        if leftover <= 0:
            break
        shares[uid] += 1
        leftover -= 1

    alloc: dict[int, int] = {}
    carry = 0
    for uid in order:
        budget = shares[uid] + carry
        for job in grouped[uid]:
            if budget <= 0:
                break
            if job.time_to_timeout == 1 and job.remaining_size > budget:
                continue  # last chance missed; free the blocks downstream
            grant = min(job.remaining_size, budget)
            alloc[job.job_id] = grant
            budget -= grant
        carry = budget
    return Allocation(alloc)


def schedule_ev_priority(
    queue: list[Job],
    users: list[UserState],
    num_resources: int,
    rng: np.random.Generator,
) -> Allocation:
    """EV Priority: emergency vehicles first, the rest one block at a time."""
    grouped = _jobs_by_user(queue)
    alloc: dict[int, int] = {}
    left = num_resources
    for uid in sorted(grouped):
        if users[uid].is_ev and left > 0:
            left -= _grant_user(grouped[uid], left, alloc)

    def unmet(uid: int) -> int:
        return _demand(grouped[uid]) - sum(alloc.get(j.job_id, 0) for j in grouped[uid])

    candidates = [uid for uid in sorted(grouped) if unmet(uid) > 0]
    while left > 0 and candidates:
        uid = candidates[int(rng.integers(len(candidates)))]
        left -= _grant_user(grouped[uid], 1, alloc)
        if unmet(uid) == 0:
            candidates.remove(uid)
    return Allocation(alloc)


def schedule(
    kind: SchedulerKind,
    queue: list[Job],
    users: list[UserState],
    num_resources: int,
    rng: np.random.Generator,
    ds_weights: DsWeights = DsWeights(),
    mmf_strict_cap: bool = True,
) -> Allocation:
    if kind == SchedulerKind.MT:
        return schedule_mt(queue, users, num_resources)
    if kind == SchedulerKind.MMF:
        return schedule_mmf(queue, users, num_resources, strict_cap=mmf_strict_cap)
    if kind == SchedulerKind.DS:
        return schedule_ds(queue, users, num_resources, weights=ds_weights)
    if kind == SchedulerKind.EV_PRIORITY:
        return schedule_ev_priority(queue, users, num_resources, rng)
    raise ValueError(f"unknown scheduler kind {kind!r}")
