"""Fast built-in invariant checks, runnable from the CLI.

Each check returns (name, passed, detail).  The whole suite is meant to
finish within a minute; the heavier statistical validation lives in the
test suite.  `inject_gradient_bug` is a test hook that perturbs one analytic
gradient so the gradient check must fail.
"""

from __future__ import annotations

import math

import numpy as np

from . import qnet
from .agent import AgentConfig, epsilon_at
from .replay import Experience, PriorityStore
from .schedulers import (
    SchedulerKind,
    schedule_ds,
    schedule_ev_priority,
    schedule_mmf,
    schedule_mt,
)
from .sim import PROFILES, Allocation, Job, UserState, path_loss, validate_allocation


def _check_equations() -> tuple[bool, str]:
    losses = {0.5: 1.0, 1.0: 1.0, 2.0: 0.5, 4.0: 0.25}
    for d, expected in losses.items():
        if path_loss(d) != expected:
            return False, f"path_loss({d}) = {path_loss(d)}, expected {expected}"
    snr = 10.0 ** (13.0 / 10.0)
    got = math.log1p(1.0 * snr)
    want = math.log(1.0 + 10.0**1.3)
    if abs(got - want) > 1e-9:
        return False, f"capacity at 13 dB: {got} vs {want}"
    return True, "path loss and capacity closed forms match"


def _check_gradients(inject_bug: bool) -> tuple[bool, str]:
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(3):
        params = qnet.QNetworkParams(
            n_inputs=6, n_actions=4, hidden=(8, 8), branch=6,
            dtype=np.float64, seed=int(rng.integers(2**31)),
        )
        x = rng.normal(size=6)
        action = int(rng.integers(4))
        target = float(rng.normal())
        grad = qnet.gradients(params, x, action, target)
        if inject_bug:
            grad = grad + 0.5
        h = 1e-5
        for idx in range(0, params.size, max(1, params.size // 24)):
            keep = params.theta[idx]
            params.theta[idx] = keep + h
            up = (target - qnet.forward(params, x)[action]) ** 2
            params.theta[idx] = keep - h
            dn = (target - qnet.forward(params, x)[action]) ** 2
            params.theta[idx] = keep
            fd = (up - dn) / (2 * h)
            denom = max(abs(fd), abs(grad[idx]), 1e-6)
            worst = max(worst, abs(fd - grad[idx]) / denom)
    if worst >= 1e-4:
        return False, f"max relative gradient error {worst:.2e}"
    return True, f"max relative gradient error {worst:.2e}"


def _check_replay() -> tuple[bool, str]:
    store = PriorityStore(4)
    dummy = Experience(np.zeros(2, dtype=np.float32), 0, 0.0, np.zeros(2, dtype=np.float32))
    store.push(dummy)
    store.push(dummy)
    store.update_priorities([0, 1], [1.0 - 1e-3, 3.0 - 1e-3])
    rng = np.random.default_rng(11)
    n = 20_000
    hits = sum(1 for slot, _ in store.sample(n, rng) if slot == 1)
    sigma = math.sqrt(n * 0.75 * 0.25)
    if abs(hits - 0.75 * n) > 4 * sigma:
        return False, f"priority-(1,3) frequency {hits / n:.4f} far from 0.75"

    store = PriorityStore(64)
    for i in range(200):
        store.push(dummy)
        store.update_priorities([i % len(store)], [rng.random() * 5])
    direct = store.priorities().sum()
    if abs(direct - store.total_priority) > 1e-9:
        return False, f"sum tree drift {abs(direct - store.total_priority):.2e}"
    return True, "proportional sampling and sum structure consistent"


def _random_instance(rng: np.random.Generator):
    num_users = int(rng.integers(2, 8))
    names = list(PROFILES)
    users = []
    for uid in range(num_users):
        profile = PROFILES[names[int(rng.integers(len(names)))]]
        user = UserState(
            user_id=uid, profile=profile, position=(0, 0), direction="N", heading="N",
            gain=float(rng.random() * 2), is_ev=(profile.name == "emergency_vehicle"),
        )
        user.lifetime_requested = int(rng.integers(0, 100))
        user.lifetime_scheduled = int(rng.integers(0, user.lifetime_requested + 1))
        user.lifetime_timeouts = int(rng.integers(0, 20))
        users.append(user)
    queue = []
    for job_id in range(int(rng.integers(0, 12))):
        size = int(rng.integers(1, 12))
        queue.append(
            Job(job_id=job_id, owner=int(rng.integers(num_users)), remaining_size=size,
                original_size=size, time_to_timeout=int(rng.integers(1, 8)))
        )
    return users, queue


def _check_schedulers() -> tuple[bool, str]:
    rng = np.random.default_rng(23)
    for trial in range(300):
        users, queue = _random_instance(rng)
        n = int(rng.integers(1, 24))
        allocations = {
            SchedulerKind.MT: schedule_mt(queue, users, n),
            SchedulerKind.MMF: schedule_mmf(queue, users, n),
            SchedulerKind.DS: schedule_ds(queue, users, n),
            SchedulerKind.EV_PRIORITY: schedule_ev_priority(queue, users, n, rng),
        }
        demand = sum(job.remaining_size for job in queue)
        for kind, alloc in allocations.items():
            try:
                validate_allocation(alloc, queue, n)
            except Exception as exc:
                return False, f"trial {trial}: {kind.name} invalid allocation: {exc}"
            if demand <= n and alloc.total_blocks() != demand:
                return False, f"trial {trial}: {kind.name} did not serve a feasible load"
    return True, "allocation invariants and full-service equivalence hold"


def _check_dueling() -> tuple[bool, str]:
    params = qnet.QNetworkParams(n_inputs=5, hidden=(8, 8), branch=6, dtype=np.float64, seed=3)
    rng = np.random.default_rng(5)
    for _ in range(20):
        q, value, _ = qnet.forward_components(params, rng.normal(size=5))
        if abs(float(np.mean(q)) - value) > 1e-9:
            return False, "mean_k q_k deviates from the value-head output"
    return True, "dueling aggregation centers advantages"


def _check_epsilon() -> tuple[bool, str]:
    cfg = AgentConfig()
    anchors = (
        (0, 0.99),
        (int(0.8 * cfg.episodes), 0.0),
        (cfg.episodes, 0.0),
    )
    for episode, expected in anchors:
        got = epsilon_at(episode, cfg)
        if abs(got - expected) > 1e-12:
            return False, f"epsilon({episode}) = {got}, expected {expected}"
    return True, "exploration schedule hits its anchors"


def run_selftest(inject_gradient_bug: bool = False) -> list[tuple[str, bool, str]]:
    results = []
    for name, fn in (
        ("equations", _check_equations),
        ("gradients", lambda: _check_gradients(inject_gradient_bug)),
        ("replay-sampling", _check_replay),
        ("scheduler-invariants", _check_schedulers),
        ("dueling-identity", _check_dueling),
        ("epsilon-schedule", _check_epsilon),
    ):
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((name, ok, detail))
    return results
