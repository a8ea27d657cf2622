import os

# Single-threaded BLAS: the network's small matrices lose to thread overhead,
# and test workers parallelize at the process level instead.
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")

import numpy as np
import pytest

from adaptsched.sim import PROFILES, Job, UserState


def make_user(
    uid,
    gain=1.0,
    profile="normal",
    requested=0,
    scheduled=0,
    timeouts=0,
    position=(0, 0),
):
    user = UserState(
        user_id=uid,
        profile=PROFILES[profile],
        position=position,
        direction="N",
        heading="N",
        gain=gain,
        is_ev=(profile == "emergency_vehicle"),
    )
    user.lifetime_requested = requested
    user.lifetime_scheduled = scheduled
    user.lifetime_timeouts = timeouts
    return user


def make_job(job_id, owner, remaining, timeout, original=None):
    return Job(
        job_id=job_id,
        owner=owner,
        remaining_size=remaining,
        original_size=original if original is not None else remaining,
        time_to_timeout=timeout,
    )


def random_instance(rng: np.random.Generator, max_users=8, max_jobs=14):
    """Random users plus queue for scheduler property tests."""
    names = list(PROFILES)
    num_users = int(rng.integers(1, max_users + 1))
    users = []
    for uid in range(num_users):
        profile = names[int(rng.integers(len(names)))]
        requested = int(rng.integers(0, 120))
        users.append(
            make_user(
                uid,
                gain=float(rng.random() * 3.0),
                profile=profile,
                requested=requested,
                scheduled=int(rng.integers(0, requested + 1)),
                timeouts=int(rng.integers(0, 25)),
            )
        )
    queue = []
    for job_id in range(int(rng.integers(0, max_jobs + 1))):
        size = int(rng.integers(1, 13))
        queue.append(
            make_job(
                job_id,
                owner=int(rng.integers(num_users)),
                remaining=size,
                timeout=int(rng.integers(1, 9)),
            )
        )
    return users, queue


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
