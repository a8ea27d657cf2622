"""World model: vehicles on a street grid, Rayleigh-faded downlink channels,
and a job queue with per-job deadlines.

One simulation step runs through a fixed phase order:
(1) mobility, (2) channel realization, (3) job generation, (4) state readout,
(5) scheduling decision, (6) allocation bookkeeping, (7) deadline expiry,
(8) metrics.  `Simulation.advance` covers phases 1-3, `Simulation.apply`
covers 6-7 and returns the raw quantities needed for phase 8.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Unit-mean Rayleigh power: E[amp^2] = 2 * scale^2 = 1.
RAYLEIGH_SCALE = 1.0 / math.sqrt(2.0)

CARDINALS = ("N", "E", "S", "W")
STOP = "STOP"

_DELTA = {"N": (0, 1), "E": (1, 0), "S": (0, -1), "W": (-1, 0)}
_LEFT = {"N": "W", "W": "S", "S": "E", "E": "N"}
_RIGHT = {v: k for k, v in _LEFT.items()}
_REVERSE = {"N": "S", "S": "N", "E": "W", "W": "E"}

# Direction re-selection probabilities per step: keep the previous choice
# with 0.98, never reverse, and split the rest over left turn / right turn /
# stop.
P_KEEP = 0.98


class SimError(Exception):
    """Invalid simulator input, e.g. an allocation that breaks its invariants."""


@dataclass(frozen=True)
class UserProfile:
    name: str
    initial_timeout: int  # steps until an unfinished job is discarded
    max_job_size: int  # resource blocks

    def __post_init__(self):
        if self.initial_timeout < 1:
            raise SimError(f"profile {self.name}: initial_timeout must be >= 1")
        if self.max_job_size < 1:
            raise SimError(f"profile {self.name}: max_job_size must be >= 1")


PROFILES = {
    "normal": UserProfile("normal", initial_timeout=20, max_job_size=30),
    "high_datarate": UserProfile("high_datarate", initial_timeout=20, max_job_size=40),
    "low_latency": UserProfile("low_latency", initial_timeout=2, max_job_size=8),
    "emergency_vehicle": UserProfile("emergency_vehicle", initial_timeout=1, max_job_size=16),
}

EV_PROFILE_NAME = "emergency_vehicle"


@dataclass
class UserState:
    user_id: int
    profile: UserProfile
    position: tuple[int, int]
    direction: str  # current motion, one of CARDINALS or STOP
    heading: str  # last cardinal motion; turn geometry while stopped
    gain: float = 0.0
    lifetime_scheduled: int = 0
    lifetime_requested: int = 0
    lifetime_timeouts: int = 0
    is_ev: bool = False


@dataclass
class Job:
    job_id: int
    owner: int
    remaining_size: int
    original_size: int
    time_to_timeout: int


@dataclass
class Allocation:
    """Blocks granted per job for one step; zero-grant entries are dropped."""

    assignments: dict[int, int] = field(default_factory=dict)

    def total_blocks(self) -> int:
        return sum(self.assignments.values())


@dataclass
class StepOutcome:
    scheduled_users: frozenset[int]
    failed_jobs: list[tuple[int, int]]  # (owner, discarded blocks)
    gains_snapshot: np.ndarray
    packet_rates_snapshot: np.ndarray


@dataclass
class SimConfig:
    num_users: int = 10
    num_resources: int = 16
    job_probability: float = 0.2
    profile_names: tuple[str, ...] = (
        "normal",
        "normal",
        "normal",
        "normal",
        "normal",
        "high_datarate",
        "high_datarate",
        "low_latency",
        "low_latency",
        "emergency_vehicle",
    )
    lattice_half_extent: int = 4  # 9x9 nodes, base station at the center
    steps_per_episode: int = 50
    tx_snr_db: float = 13.0
    seed: int = 0

    def __post_init__(self):
        if self.num_resources < 1:
            raise SimError("num_resources must be >= 1")
        if self.steps_per_episode < 1:
            raise SimError("steps_per_episode must be >= 1")
        if not 0.0 <= self.job_probability <= 1.0:
            raise SimError("job_probability must lie in [0, 1]")
        if len(self.profile_names) != self.num_users:
            raise SimError(
                f"profile_names has {len(self.profile_names)} entries, expected "
                f"num_users = {self.num_users}"
            )
        for name in self.profile_names:
            if name not in PROFILES:
                raise SimError(f"unknown profile name {name!r}")

    @property
    def tx_snr_linear(self) -> float:
        return 10.0 ** (self.tx_snr_db / 10.0)


def path_loss(distance: float) -> float:
    """Distance-proportional attenuation min(1, 1/d); clamped to 1 near the origin."""
    if distance <= 1.0:
        return 1.0
    return 1.0 / distance


def sample_direction(direction: str, heading: str, rng: np.random.Generator) -> str:
    """Re-sample one user's motion for the next step.

    Keeps the previous choice with probability 0.98 and never selects the
    reverse of the current heading; the remaining mass is split evenly over
    left turn, right turn, and stop.  Turns are relative to `heading`, which
    stays meaningful while the user is stopped.
    """
    u = rng.random()
    if u < P_KEEP:
        return direction
    residual = int((u - P_KEEP) / (1.0 - P_KEEP) * 3.0)
    if residual == 0:
        return _LEFT[heading]
    if residual == 1:
        return _RIGHT[heading]
    return STOP


def _on_lattice(pos: tuple[int, int], half_extent: int) -> bool:
    return abs(pos[0]) <= half_extent and abs(pos[1]) <= half_extent


def _moved(pos: tuple[int, int], direction: str) -> tuple[int, int]:
    dx, dy = _DELTA[direction]
    return (pos[0] + dx, pos[1] + dy)


def advance_mobility(users: list[UserState], half_extent: int, rng: np.random.Generator) -> None:
    """Move every user one lattice node (or keep it stopped) in place.

    A sampled move that would leave the lattice is replaced by a uniform
    choice among the feasible cardinal moves from the current node.
    """
    for user in users:
        choice = sample_direction(user.direction, user.heading, rng)
        if choice == STOP:
            user.direction = STOP
            continue
        if not _on_lattice(_moved(user.position, choice), half_extent):
            feasible = [d for d in CARDINALS if _on_lattice(_moved(user.position, d), half_extent)]
            choice = feasible[int(rng.integers(len(feasible)))]
        user.position = _moved(user.position, choice)
        user.direction = choice
        user.heading = choice


def realize_channel(
    user: UserState, rng: np.random.Generator, rayleigh_scale: float = RAYLEIGH_SCALE
) -> float:
    """Draw a fresh power gain |h|^2 * min(1, 1/d) and store it on the user."""
    amplitude = rng.rayleigh(rayleigh_scale)
    distance = math.hypot(user.position[0], user.position[1])
    user.gain = amplitude**2 * path_loss(distance)
    return user.gain


def generate_jobs(
    users: list[UserState],
    job_probability: float,
    rng: np.random.Generator,
    next_job_id: int,
) -> list[Job]:
    """Create at most one new job per user and book it as requested load."""
    jobs = []
    for user in users:
        if rng.random() >= job_probability:
            continue
        size = int(rng.integers(1, user.profile.max_job_size + 1))
        jobs.append(
            Job(
                job_id=next_job_id,
                owner=user.user_id,
                remaining_size=size,
                original_size=size,
                time_to_timeout=user.profile.initial_timeout,
            )
        )
        user.lifetime_requested += size
        next_job_id += 1
    return jobs


def validate_allocation(allocation: Allocation, queue: list[Job], num_resources: int) -> None:
    """Raise SimError if the allocation breaks any invariant (a scheduler bug)."""
    by_id = {job.job_id: job for job in queue}
    total = 0
    for job_id, blocks in allocation.assignments.items():
        job = by_id.get(job_id)
        if job is None:
            raise SimError(f"allocation references unknown job {job_id}")
        if blocks < 0:
            raise SimError(f"allocation grants negative blocks to job {job_id}")
        if blocks > job.remaining_size:
            raise SimError(
                f"allocation grants {blocks} blocks to job {job_id} "
                f"with only {job.remaining_size} remaining"
            )
        total += blocks
    if total > num_resources:
        raise SimError(f"allocation grants {total} blocks, only {num_resources} available")


def apply_allocation(
    queue: list[Job],
    allocation: Allocation,
    users: list[UserState],
    num_resources: int,
) -> tuple[list[Job], frozenset[int]]:
    """Consume an allocation: shrink jobs, credit users, drop completed jobs.

    Returns the remaining queue and the set of users that received blocks.
    """
    validate_allocation(allocation, queue, num_resources)
    scheduled: set[int] = set()
    remaining: list[Job] = []
    for job in queue:
        blocks = allocation.assignments.get(job.job_id, 0)
        if blocks > 0:
            job.remaining_size -= blocks
            users[job.owner].lifetime_scheduled += blocks
            scheduled.add(job.owner)
        if job.remaining_size > 0:
            remaining.append(job)
    return remaining, frozenset(scheduled)


def expire_jobs(queue: list[Job], users: list[UserState]) -> tuple[list[Job], list[tuple[int, int]]]:
    """Tick every unfinished job's deadline; discard the ones that hit zero.

    Discarded jobs contribute their remaining (unserved) blocks to the owner's
    lifetime timeout count and to this step's failure list.
    """
    remaining: list[Job] = []
    failed: list[tuple[int, int]] = []
    for job in queue:
        job.time_to_timeout -= 1
        if job.time_to_timeout <= 0:
            failed.append((job.owner, job.remaining_size))
            users[job.owner].lifetime_timeouts += job.remaining_size
        else:
            remaining.append(job)
    return remaining, failed


def packet_rate(user: UserState) -> float:
    """Lifetime ratio of blocks scheduled to blocks requested; 1 while idle."""
    if user.lifetime_requested == 0:
        return 1.0
    return user.lifetime_scheduled / user.lifetime_requested


class Simulation:
    """Owns users, queue, and RNG stream; episodes share one instance."""

    def __init__(self, config: SimConfig, rng: np.random.Generator | None = None):
        self.config = config
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)
        self.users: list[UserState] = []
        self.queue: list[Job] = []
        self._next_job_id = 0
        self.reset()

    def reset(self) -> None:
        """Start a fresh episode: new positions, cleared queue and counters."""
        half = self.config.lattice_half_extent
        self.users = []
        for uid, name in enumerate(self.config.profile_names):
            profile = PROFILES[name]
            position = (
                int(self.rng.integers(-half, half + 1)),
                int(self.rng.integers(-half, half + 1)),
            )
            heading = CARDINALS[int(self.rng.integers(4))]
            self.users.append(
                UserState(
                    user_id=uid,
                    profile=profile,
                    position=position,
                    direction=heading,
                    heading=heading,
                    is_ev=(name == EV_PROFILE_NAME),
                )
            )
        self.queue = []
        self._next_job_id = 0

    def advance(self) -> None:
        """Phases 1-3: move users, redraw channels, generate new jobs."""
        advance_mobility(self.users, self.config.lattice_half_extent, self.rng)
        for user in self.users:
            realize_channel(user, self.rng)
        new_jobs = generate_jobs(self.users, self.config.job_probability, self.rng, self._next_job_id)
        self.queue.extend(new_jobs)
        self._next_job_id += len(new_jobs)

    def apply(self, allocation: Allocation) -> StepOutcome:
        """Phases 6-7: consume the allocation, expire deadlines, snapshot."""
        self.queue, scheduled = apply_allocation(
            self.queue, allocation, self.users, self.config.num_resources
        )
        self.queue, failed = expire_jobs(self.queue, self.users)
        gains = np.array([u.gain for u in self.users])
        rates = np.array([packet_rate(u) for u in self.users])
        return StepOutcome(
            scheduled_users=scheduled,
            failed_jobs=failed,
            gains_snapshot=gains,
            packet_rates_snapshot=rates,
        )

    def jobs_of(self, user_id: int) -> list[Job]:
        return [job for job in self.queue if job.owner == user_id]

    def total_demand(self) -> int:
        return sum(job.remaining_size for job in self.queue)
