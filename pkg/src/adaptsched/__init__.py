"""Resource-block scheduling with learned algorithm selection.

A discrete-time simulator of downlink block allocation to vehicular users,
four model-based schedulers, and a dueling DQN that learns which scheduler
to run at each step to maximize a weighted mix of capacity, packet rate,
and (EV-weighted) timeout penalties.
"""

from .agent import (
    AgentConfig,
    DqnAgent,
    EpisodeLog,
    build_target,
    epsilon_at,
    preprocess,
    run_episode,
    select_action,
    train_step,
)
from .config import ExperimentConfig, emit_config, load_config, parse_config
from .qnet import (
    QNetworkParams,
    adam_step,
    deserialize,
    forward,
    forward_batch,
    gradients,
    load_checkpoint,
    save_checkpoint,
    serialize,
    sync_target,
)
from .replay import Experience, PriorityStore
from .rewards import RewardBreakdown, RewardWeights, combine, reward_breakdown
from .schedulers import (
    DsWeights,
    SchedulerKind,
    schedule,
    schedule_ds,
    schedule_ev_priority,
    schedule_mmf,
    schedule_mt,
)
from .sim import (
    PROFILES,
    Allocation,
    Job,
    SimConfig,
    Simulation,
    StepOutcome,
    UserProfile,
    UserState,
    packet_rate,
    path_loss,
)

__version__ = "0.1.0"
