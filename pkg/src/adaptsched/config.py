"""Experiment configuration: defaults, INI parsing, and emission.

The defaults reproduce the reference setup exactly (10 users with the
5/2/2/1 profile mix, 16 blocks, 20% job probability, 13 dB TX-SNR, reward
weights 0.25/0.25/1/1, 10000 episodes of 50 steps), so an empty config file
is a valid experiment description.  parse(emit(config)) == config.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields

from .agent import AgentConfig
from .rewards import RewardWeights
from .schedulers import DsWeights
from .sim import SimConfig, SimError

POLICY_NAMES = ("dqn", "mt", "mmf", "ds", "evp")


class ConfigError(Exception):
    """Bad or inconsistent experiment configuration; message names the field."""


@dataclass
class ExperimentConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    reward: RewardWeights = field(default_factory=RewardWeights)
    ds: DsWeights = field(default_factory=DsWeights)
    out_dir: str = "results"
    checkpoint: str = ""  # empty: <out_dir>/checkpoint.qnet
    eval_episodes: int = 10_000
    eval_policies: tuple[str, ...] = POLICY_NAMES
    capacity_scheduled_only: bool = True
    mmf_strict_cap: bool = True
    replay_is_weights: bool = False

    def __post_init__(self):
        for name in self.eval_policies:
            if name not in POLICY_NAMES:
                raise ConfigError(f"eval.policies: unknown policy {name!r}")
        # One source of truth for episode length.
        self.agent.steps_per_episode = self.sim.steps_per_episode

    def checkpoint_path(self) -> str:
        return self.checkpoint or f"{self.out_dir}/checkpoint.qnet"


_BOOLS = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _convert(raw: str, kind, where: str):
    try:
        if kind is bool:
            return _BOOLS[raw.strip().lower()]
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is tuple:
            return tuple(part.strip() for part in raw.split(",") if part.strip())
        return raw
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {kind.__name__}") from exc


# section -> key -> (target object name, attribute, type)
_SCHEMA = {
    "sim": {
        "num_users": ("sim", "num_users", int),
        "num_resources": ("sim", "num_resources", int),
        "job_probability": ("sim", "job_probability", float),
        "profiles": ("sim", "profile_names", tuple),
        "lattice_half_extent": ("sim", "lattice_half_extent", int),
        "steps_per_episode": ("sim", "steps_per_episode", int),
        "tx_snr_db": ("sim", "tx_snr_db", float),
        "seed": ("sim", "seed", int),
    },
    "agent": {
        "gamma": ("agent", "gamma", float),
        "epsilon_start": ("agent", "epsilon_start", float),
        "epsilon_end": ("agent", "epsilon_end", float),
        "epsilon_decay_fraction": ("agent", "epsilon_decay_fraction", float),
        "batch_size": ("agent", "batch_size", int),
        "learning_rate": ("agent", "learning_rate", float),
        "target_sync_period": ("agent", "target_sync_period", int),
        "episodes": ("agent", "episodes", int),
        "replay_capacity": ("agent", "replay_capacity", int),
    },
    "reward": {
        "w_capacity": ("reward", "capacity", float),
        "w_packet_rate": ("reward", "packet_rate", float),
        "w_timeout": ("reward", "timeout", float),
        "w_timeout_ev": ("reward", "timeout_ev", float),
    },
    "ds": {
        "w1": ("ds", "w1", float),
        "w2": ("ds", "w2", float),
    },
    "eval": {
        "episodes": ("top", "eval_episodes", int),
        "policies": ("top", "eval_policies", tuple),
    },
    "flags": {
        "capacity_scheduled_only": ("top", "capacity_scheduled_only", bool),
        "mmf_strict_cap": ("top", "mmf_strict_cap", bool),
        "replay_is_weights": ("top", "replay_is_weights", bool),
    },
    "paths": {
        "out_dir": ("top", "out_dir", str),
        "checkpoint": ("top", "checkpoint", str),
    },
}


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file: {exc}") from exc

    values: dict[str, dict] = {"sim": {}, "agent": {}, "reward": {}, "ds": {}, "top": {}}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser[section].items():
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown config key {section}.{key}")
            target, attr, kind = _SCHEMA[section][key]
            values[target][attr] = _convert(raw, kind, f"{section}.{key}")

    try:
        sim = SimConfig(**values["sim"])
    except SimError as exc:
        raise ConfigError(f"sim: {exc}") from exc
    try:
        agent = AgentConfig(**values["agent"])
        reward = RewardWeights(**values["reward"])
        ds = DsWeights(**values["ds"])
        return ExperimentConfig(sim=sim, agent=agent, reward=reward, ds=ds, **values["top"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_config(config: ExperimentConfig) -> str:
    """Render the full configuration as INI text; parse_config inverts it."""
    objects = {
        "sim": config.sim,
        "agent": config.agent,
        "reward": config.reward,
        "ds": config.ds,
        "top": config,
    }
    out = io.StringIO()
    for section, keys in _SCHEMA.items():
        out.write(f"[{section}]\n")
        for key, (target, attr, _) in keys.items():
            out.write(f"{key} = {_format(getattr(objects[target], attr))}\n")
        out.write("\n")
    return out.getvalue()
