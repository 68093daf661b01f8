"""
config.py

This module provides centralized configuration management for the affordance
learning pipeline. Runtime settings come from environment variables; experiment
hyperparameters come from a strict TOML file layered over a named profile.

Configuration Categories:
    - Runtime: thread cap, output root, logging config path (environment variables)
    - Experiment: env, data, vqvae, pixelcnn, rl, eval, seeds sections (TOML)
    - Profiles: "desk" (scaled-down defaults) and "paper" (full-scale values)
"""

from __future__ import annotations

import dataclasses
import json
import os
import tomllib
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from dotenv import load_dotenv

# Load environment variables
load_dotenv()


class ConfigError(Exception):
    """Custom exception for configuration errors."""


class RuntimeConfig:
    """Process-level settings read from the environment."""

    # BLAS 스레드 수와 sweep 워커 수 상한
    THREADS = int(os.getenv("VAL_THREADS", "1"))
    OUTPUT_ROOT = os.getenv("VAL_OUTPUT_ROOT", "outputs/runs")
    LOG_CONFIG = os.getenv("VAL_LOG_CONFIG", "logging_config/logging_config.json")

    THREAD_ENV_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")

    @classmethod
    def apply_thread_cap(cls, threads: int | None = None) -> int:
        """
        Export the BLAS thread cap. Must run before numpy is first imported to take effect.

        Returns:
            int: The cap that was exported
        """
        value = cls.THREADS if threads is None else threads
        if value < 1:
            raise ConfigError(f"VAL_THREADS must be >= 1, got {value}")
        for name in cls.THREAD_ENV_VARS:
            os.environ.setdefault(name, str(value))
        return value


# --------------------------------------------------------------------------- experiment sections
@dataclass(slots=True)
class EnvConfig:
    """Desk simulator constants."""

    image_size: int = 48
    velocity_scale: float = 0.05
    grasp_radius: float = 0.06
    button_radius: float = 0.06
    drawer_travel: float = 0.2
    presence_prob: float = 0.7
    geometry_count: int = 84
    horizon: int = 50
    action_noise: float = 0.1
    drawer_success_threshold: float = 0.1
    object_success_radius: float = 0.08


@dataclass(slots=True)
class DataConfig:
    """Prior dataset collection and pair extraction."""

    num_trajectories: int = 1000
    dataset_path: str = "data/prior.vald"
    pairs_per_trajectory: int = 4
    validation_fraction: float = 0.05
    # "uniform": (s_0, s_t) with t uniform; "final": (s_0, s_H)
    pair_mode: str = "uniform"


@dataclass(slots=True)
class VqvaeConfig:
    codebook_size: int = 64
    embedding_dim: int = 5
    conv_layers: int = 3
    conv_hidden: int = 32
    residual_layers: int = 2
    residual_hidden: int = 16
    commitment_cost: float = 0.25
    ema: bool = False
    learning_rate: float = 3e-4
    epochs: int = 30
    batch_size: int = 32
    num_images: int = 2000
    augment: bool = True
    brightness: tuple[float, float] = (0.75, 1.25)
    contrast: tuple[float, float] = (0.9, 1.1)
    saturation: tuple[float, float] = (0.9, 1.1)
    hue: tuple[float, float] = (-0.1, 0.1)
    crop_scale: tuple[float, float] = (0.9, 1.0)
    crop_ratio: tuple[float, float] = (0.9, 1.1)


@dataclass(slots=True)
class PixelCnnConfig:
    layers: int = 8
    channels: int = 32
    first_kernel: int = 7
    kernel: int = 3
    learning_rate: float = 3e-4
    batch_size: int = 32
    epochs: int = 20
    # "global": broadcast bias only; "global+spatial": plus per-position 1x1 projection of z0
    conditioning: str = "global+spatial"
    temperature: float = 1.0


@dataclass(slots=True)
# 하이퍼파라미터 표를 그대로 옮긴 평면 구조
# pylint: disable=too-many-instance-attributes
class RlConfig:
    gamma: float = 0.99
    batch_size: int = 256
    replay_capacity: int = 1_000_000
    pretrain_steps: int = 5000
    policy_hidden: tuple[int, ...] = (256, 256, 256, 256)
    q_hidden: tuple[int, ...] = (256, 256)
    policy_lr: float = 3e-4
    policy_weight_decay: float = 1e-4
    q_lr: float = 3e-4
    q_weight_decay: float = 0.0
    tau: float = 5e-3
    awac_lambda: float = 1.0
    weight_clip: float = 20.0
    # 0 means calibrate from the encoded dataset
    reward_epsilon: float = 0.0
    epsilon_percentile: float = 5.0
    relabel_preset: str = "method"
    reward_scale: float = 1.0
    batches_per_timestep: int = 1
    online_episodes: int = 150
    train_steps_per_episode: int = 500
    eval_every: int = 10
    affordance_bank_size: int = 8
    goal_source: str = "affordance"
    log_every: int = 100
    log_std_min: float = -5.0
    log_std_max: float = 2.0


@dataclass(slots=True)
class EvalConfig:
    task: str = "open_drawer"
    episodes: int = 50
    goal_set_size: int = 10


@dataclass(slots=True)
class SeedsConfig:
    run: int = 0
    # test scenes and goals come from streams keyed by this value, disjoint from prior data
    test_environment: int = 10_000


@dataclass(slots=True)
class ExperimentConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    data: DataConfig = field(default_factory=DataConfig)
    vqvae: VqvaeConfig = field(default_factory=VqvaeConfig)
    pixelcnn: PixelCnnConfig = field(default_factory=PixelCnnConfig)
    rl: RlConfig = field(default_factory=RlConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    seeds: SeedsConfig = field(default_factory=SeedsConfig)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        clone = from_dict(self.to_dict())
        clone.seeds.run = int(seed)
        return clone


RELABEL_PRESETS: dict[str, tuple[float, float, float]] = {
    # (keep, future, affordance)
    "method": (0.2, 0.4, 0.4),
    # rollout 20%, future 50%, prior 30%
    "table": (0.2, 0.5, 0.3),
}

CONDITIONING_MODES = ("global", "global+spatial")
PAIR_MODES = ("uniform", "final")
GOAL_SOURCES = ("affordance", "null")
TASK_NAMES = ("open_drawer", "close_drawer", "toggle_button_drawer", "grasp_object", "place_in_tray")


def paper_profile() -> ExperimentConfig:
    """Full-scale network sizes, dataset size and batch size."""
    cfg = ExperimentConfig()
    cfg.data.num_trajectories = 8000
    cfg.vqvae.codebook_size = 512
    cfg.vqvae.conv_hidden = 128
    cfg.vqvae.residual_layers = 3
    cfg.vqvae.residual_hidden = 64
    cfg.pixelcnn.layers = 15
    cfg.pixelcnn.channels = 128
    cfg.rl.batch_size = 1024
    cfg.rl.pretrain_steps = 25_000
    return cfg


PROFILES = {
    "desk": ExperimentConfig,
    "paper": paper_profile,
}


# --------------------------------------------------------------------------- strict loading
def _coerce(value: Any, annotation: Any, where: str) -> Any:
    origin = typing.get_origin(annotation)
    if annotation is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected bool, got {value!r}")
        return value
    if annotation is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected int, got {value!r}")
        return value
    if annotation is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected float, got {value!r}")
        return float(value)
    if annotation is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected string, got {value!r}")
        return value
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where}: expected array, got {value!r}")
        args = typing.get_args(annotation)
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(item, args[0], f"{where}[{i}]") for i, item in enumerate(value))
        if len(args) != len(value):
            raise ConfigError(f"{where}: expected {len(args)} items, got {len(value)}")
        return tuple(_coerce(item, arg, f"{where}[{i}]") for i, (item, arg) in enumerate(zip(value, args)))
    raise ConfigError(f"{where}: unsupported field type {annotation!r}")


def _apply_section(target: Any, values: dict[str, Any], section: str) -> None:
    if not isinstance(values, dict):
        raise ConfigError(f"[{section}] must be a table")
    hints = typing.get_type_hints(type(target))
    known = {f.name for f in dataclasses.fields(target)}
    for key, value in values.items():
        if key not in known:
            raise ConfigError(f"Unknown key '{key}' in section [{section}]")
        setattr(target, key, _coerce(value, hints[key], f"{section}.{key}"))


def apply_overrides(cfg: ExperimentConfig, overrides: dict[str, Any]) -> ExperimentConfig:
    """
    Layer a nested mapping over ``cfg`` in place.

    Raises:
        ConfigError: On unknown sections or keys, or wrongly typed values
    """
    sections = {f.name for f in dataclasses.fields(cfg)}
    for section, values in overrides.items():
        if section not in sections:
            raise ConfigError(f"Unknown section [{section}]")
        _apply_section(getattr(cfg, section), values, section)
    validate(cfg)
    return cfg


def from_dict(values: dict[str, Any], profile: str = "desk") -> ExperimentConfig:
    return apply_overrides(make_profile(profile), values)


def make_profile(profile: str) -> ExperimentConfig:
    try:
        return PROFILES[profile]()
    except KeyError as exc:
        raise ConfigError(f"Unknown profile '{profile}'. Options: {', '.join(PROFILES)}") from exc


def validate(cfg: ExperimentConfig) -> None:
    """
    Check cross-field invariants.

    Raises:
        ConfigError: If any invariant is broken
    """
    problems = []
    if not 0.0 < cfg.rl.gamma < 1.0:
        problems.append(f"rl.gamma must lie in (0, 1), got {cfg.rl.gamma}")
    if cfg.rl.relabel_preset not in RELABEL_PRESETS:
        problems.append(f"rl.relabel_preset must be one of {sorted(RELABEL_PRESETS)}")
    if cfg.rl.goal_source not in GOAL_SOURCES:
        problems.append(f"rl.goal_source must be one of {GOAL_SOURCES}")
    if cfg.rl.reward_epsilon < 0:
        problems.append("rl.reward_epsilon must be >= 0 (0 calibrates from data)")
    if cfg.vqvae.commitment_cost <= 0:
        problems.append("vqvae.commitment_cost must be > 0")
    if cfg.vqvae.ema:
        problems.append("vqvae.ema is not supported; codebook is trained by gradient")
    if cfg.pixelcnn.conditioning not in CONDITIONING_MODES:
        problems.append(f"pixelcnn.conditioning must be one of {CONDITIONING_MODES}")
    if cfg.pixelcnn.temperature <= 0:
        problems.append("pixelcnn.temperature must be > 0")
    if cfg.pixelcnn.layers < 1:
        problems.append("pixelcnn.layers must be >= 1")
    if cfg.data.pair_mode not in PAIR_MODES:
        problems.append(f"data.pair_mode must be one of {PAIR_MODES}")
    if not 0.0 <= cfg.data.validation_fraction < 1.0:
        problems.append("data.validation_fraction must lie in [0, 1)")
    if cfg.env.horizon < 1:
        problems.append("env.horizon must be >= 1")
    if not 0.0 < cfg.env.presence_prob <= 1.0:
        problems.append("env.presence_prob must lie in (0, 1]")
    if cfg.env.image_size % 4:
        problems.append("env.image_size must be divisible by 4 (two stride-2 convolutions)")
    if cfg.eval.task not in TASK_NAMES:
        problems.append(f"eval.task must be one of {TASK_NAMES}")
    if problems:
        raise ConfigError("; ".join(problems))


def load_experiment_config(path: str | Path | None = None, profile: str = "desk") -> ExperimentConfig:
    """
    Load an experiment configuration.

    Args:
        path: TOML file, or a ``config.resolved.json`` snapshot. ``None`` uses the profile alone.
        profile: Base profile the file is layered over

    Returns:
        ExperimentConfig: The resolved configuration

    Raises:
        ConfigError: If the file is unreadable, malformed, or has unknown/invalid keys
    """
    cfg = make_profile(profile)
    if path is None:
        validate(cfg)
        return cfg
    file_path = Path(path)
    try:
        raw = file_path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"Cannot read config file {file_path}: {exc}") from exc
    try:
        if file_path.suffix == ".json":
            overrides = json.loads(raw.decode("utf-8"))
        else:
            overrides = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"Malformed config file {file_path}: {exc}") from exc
    return apply_overrides(cfg, overrides)


def relabel_mixture(cfg: RlConfig) -> tuple[float, float, float]:
    return RELABEL_PRESETS[cfg.relabel_preset]


def get_config(cfg: ExperimentConfig | None = None) -> dict[str, Any]:
    """
    Get all configuration as a dictionary.

    Returns:
        dict[str, Any]: Dictionary containing runtime and experiment values
    """
    experiment = cfg if cfg is not None else make_profile("desk")
    return {
        "runtime": {
            "threads": RuntimeConfig.THREADS,
            "output_root": RuntimeConfig.OUTPUT_ROOT,
            "log_config": RuntimeConfig.LOG_CONFIG,
        },
        "experiment": experiment.to_dict(),
    }
