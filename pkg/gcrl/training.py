"""
training.py

Offline pretraining on the encoded prior dataset and the online fine-tuning loop.

Every update step draws its randomness from a stream keyed by the step (or
episode) index, so a run restarted at ``start_step`` from a checkpoint continues
exactly as an uninterrupted run would.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from affordance.model import AffordanceModel
from affordance.sampling import sample_goal_bank, sample_indices
from autodiff.rng import make_stream
from config import EnvConfig, RlConfig
from datastore.errors import EmptyBufferError
from datastore.records import LatentTrajectory
from datastore.replay import ReplayBuffer
from deskworld.dynamics import step as env_step
from deskworld.models import ACTION_DIM, SceneSpec
from deskworld.render import render
from deskworld.scenes import reset
from gcrl.awac import ActorCritic, policy_update, q_update
from gcrl.evaluation import EvalResult
from gcrl.relabel import GoalSampler, Relabeler
from representation.vqvae import VQVAE

logger = logging.getLogger(__name__)

EvaluateFn = Callable[[ActorCritic], EvalResult]
RowCallback = Callable[[dict[str, float]], None]


@dataclass(slots=True)
class RlTrainingLog:
    rows: list[dict[str, float]] = field(default_factory=list)
    evaluations: list[tuple[int, float]] = field(default_factory=list)

    @property
    def final(self) -> dict[str, float]:
        return self.rows[-1] if self.rows else {}

    def column(self, name: str) -> list[float]:
        return [row[name] for row in self.rows if name in row]


def affordance_goal_sampler(model: AffordanceModel, temperature: float = 1.0) -> GoalSampler:
    """Relabeling fallback that samples one goal from a flattened first-frame latent."""
    dim = model.codebook.shape[1]

    def sampler(z0_flat: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        grid = np.asarray(z0_flat, dtype=np.float32).reshape(1, model.grid, model.grid, dim)
        indices = sample_indices(model, grid, rng, temperature)[0]
        return model.codebook[indices].reshape(-1).astype(np.float32)

    return sampler


def goal_banks(
    model: AffordanceModel,
    trajectories: Sequence[LatentTrajectory],
    count: int,
    seed: int,
    temperature: float = 1.0,
) -> list[np.ndarray]:
    """Pre-sample ``count`` affordance goals per trajectory, conditioned on its first frame."""
    if not trajectories or count < 1:
        return [None] * len(trajectories)  # type: ignore[list-item]
    dim = model.codebook.shape[1]
    z0 = np.stack([t.latents[0].reshape(model.grid, model.grid, dim) for t in trajectories])
    banks = sample_goal_bank(model, z0, count, make_stream(seed, "affordance.bank"), temperature)
    return list(banks)


def fill_buffer(
    buffer: ReplayBuffer,
    trajectories: Sequence[LatentTrajectory],
    banks: Sequence[np.ndarray | None] | None = None,
) -> None:
    for i, trajectory in enumerate(trajectories):
        buffer.push(trajectory, goal_bank=None if banks is None else banks[i])
    logger.info("Replay buffer holds %d transitions from %d trajectories", len(buffer), buffer.trajectory_count)


def _update(
    buffer: ReplayBuffer, nets: ActorCritic, cfg: RlConfig, relabeler: Relabeler, rng: np.random.Generator
) -> tuple[float, float]:
    q_losses, policy_losses = [], []
    for _ in range(max(1, cfg.batches_per_timestep)):
        batch = buffer.sample(cfg.batch_size, rng, relabel=relabeler)
        q_losses.append(q_update(batch, nets, cfg, rng))
        policy_losses.append(policy_update(batch, nets, cfg, rng))
    return float(np.mean(q_losses)), float(np.mean(policy_losses))


def offline_pretrain(
    buffer: ReplayBuffer,
    nets: ActorCritic,
    cfg: RlConfig,
    relabeler: Relabeler,
    seed: int,
    steps: int | None = None,
    start_step: int = 0,
    evaluate_fn: EvaluateFn | None = None,
    eval_every: int | None = None,
    on_row: RowCallback | None = None,
) -> RlTrainingLog:
    """
    Run relabeled critic and actor updates on the prior data.

    Rows are logged every ``cfg.log_every`` steps and at the last step, with
    losses averaged over the steps since the previous row.

    Raises:
        EmptyBufferError: If the buffer holds no transitions
    """
    if len(buffer) == 0:
        raise EmptyBufferError("offline pretraining needs an encoded prior dataset")
    steps = cfg.pretrain_steps if steps is None else steps
    log = RlTrainingLog()
    q_window, policy_window = [], []
    for step in range(start_step, steps):
        rng = make_stream(seed, "pretrain.step", step)
        q_loss, policy_loss = _update(buffer, nets, cfg, relabeler, rng)
        q_window.append(q_loss)
        policy_window.append(policy_loss)
        done = step + 1
        if done % cfg.log_every == 0 or done == steps:
            row = {"step": float(done), "q_loss": float(np.mean(q_window)), "policy_loss": float(np.mean(policy_window))}
            q_window, policy_window = [], []
            if evaluate_fn is not None and eval_every and (done % eval_every == 0 or done == steps):
                row["success"] = evaluate_fn(nets).success_rate
                log.evaluations.append((done, row["success"]))
            log.rows.append(row)
            logger.info(
                "pretrain step %d: q %.5f policy %.5f",
                done,
                row["q_loss"],
                row["policy_loss"],
                extra={"stage": "pretrain", "step": done},
            )
            if on_row is not None:
                on_row(row)
    return log


@dataclass(slots=True)
class EpisodeData:
    trajectory: LatentTrajectory
    goal: np.ndarray
    reached: bool


def collect_episode(
    spec: SceneSpec,
    reset_seed: int,
    encoder: VQVAE,
    nets: ActorCritic,
    goal: np.ndarray | None,
    rng: np.random.Generator,
    env: EnvConfig,
    epsilon: float,
    affordance: AffordanceModel | None = None,
    temperature: float = 1.0,
) -> EpisodeData:
    """
    Reset, encode s0, pick a goal, and roll the stochastic policy out for H steps.

    ``goal=None`` samples from the affordance model; without a model the first
    frame itself is the goal.
    """
    state = reset(spec, reset_seed)
    first = encoder.encode(render(spec, state, env))
    if goal is None:
        if affordance is not None:
            indices = sample_indices(affordance, first.quantized[None], rng, temperature)[0]
            goal = affordance.codebook[indices].reshape(-1).astype(np.float32)
        else:
            goal = first.flat.astype(np.float32)
    horizon = env.horizon
    latents = np.zeros((horizon + 1, first.flat.shape[0]), dtype=np.float32)
    indices_all = np.zeros((horizon + 1, *first.indices.shape), dtype=np.int16)
    actions = np.zeros((horizon, ACTION_DIM), dtype=np.float32)
    latents[0], indices_all[0] = first.flat, first.indices
    for t in range(horizon):
        action = nets.policy.sample(latents[t][None], goal[None], rng)[0].astype(np.float32)
        state = env_step(spec, state, action, env)
        code = encoder.encode(render(spec, state, env))
        actions[t] = action
        latents[t + 1], indices_all[t + 1] = code.flat, code.indices
    trajectory = LatentTrajectory(spec=spec, indices=indices_all, latents=latents, actions=actions)
    reached = float(np.linalg.norm(latents[-1].astype(np.float64) - goal)) <= epsilon
    return EpisodeData(trajectory=trajectory, goal=goal, reached=reached)


def online_finetune(
    spec: SceneSpec,
    encoder: VQVAE,
    affordance: AffordanceModel | None,
    nets: ActorCritic,
    buffer: ReplayBuffer,
    relabeler: Relabeler,
    cfg: RlConfig,
    env: EnvConfig,
    seed: int,
    episodes: int | None = None,
    evaluate_fn: EvaluateFn | None = None,
    goal_source: str | None = None,
    temperature: float = 1.0,
    on_row: RowCallback | None = None,
) -> RlTrainingLog:
    """
    Alternate exploration episodes in ``spec`` with relabeled off-policy updates.

    ``goal_source`` is ``"affordance"`` (goals sampled from p(z_t | z_0)) or
    ``"null"`` (the first frame is the goal and the goal bank holds it alone).
    Evaluation runs before the first episode and after every
    ``cfg.eval_every`` episodes; ``log.evaluations`` holds
    ``(episodes completed, success rate)``.
    """
    episodes = cfg.online_episodes if episodes is None else episodes
    goal_source = goal_source or cfg.goal_source
    if goal_source not in ("affordance", "null"):
        raise ValueError(f"goal_source must be 'affordance' or 'null', got {goal_source!r}")
    if goal_source == "affordance" and affordance is None:
        raise ValueError("affordance goal sampling needs an affordance model")
    log = RlTrainingLog()
    if evaluate_fn is not None:
        log.evaluations.append((0, evaluate_fn(nets).success_rate))
    reset_seeds = make_stream(seed, "finetune.reset", spec.seed).integers(0, 2**31 - 1, size=episodes)

    for episode in range(episodes):
        rng = make_stream(seed, "finetune.episode", episode)
        model = affordance if goal_source == "affordance" else None
        data = collect_episode(
            spec, int(reset_seeds[episode]), encoder, nets, None, rng, env, relabeler.epsilon, model, temperature
        )
        if model is not None:
            bank = sample_goal_bank(
                model,
                data.trajectory.latents[0].reshape(1, model.grid, model.grid, -1),
                cfg.affordance_bank_size,
                rng,
                temperature,
            )[0]
        else:
            bank = data.trajectory.latents[0][None]
        buffer.push(data.trajectory, goal=data.goal, goal_bank=bank)

        update_rng = make_stream(seed, "finetune.update", episode)
        q_losses, policy_losses = [], []
        for _ in range(cfg.train_steps_per_episode):
            q_loss, policy_loss = _update(buffer, nets, cfg, relabeler, update_rng)
            q_losses.append(q_loss)
            policy_losses.append(policy_loss)
        done = episode + 1
        row = {
            "episode": float(done),
            "reached_goal": float(data.reached),
            "buffer_size": float(len(buffer)),
            "q_loss": float(np.mean(q_losses)) if q_losses else float("nan"),
            "policy_loss": float(np.mean(policy_losses)) if policy_losses else float("nan"),
        }
        if evaluate_fn is not None and (done % cfg.eval_every == 0 or done == episodes):
            row["success"] = evaluate_fn(nets).success_rate
            log.evaluations.append((done, row["success"]))
        log.rows.append(row)
        logger.info(
            "finetune episode %d: buffer %d q %.5f success %s",
            done,
            len(buffer),
            row["q_loss"],
            row.get("success", "-"),
            extra={"stage": "finetune", "step": done},
        )
        if on_row is not None:
            on_row(row)
    return log
