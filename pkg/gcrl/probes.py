"""
probes.py

Small synthetic problems with known answers for the actor-critic.

Main Functions:
    - run_her_probe(): 2-D point reaching with an identity encoder and hindsight relabeling
    - one_state_q_probe(): constant-reward self-loop whose value is a geometric series
    - bandit_probe(): single-step choice where one action is better
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from autodiff.rng import make_stream
from autodiff.tensor import no_grad
from config import RlConfig
from datastore.records import LatentTrajectory
from datastore.replay import ReplayBuffer
from deskworld.models import ACTION_DIM
from gcrl.awac import ActorCritic, policy_update, q_update
from gcrl.relabel import Relabeler
from gcrl.reward import SparseReward

logger = logging.getLogger(__name__)

FUTURE_ONLY = (0.2, 0.8, 0.0)


@dataclass(frozen=True, slots=True)
class PointReach:
    """Point in the unit square moved by the first two action dimensions."""

    horizon: int = 20
    step_size: float = 0.1
    success_radius: float = 0.05

    def sample_pair(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        points = rng.uniform(0.0, 1.0, size=(2, 2)).astype(np.float32)
        return points[0], points[1]

    def step(self, position: np.ndarray, action: np.ndarray) -> np.ndarray:
        move = np.clip(np.asarray(action[:2], dtype=np.float32), -1.0, 1.0) * self.step_size
        return np.clip(position + move, 0.0, 1.0).astype(np.float32)

    def success(self, position: np.ndarray, goal: np.ndarray) -> bool:
        return float(np.linalg.norm(position - goal)) <= self.success_radius


def probe_config(**overrides) -> RlConfig:
    cfg = RlConfig(
        gamma=0.95,
        batch_size=128,
        replay_capacity=100_000,
        policy_hidden=(64, 64),
        q_hidden=(64, 64),
        policy_lr=1e-3,
        q_lr=1e-3,
        policy_weight_decay=0.0,
        tau=0.05,
        train_steps_per_episode=20,
    )
    return dataclasses.replace(cfg, **overrides)


def _episode(
    env: PointReach, nets: ActorCritic, start: np.ndarray, goal: np.ndarray, rng: np.random.Generator | None
) -> tuple[np.ndarray, np.ndarray]:
    positions = np.zeros((env.horizon + 1, 2), dtype=np.float32)
    actions = np.zeros((env.horizon, ACTION_DIM), dtype=np.float32)
    positions[0] = start
    for t in range(env.horizon):
        if rng is None:
            action = nets.policy.mean_action(positions[t][None], goal[None])[0]
        else:
            action = nets.policy.sample(positions[t][None], goal[None], rng)[0]
        actions[t] = action
        positions[t + 1] = env.step(positions[t], action)
    return positions, actions


def evaluate_point_reach(env: PointReach, nets: ActorCritic, seed: int, episodes: int = 20) -> float:
    """Greedy success rate over a fixed set of start/goal pairs."""
    rng = make_stream(seed, "probe.eval")
    successes = 0
    for _ in range(episodes):
        start, goal = env.sample_pair(rng)
        positions, _ = _episode(env, nets, start, goal, None)
        successes += env.success(positions[-1], goal)
    return successes / episodes


@dataclass(slots=True)
class ProbeResult:
    curve: list[tuple[int, float]] = field(default_factory=list)

    @property
    def best(self) -> float:
        return max((rate for _, rate in self.curve), default=0.0)


def run_her_probe(
    seed: int,
    episodes: int = 200,
    cfg: RlConfig | None = None,
    env: PointReach | None = None,
    eval_every: int = 20,
    eval_episodes: int = 20,
) -> ProbeResult:
    """Online goal reaching from scratch with keep/future relabeling."""
    cfg = cfg or probe_config()
    env = env or PointReach()
    nets = ActorCritic.create(2, ACTION_DIM, cfg, seed)
    buffer = ReplayBuffer(cfg.replay_capacity, SparseReward(env.success_radius))
    relabeler = Relabeler(FUTURE_ONLY, env.success_radius)
    result = ProbeResult()
    for episode in range(episodes):
        rng = make_stream(seed, "probe.episode", episode)
        start, goal = env.sample_pair(rng)
        positions, actions = _episode(env, nets, start, goal, rng)
        trajectory = LatentTrajectory(
            spec=None, indices=np.zeros((env.horizon + 1, 1, 1), dtype=np.int16), latents=positions, actions=actions
        )
        buffer.push(trajectory, goal=goal)
        for _ in range(cfg.train_steps_per_episode):
            batch = buffer.sample(cfg.batch_size, rng, relabel=relabeler)
            q_update(batch, nets, cfg, rng)
            policy_update(batch, nets, cfg, rng)
        if (episode + 1) % eval_every == 0:
            rate = evaluate_point_reach(env, nets, seed, eval_episodes)
            result.curve.append((episode + 1, rate))
            logger.info("point-reach probe episode %d: success %.2f", episode + 1, rate, extra={"step": episode + 1})
    return result


def _single_state_buffer(
    next_latents: list[float], actions: list[np.ndarray], goal: float, epsilon: float
) -> ReplayBuffer:
    buffer = ReplayBuffer(1000, SparseReward(epsilon))
    for next_latent, action in zip(next_latents, actions):
        trajectory = LatentTrajectory(
            spec=None,
            indices=np.zeros((2, 1, 1), dtype=np.int16),
            latents=np.array([[0.0], [next_latent]], dtype=np.float32),
            actions=np.asarray(action, dtype=np.float32)[None],
        )
        buffer.push(trajectory, goal=np.array([goal], dtype=np.float32))
    return buffer


def one_state_q_probe(steps: int, cfg: RlConfig | None = None, seed: int = 0, logged_actions: int = 64) -> float:
    """
    Train Q on a self-loop where every step costs ``-1``.

    The logged actions cover the action box so the bootstrap action drawn from
    the policy stays on-distribution. The fixed point is
    ``-reward_scale / (1 - gamma)``; returns the mean learned Q on a batch from
    the buffer after ``steps`` critic updates.
    """
    cfg = cfg or probe_config(batch_size=32, q_hidden=(16, 16), policy_hidden=(16, 16))
    nets = ActorCritic.create(1, ACTION_DIM, cfg, seed)
    actions = make_stream(seed, "probe.q.actions").uniform(-1.0, 1.0, size=(logged_actions, ACTION_DIM))
    # 다음 상태도 같은 상태 (0), 목표는 항상 멀리
    buffer = _single_state_buffer([0.0] * logged_actions, list(actions), goal=1.0, epsilon=0.5)
    rng = make_stream(seed, "probe.q")
    for _ in range(steps):
        q_update(buffer.sample(cfg.batch_size, rng), nets, cfg, rng)
    batch = buffer.sample(cfg.batch_size, rng)
    return float(nets.q(batch.observations, batch.actions, batch.goals).data.mean())


BANDIT_GOOD = np.array([0.6, 0.0, 0.0, 0.0], dtype=np.float32)
BANDIT_BAD = np.array([-0.6, 0.0, 0.0, 0.0], dtype=np.float32)


def bandit_probe(
    seed: int = 0, q_steps: int = 300, policy_steps: int = 50, cfg: RlConfig | None = None
) -> tuple[float, float]:
    """
    One state, two logged actions; the good one reaches the goal.

    Returns:
        tuple: ``log pi(good) - log pi(bad)`` before and after the actor updates
    """
    cfg = cfg or probe_config(gamma=0.0, batch_size=32, q_hidden=(32, 32), policy_hidden=(32, 32), q_lr=1e-2)
    nets = ActorCritic.create(1, ACTION_DIM, cfg, seed)
    buffer = _single_state_buffer([1.0, -1.0], [BANDIT_GOOD, BANDIT_BAD], goal=1.0, epsilon=0.5)
    rng = make_stream(seed, "probe.bandit")
    for _ in range(q_steps):
        q_update(buffer.sample(cfg.batch_size, rng), nets, cfg, rng)

    def margin() -> float:
        obs = np.zeros((2, 1), dtype=np.float32)
        goals = np.ones((2, 1), dtype=np.float32)
        with no_grad():
            log_prob = nets.policy.log_prob(obs, goals, np.stack([BANDIT_GOOD, BANDIT_BAD])).data
        return float(log_prob[0] - log_prob[1])

    before = margin()
    for _ in range(policy_steps):
        policy_update(buffer.sample(cfg.batch_size, rng), nets, cfg, rng)
    return before, margin()
