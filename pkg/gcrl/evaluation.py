"""
evaluation.py

Goal-image evaluation in a held-out scene.

Goals are final frames of noise-free single-task expert episodes, each stored
with its ground-truth state for oracle scoring. Episode ``k`` pursues goal
``k mod n`` from a start state seeded by that goal, so the success rate does not
depend on the order of the goal set.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from autodiff.rng import make_stream
from config import EnvConfig
from datastore.errors import LeakageError
from datastore.records import evaluation_access, evaluation_access_active
from deskworld.dynamics import step
from deskworld.models import ACTION_DIM, EnvState, SceneSpec, Task
from deskworld.oracle import SuccessThresholds, oracle_success
from deskworld.render import render
from deskworld.scenes import reset
from deskworld.scripted import WaypointScript, expert_rollout, task_script
from gcrl.networks import GaussianPolicy
from representation.vqvae import VQVAE

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class GoalSpec:
    image: np.ndarray
    state: EnvState
    reset_seed: int
    latent: np.ndarray | None = None


@dataclass(slots=True)
class GoalSet:
    task: Task
    goals: list[GoalSpec]

    def __len__(self) -> int:
        return len(self.goals)

    def reordered(self, order: Sequence[int]) -> "GoalSet":
        return GoalSet(self.task, [self.goals[i] for i in order])


@dataclass(slots=True)
class StepContext:
    """What a policy sees at one step; ``state`` is readable only under evaluation access."""

    spec: SceneSpec
    t: int
    image: np.ndarray
    latent: np.ndarray | None
    goal_image: np.ndarray
    goal_latent: np.ndarray | None
    _state: EnvState = field(repr=False)

    @property
    def state(self) -> EnvState:
        if not evaluation_access_active():
            raise LeakageError("policies may not read the ground-truth state")
        return self._state


class EvalPolicy(Protocol):
    def reset(self, seed: int) -> None: ...

    def act(self, ctx: StepContext) -> np.ndarray: ...


class LatentPolicy:
    """Greedy (mean) action of a goal-conditioned policy on encoded frames."""

    def __init__(self, policy: GaussianPolicy):
        self.policy = policy

    def reset(self, seed: int) -> None:
        del seed

    def act(self, ctx: StepContext) -> np.ndarray:
        if ctx.latent is None or ctx.goal_latent is None:
            raise ValueError("LatentPolicy needs an encoder")
        return self.policy.mean_action(ctx.latent[None], ctx.goal_latent[None])[0]


class ScriptedExpertPolicy:
    """The single-task expert that produced the goals; reads state as an oracle."""

    def __init__(self, task: Task | str, env: EnvConfig):
        self.task = Task(task)
        self.env = env
        self._script: WaypointScript | None = None

    def reset(self, seed: int) -> None:
        self._script = None

    def act(self, ctx: StepContext) -> np.ndarray:
        with evaluation_access():
            state = ctx.state
        if self._script is None:
            self._script = task_script(ctx.spec, state, self.task, self.env)
        return self._script.act(state)


class RandomPolicy:
    def __init__(self, seed: int):
        self.seed = seed
        self._rng = make_stream(seed, "random-policy")

    def reset(self, seed: int) -> None:
        self._rng = make_stream(self.seed, "random-policy", seed)

    def act(self, ctx: StepContext) -> np.ndarray:
        return self._rng.uniform(-1.0, 1.0, size=ACTION_DIM).astype(np.float32)


@dataclass(slots=True)
class EpisodeOutcome:
    episode: int
    goal_index: int
    reset_seed: int
    success: bool


@dataclass(slots=True)
class EvalResult:
    outcomes: list[EpisodeOutcome]

    @property
    def success_rate(self) -> float:
        if not self.outcomes:
            return 0.0
        return sum(o.success for o in self.outcomes) / len(self.outcomes)


def build_goal_set(
    spec: SceneSpec, task: Task | str, count: int, seed: int, env: EnvConfig | None = None
) -> GoalSet:
    """Run the task expert ``count`` times and keep final frames and states as goals."""
    env = env or EnvConfig()
    task = Task(task)
    seeds = make_stream(seed, "goals", spec.seed).integers(0, 2**31 - 1, size=count)
    goals = []
    for reset_seed in seeds:
        result = expert_rollout(spec, int(reset_seed), task, env)
        goals.append(GoalSpec(image=result.images[-1], state=result.states[-1], reset_seed=int(reset_seed)))
    return GoalSet(task=task, goals=goals)


def encode_goals(goal_set: GoalSet, encoder: VQVAE) -> GoalSet:
    for goal in goal_set.goals:
        goal.latent = encoder.encode(goal.image).flat.astype(np.float32)
    return goal_set


def _episode_seed(goal: GoalSpec, repeat: int) -> int:
    if repeat == 0:
        return goal.reset_seed
    return int(make_stream(goal.reset_seed, "eval.repeat", repeat).integers(0, 2**31 - 1))


def evaluate(
    policy: EvalPolicy,
    spec: SceneSpec,
    goal_set: GoalSet,
    episodes: int,
    encoder: VQVAE | None = None,
    env: EnvConfig | None = None,
) -> EvalResult:
    """
    Roll out ``policy`` toward each goal and score final states with the oracle.

    Raises:
        ValueError: If the goal set is empty
    """
    if not goal_set.goals:
        raise ValueError("evaluate needs a nonempty goal set")
    env = env or EnvConfig()
    thresholds = SuccessThresholds.from_env(env)
    if encoder is not None:
        for goal in goal_set.goals:
            if goal.latent is None:
                goal.latent = encoder.encode(goal.image).flat.astype(np.float32)
    outcomes = []
    for episode in range(episodes):
        goal_index = episode % len(goal_set)
        goal = goal_set.goals[goal_index]
        seed = _episode_seed(goal, episode // len(goal_set))
        state = reset(spec, seed, task=goal_set.task)
        policy.reset(seed)
        for t in range(env.horizon):
            image = render(spec, state, env)
            latent = encoder.encode(image).flat.astype(np.float32) if encoder is not None else None
            ctx = StepContext(spec, t, image, latent, goal.image, goal.latent, state)
            state = step(spec, state, policy.act(ctx), env)
        success = oracle_success(spec, state, goal.state, thresholds)
        outcomes.append(EpisodeOutcome(episode=episode, goal_index=goal_index, reset_seed=seed, success=success))
    result = EvalResult(outcomes)
    logger.debug("Evaluated %d episodes: success %.3f", episodes, result.success_rate)
    return result
