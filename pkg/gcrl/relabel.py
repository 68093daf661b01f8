"""
relabel.py

Goal relabeling mixture: keep the stored goal, hindsight "future" goals from the
same trajectory, or affordance-model goals conditioned on the trajectory's first
frame. Rewards are always recomputed after the goal is chosen.
"""

from __future__ import annotations

import logging
from enum import IntEnum
from typing import Callable

import numpy as np

from datastore.replay import ReplayBuffer, StoredTrajectory, Transition, TransitionBatch
from gcrl.reward import batch_reward

logger = logging.getLogger(__name__)

GoalSampler = Callable[[np.ndarray, np.random.Generator], np.ndarray]


class Branch(IntEnum):
    KEEP = 0
    FUTURE = 1
    AFFORDANCE = 2


def future_step(step: int, length: int, uniform: float) -> int:
    """
    Index of a later state for the transition at ``step``.

    Uniform over ``step + 2 .. length``; at the last transition there is no state
    after ``z_{t+1}`` and ``step + 1`` is returned.
    """
    low = step + 2
    if low > length:
        return step + 1
    return low + min(int(uniform * (length - low + 1)), length - low)


class Relabeler:
    """
    Args:
        mixture: ``(p_keep, p_future, p_affordance)``, must sum to 1
        epsilon: reward threshold
        goal_sampler: fallback ``(z0 flat, rng) -> goal flat`` when a trajectory has no goal bank
    """

    def __init__(
        self,
        mixture: tuple[float, float, float],
        epsilon: float,
        goal_sampler: GoalSampler | None = None,
    ):
        probs = np.asarray(mixture, dtype=np.float64)
        if probs.shape != (3,) or (probs < 0).any() or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError(f"relabel mixture must be 3 non-negative values summing to 1, got {mixture}")
        self.mixture = tuple(float(p) for p in probs)
        self.epsilon = float(epsilon)
        self.goal_sampler = goal_sampler
        self._thresholds = np.cumsum(probs)[:2]

    def branches(self, count: int, rng: np.random.Generator) -> np.ndarray:
        draws = rng.random(count)
        return np.searchsorted(self._thresholds, draws, side="right").astype(np.int64)

    def _affordance_goal(self, source: StoredTrajectory, rng: np.random.Generator) -> np.ndarray:
        if source.goal_bank is not None and len(source.goal_bank):
            return source.goal_bank[int(rng.integers(0, len(source.goal_bank)))]
        if self.goal_sampler is None:
            raise ValueError("affordance relabeling needs a goal bank or a goal sampler")
        return self.goal_sampler(source.latents[0], rng)

    def _new_goal(self, branch: int, source: StoredTrajectory, step: int, current: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if branch == Branch.KEEP:
            return current
        if branch == Branch.FUTURE:
            return source.latents[future_step(step, source.length, float(rng.random()))]
        return self._affordance_goal(source, rng)

    def relabel(self, transition: Transition, source: StoredTrajectory, rng: np.random.Generator) -> Transition:
        """Relabel a single transition whose back-reference points into ``source``."""
        branch = int(self.branches(1, rng)[0])
        goal = self._new_goal(branch, source, transition.step, transition.goal, rng)
        reward = float(batch_reward(transition.next_observation[None], np.asarray(goal)[None], self.epsilon)[0])
        return Transition(
            observation=transition.observation,
            action=transition.action,
            next_observation=transition.next_observation,
            goal=np.asarray(goal, dtype=np.float32),
            reward=reward,
            terminal=transition.terminal,
            trajectory_id=transition.trajectory_id,
            step=transition.step,
        )

    def __call__(self, batch: TransitionBatch, buffer: ReplayBuffer, rng: np.random.Generator) -> TransitionBatch:
        """Replay-buffer hook: relabel every transition of ``batch``."""
        branches = self.branches(len(batch), rng)
        goals = batch.goals.copy()
        for row in np.flatnonzero(branches != Branch.KEEP):
            source = buffer.trajectory(int(batch.trajectory_ids[row]))
            goals[row] = self._new_goal(int(branches[row]), source, int(batch.steps[row]), goals[row], rng)
        return TransitionBatch(
            observations=batch.observations,
            actions=batch.actions,
            next_observations=batch.next_observations,
            goals=goals,
            rewards=batch_reward(batch.next_observations, goals, self.epsilon),
            terminals=batch.terminals,
            trajectory_ids=batch.trajectory_ids,
            steps=batch.steps,
        )
