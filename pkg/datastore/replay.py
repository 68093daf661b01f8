"""
replay.py

FIFO replay buffer over latent trajectories.

Each slot of the ring holds a back-reference ``(trajectory id, step)`` instead of
copies of the latents, so future-style relabeling can look up later steps of the
same trajectory. A stored trajectory is dropped once its last transition is
evicted.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from datastore.errors import EmptyBufferError
from datastore.records import LatentTrajectory

logger = logging.getLogger(__name__)

RewardFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(slots=True)
class Transition:
    """Single ``(z_t, a_t, z_{t+1}, z_g, r)`` tuple with its source reference."""

    observation: np.ndarray
    action: np.ndarray
    next_observation: np.ndarray
    goal: np.ndarray
    reward: float
    terminal: bool
    trajectory_id: int
    step: int


@dataclass(slots=True)
# 배치 단위 배열 묶음 (B개 전이)
# pylint: disable=too-many-instance-attributes
class TransitionBatch:
    observations: np.ndarray
    actions: np.ndarray
    next_observations: np.ndarray
    goals: np.ndarray
    rewards: np.ndarray
    terminals: np.ndarray
    trajectory_ids: np.ndarray
    steps: np.ndarray

    def __len__(self) -> int:
        return int(self.actions.shape[0])

    def transition(self, index: int) -> Transition:
        return Transition(
            observation=self.observations[index],
            action=self.actions[index],
            next_observation=self.next_observations[index],
            goal=self.goals[index],
            reward=float(self.rewards[index]),
            terminal=bool(self.terminals[index]),
            trajectory_id=int(self.trajectory_ids[index]),
            step=int(self.steps[index]),
        )


@dataclass(slots=True)
class StoredTrajectory:
    """Latents of one pushed trajectory plus its stored goal and affordance goal bank."""

    latents: np.ndarray
    actions: np.ndarray
    goal: np.ndarray
    goal_bank: np.ndarray | None
    live: int

    @property
    def length(self) -> int:
        return int(self.actions.shape[0])


RelabelHook = Callable[[TransitionBatch, "ReplayBuffer", np.random.Generator], TransitionBatch]


class ReplayBuffer:
    """
    Ring buffer of transitions with strict FIFO eviction.

    Args:
        capacity (int): Maximum number of stored transitions
        reward_fn (RewardFn): Batched reward ``(next latents, goals) -> rewards``
    """

    def __init__(self, capacity: int, reward_fn: RewardFn):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self.reward_fn = reward_fn
        self._traj_ids = np.zeros(self.capacity, dtype=np.int64)
        self._steps = np.zeros(self.capacity, dtype=np.int64)
        self._next = 0
        self._size = 0
        self._next_trajectory_id = 0
        self._trajectories: dict[int, StoredTrajectory] = {}

    def __len__(self) -> int:
        return self._size

    @property
    def trajectory_count(self) -> int:
        return len(self._trajectories)

    def trajectory(self, trajectory_id: int) -> StoredTrajectory:
        return self._trajectories[trajectory_id]

    def push(
        self,
        trajectory: LatentTrajectory,
        goal: np.ndarray | None = None,
        goal_bank: np.ndarray | None = None,
    ) -> int:
        """
        Store every transition of ``trajectory``.

        ``goal`` is the goal the episode pursued; prior-data trajectories default
        to their final latent. Returns the trajectory id.
        """
        latents = np.asarray(trajectory.latents, dtype=np.float32)
        stored_goal = latents[-1] if goal is None else np.asarray(goal, dtype=np.float32).reshape(-1)
        if stored_goal.shape[0] != latents.shape[1]:
            raise ValueError(f"goal dim {stored_goal.shape[0]} != latent dim {latents.shape[1]}")
        trajectory_id = self._next_trajectory_id
        self._next_trajectory_id += 1
        self._trajectories[trajectory_id] = StoredTrajectory(
            latents=latents,
            actions=np.asarray(trajectory.actions, dtype=np.float32),
            goal=stored_goal,
            goal_bank=None if goal_bank is None else np.asarray(goal_bank, dtype=np.float32),
            live=0,
        )
        for step in range(trajectory.length):
            if self._size == self.capacity:
                self._evict(self._next, keep=trajectory_id)
            else:
                self._size += 1
            self._traj_ids[self._next] = trajectory_id
            self._steps[self._next] = step
            self._trajectories[trajectory_id].live += 1
            self._next = (self._next + 1) % self.capacity
        if self._trajectories[trajectory_id].live == 0:
            del self._trajectories[trajectory_id]
        return trajectory_id

    def _evict(self, slot: int, keep: int) -> None:
        old = int(self._traj_ids[slot])
        stored = self._trajectories[old]
        stored.live -= 1
        if stored.live == 0 and old != keep:
            del self._trajectories[old]

    def oldest(self) -> tuple[int, int]:
        """Back-reference of the transition that would be evicted next."""
        if self._size == 0:
            raise EmptyBufferError("replay buffer is empty")
        slot = self._next if self._size == self.capacity else 0
        return int(self._traj_ids[slot]), int(self._steps[slot])

    def gather(self, trajectory_ids: np.ndarray, steps: np.ndarray) -> TransitionBatch:
        """Assemble transitions for explicit back-references using their stored goals."""
        size = len(trajectory_ids)
        dim = next(iter(self._trajectories.values())).latents.shape[1]
        observations = np.empty((size, dim), dtype=np.float32)
        next_observations = np.empty((size, dim), dtype=np.float32)
        goals = np.empty((size, dim), dtype=np.float32)
        actions = np.empty((size, 4), dtype=np.float32)
        for row, (tid, step) in enumerate(zip(trajectory_ids, steps)):
            stored = self._trajectories[int(tid)]
            observations[row] = stored.latents[step]
            next_observations[row] = stored.latents[step + 1]
            goals[row] = stored.goal
            actions[row] = stored.actions[step]
        return TransitionBatch(
            observations=observations,
            actions=actions,
            next_observations=next_observations,
            goals=goals,
            rewards=self.reward_fn(next_observations, goals).astype(np.float32),
            terminals=np.zeros(size, dtype=np.float32),
            trajectory_ids=np.asarray(trajectory_ids, dtype=np.int64),
            steps=np.asarray(steps, dtype=np.int64),
        )

    def sample_slots(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if self._size == 0:
            raise EmptyBufferError("cannot sample from an empty replay buffer")
        return rng.integers(0, self._size, size=batch_size)

    def sample(
        self,
        batch_size: int,
        rng: np.random.Generator,
        relabel: RelabelHook | None = None,
    ) -> TransitionBatch:
        """
        Draw ``batch_size`` transitions uniformly with replacement.

        ``relabel`` sees the whole batch and rewrites goals per transition; it is
        responsible for recomputing rewards.

        Raises:
            EmptyBufferError: If nothing has been pushed yet
        """
        slots = self.sample_slots(batch_size, rng)
        batch = self.gather(self._traj_ids[slots], self._steps[slots])
        if relabel is not None:
            batch = relabel(batch, self, rng)
        return batch
