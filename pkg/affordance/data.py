"""(z0, z_t) training pairs drawn from latent trajectories."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from datastore.records import LatentTrajectory


@dataclass(slots=True)
class PairSet:
    """
    Attributes:
        z0 (np.ndarray): N×L×L×D quantized first-frame latents
        targets (np.ndarray): N×L×L indices of the later frame
        trajectory_ids (np.ndarray): source trajectory of each pair
    """

    z0: np.ndarray
    targets: np.ndarray
    trajectory_ids: np.ndarray

    def __len__(self) -> int:
        return int(self.targets.shape[0])

    def subset(self, rows: np.ndarray) -> "PairSet":
        return PairSet(self.z0[rows], self.targets[rows], self.trajectory_ids[rows])


def _grid_latent(trajectory: LatentTrajectory, step: int) -> np.ndarray:
    grid = trajectory.indices.shape[1]
    return trajectory.latents[step].reshape(grid, grid, -1)


def build_pairs(
    trajectories: Sequence[LatentTrajectory],
    pairs_per_trajectory: int,
    rng: np.random.Generator,
    mode: str = "uniform",
) -> PairSet:
    """
    Draw pairs ``(z0, z_t)`` per trajectory.

    ``uniform`` samples t uniformly over 1..T; ``final`` always pairs with the last frame.
    """
    if not trajectories:
        raise ValueError("build_pairs needs at least one trajectory")
    if mode not in ("uniform", "final"):
        raise ValueError(f"unknown pair mode {mode!r}")
    z0, targets, ids = [], [], []
    for index, trajectory in enumerate(trajectories):
        count = 1 if mode == "final" else pairs_per_trajectory
        for _ in range(count):
            step = trajectory.length if mode == "final" else int(rng.integers(1, trajectory.length + 1))
            z0.append(_grid_latent(trajectory, 0))
            targets.append(trajectory.indices[step].astype(np.int64))
            ids.append(index)
    return PairSet(np.stack(z0), np.stack(targets), np.asarray(ids, dtype=np.int64))


def split_by_trajectory(
    pairs: PairSet, validation_fraction: float, rng: np.random.Generator
) -> tuple[PairSet, PairSet]:
    """Hold out whole trajectories so no validation pair shares a source with training."""
    unique = np.unique(pairs.trajectory_ids)
    held = int(round(len(unique) * validation_fraction))
    if validation_fraction > 0 and len(unique) > 1:
        held = max(held, 1)
    held = min(held, len(unique) - 1)
    chosen = set(rng.permutation(unique)[:held].tolist())
    mask = np.array([tid in chosen for tid in pairs.trajectory_ids], dtype=bool)
    return pairs.subset(np.flatnonzero(~mask)), pairs.subset(np.flatnonzero(mask))
