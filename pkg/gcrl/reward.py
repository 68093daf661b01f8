"""Sparse latent reward and its threshold calibration."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from datastore.records import LatentTrajectory

logger = logging.getLogger(__name__)

CALIBRATION_PAIRS = 20_000


class RewardContractError(ValueError):
    """Latent dimensions disagree or the threshold is not positive."""


def compute_reward(z: np.ndarray, z_goal: np.ndarray, epsilon: float) -> float:
    """
    ``0`` when ``||z - z_goal|| <= epsilon`` (Euclidean over the flattened latent), else ``-1``.

    Raises:
        RewardContractError: On a dimension mismatch or ``epsilon <= 0``
    """
    a = np.asarray(z, dtype=np.float64).reshape(-1)
    b = np.asarray(z_goal, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise RewardContractError(f"latent dims differ: {a.shape} vs {b.shape}")
    if epsilon <= 0:
        raise RewardContractError(f"epsilon must be > 0, got {epsilon}")
    return 0.0 if float(np.linalg.norm(a - b)) <= epsilon else -1.0


def batch_reward(z: np.ndarray, z_goal: np.ndarray, epsilon: float) -> np.ndarray:
    """Row-wise ``compute_reward`` for B×dim arrays."""
    a = np.asarray(z, dtype=np.float64)
    b = np.asarray(z_goal, dtype=np.float64)
    if a.shape != b.shape:
        raise RewardContractError(f"latent dims differ: {a.shape} vs {b.shape}")
    if epsilon <= 0:
        raise RewardContractError(f"epsilon must be > 0, got {epsilon}")
    distances = np.linalg.norm(a - b, axis=-1)
    return np.where(distances <= epsilon, 0.0, -1.0).astype(np.float32)


class SparseReward:
    """Callable batched reward bound to one threshold."""

    def __init__(self, epsilon: float):
        if epsilon <= 0:
            raise RewardContractError(f"epsilon must be > 0, got {epsilon}")
        self.epsilon = float(epsilon)

    def __call__(self, z: np.ndarray, z_goal: np.ndarray) -> np.ndarray:
        return batch_reward(z, z_goal, self.epsilon)


def calibrate_epsilon(
    trajectories: Sequence[LatentTrajectory],
    rng: np.random.Generator,
    percentile: float = 5.0,
    pairs: int = CALIBRATION_PAIRS,
) -> float:
    """
    Percentile of distances between random pairs of distinct states.

    Both states of a pair come from the same trajectory at different steps, and
    pairs whose latents coincide are skipped, so the threshold reflects the
    smallest visible changes within one scene.

    Raises:
        RewardContractError: If no pair of differing latents exists
    """
    if not trajectories:
        raise RewardContractError("cannot calibrate epsilon without trajectories")
    picks = rng.integers(0, len(trajectories), size=pairs)
    distances = []
    for pick in picks:
        latents = trajectories[int(pick)].latents
        if len(latents) < 2:
            continue
        i, j = rng.choice(len(latents), size=2, replace=False)
        distance = float(np.linalg.norm(latents[i].astype(np.float64) - latents[j]))
        if distance > 0:
            distances.append(distance)
    if not distances:
        raise RewardContractError("every sampled pair of states has identical latents")
    epsilon = float(np.percentile(distances, percentile))
    logger.info("Calibrated reward epsilon %.5f from %d pairs (p%.1f)", epsilon, len(distances), percentile)
    return epsilon
