"""
records.py

Trajectory records of the prior dataset and their latent-encoded form.

Ground-truth states travel with every record but sit behind ``GroundTruth``:
reading them outside ``evaluation_access()`` raises ``LeakageError``. Learners
only see images, actions and latents.
"""

from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterator

import numpy as np

from datastore.errors import LeakageError
from deskworld.models import ACTION_DIM, STATE_DIM, EnvState, SceneSpec

if TYPE_CHECKING:
    from deskworld.scripted import Rollout

_EVALUATION_ACCESS: contextvars.ContextVar[bool] = contextvars.ContextVar("ground_truth_access", default=False)


@contextlib.contextmanager
def evaluation_access() -> Iterator[None]:
    """Allow ``GroundTruth.read`` inside the block (oracle scoring only)."""
    token = _EVALUATION_ACCESS.set(True)
    try:
        yield
    finally:
        _EVALUATION_ACCESS.reset(token)


def evaluation_access_active() -> bool:
    return _EVALUATION_ACCESS.get()


class GroundTruth:
    """Per-step physical states (T+1)×STATE_DIM, readable only for evaluation."""

    __slots__ = ("spec_seed", "_states")

    def __init__(self, spec_seed: int, states: np.ndarray):
        self.spec_seed = int(spec_seed)
        self._states = np.asarray(states, dtype=np.float32)

    def __len__(self) -> int:
        return int(self._states.shape[0])

    def read(self) -> np.ndarray:
        """
        Return the state array.

        Raises:
            LeakageError: Outside ``evaluation_access()``
        """
        if not _EVALUATION_ACCESS.get():
            raise LeakageError("ground-truth states are only readable inside evaluation_access()")
        return self._states

    def state_at(self, t: int) -> EnvState:
        return EnvState.from_array(self.spec_seed, self.read()[t])

    def storage_array(self) -> np.ndarray:
        # 저장 포맷 전용, 학습 코드에서 사용 금지
        return self._states

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GroundTruth):
            return NotImplemented
        return self.spec_seed == other.spec_seed and np.array_equal(self._states, other._states)

    def __hash__(self) -> int:
        return hash((self.spec_seed, self._states.shape))


@dataclass(slots=True, eq=False)
class TrajectoryRecord:
    """
    One episode of the prior dataset.

    Attributes:
        spec (SceneSpec): Scene the episode was collected in
        images (np.ndarray): (T+1)×H×W×3 float32 observations of s_0..s_T
        actions (np.ndarray): T×4 float32 actions a_0..a_{T-1}
        ground_truth (GroundTruth): gated (T+1)×STATE_DIM states
    """

    spec: SceneSpec
    images: np.ndarray
    actions: np.ndarray
    ground_truth: GroundTruth = field(repr=False)

    def __post_init__(self) -> None:
        self.images = np.asarray(self.images, dtype=np.float32)
        self.actions = np.asarray(self.actions, dtype=np.float32)
        self.validate()

    @property
    def length(self) -> int:
        """Number of transitions T."""
        return int(self.actions.shape[0])

    @property
    def image_size(self) -> tuple[int, int]:
        return int(self.images.shape[1]), int(self.images.shape[2])

    def validate(self) -> None:
        if self.actions.ndim != 2 or self.actions.shape[1] != ACTION_DIM:
            raise ValueError(f"actions must be T×{ACTION_DIM}, got {self.actions.shape}")
        if self.images.ndim != 4 or self.images.shape[3] != 3:
            raise ValueError(f"images must be (T+1)×H×W×3, got {self.images.shape}")
        steps = self.length + 1
        if self.images.shape[0] != steps or len(self.ground_truth) != steps:
            raise ValueError(
                f"record lengths disagree: {self.length} actions, {self.images.shape[0]} images, "
                f"{len(self.ground_truth)} states"
            )
        if self.ground_truth.storage_array().shape[1] != STATE_DIM:
            raise ValueError(f"states must have {STATE_DIM} fields")
        if self.ground_truth.spec_seed != self.spec.seed:
            raise ValueError(f"states belong to scene {self.ground_truth.spec_seed}, spec is {self.spec.seed}")

    @classmethod
    def from_rollout(cls, spec: SceneSpec, rollout: "Rollout") -> "TrajectoryRecord":
        states = np.stack([state.as_array() for state in rollout.states])
        return cls(
            spec=spec,
            images=rollout.images,
            actions=rollout.actions,
            ground_truth=GroundTruth(spec.seed, states),
        )

    def same_as(self, other: "TrajectoryRecord") -> bool:
        """Field-for-field bitwise equality."""
        return (
            self.spec == other.spec
            and np.array_equal(self.images, other.images)
            and np.array_equal(self.actions, other.actions)
            and self.ground_truth == other.ground_truth
        )


@dataclass(slots=True, eq=False)
class LatentTrajectory:
    """
    A trajectory with every observation replaced by its latent code.

    Attributes:
        spec (SceneSpec | None): Scene of the source record, ``None`` for synthetic probes
        indices (np.ndarray): (T+1)×L×L int16 codebook indices
        latents (np.ndarray): (T+1)×(L·L·D) float32 flattened quantized embeddings
        actions (np.ndarray): T×4 float32
        ground_truth (GroundTruth | None): gated states, ``None`` for online episodes
    """

    spec: SceneSpec | None
    indices: np.ndarray
    latents: np.ndarray
    actions: np.ndarray
    ground_truth: GroundTruth | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.latents.shape[0] != self.actions.shape[0] + 1 or self.indices.shape[0] != self.latents.shape[0]:
            raise ValueError(
                f"latent trajectory lengths disagree: {self.actions.shape[0]} actions, "
                f"{self.latents.shape[0]} latents, {self.indices.shape[0]} index grids"
            )

    @property
    def length(self) -> int:
        return int(self.actions.shape[0])

    @property
    def latent_dim(self) -> int:
        return int(self.latents.shape[1])
