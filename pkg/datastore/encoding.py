"""Replace every observation of the prior dataset with its latent code."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from datastore.errors import EncodingContractError
from datastore.records import LatentTrajectory, TrajectoryRecord
from representation.vqvae import VQVAE

logger = logging.getLogger(__name__)


def encode_record(record: TrajectoryRecord, model: VQVAE) -> LatentTrajectory:
    if record.image_size != (model.image_size, model.image_size):
        raise EncodingContractError(
            f"record images are {record.image_size}, the representation expects "
            f"{model.image_size}x{model.image_size}"
        )
    indices, quantized = model.encode_batch(record.images)
    return LatentTrajectory(
        spec=record.spec,
        indices=indices.astype(np.int16),
        latents=quantized.reshape(len(quantized), -1).astype(np.float32),
        actions=record.actions,
        ground_truth=record.ground_truth,
    )


def encode_dataset(records: Sequence[TrajectoryRecord], model: VQVAE) -> list[LatentTrajectory]:
    """
    Encode every frame of every record.

    Ground-truth states are carried over behind the same evaluation gate.

    Raises:
        EncodingContractError: If an image size does not match the representation
    """
    encoded = [encode_record(record, model) for record in records]
    logger.info("Encoded %d trajectories (%d frames)", len(encoded), sum(t.length + 1 for t in encoded))
    return encoded
