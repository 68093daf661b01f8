"""Training loop for the VQVAE representation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from autodiff.optim import Adam
from autodiff.rng import make_stream
from config import VqvaeConfig
from representation.augment import AugmentParams, augment
from representation.quantizer import codebook_usage
from representation.vqvae import VQVAE

logger = logging.getLogger(__name__)

EpochCallback = Callable[[dict[str, float]], None]
USAGE_SAMPLE = 512


@dataclass(slots=True)
class VqvaeTrainingLog:
    epochs: list[dict[str, float]] = field(default_factory=list)

    @property
    def final(self) -> dict[str, float]:
        return self.epochs[-1] if self.epochs else {}

    def column(self, name: str) -> list[float]:
        return [row[name] for row in self.epochs]


def sample_images(records: list, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` frames uniformly over all steps of ``records`` without replacement."""
    index = [(r, t) for r, record in enumerate(records) for t in range(record.images.shape[0])]
    if not index:
        raise ValueError("no images to sample from")
    rng = make_stream(seed, "vqvae.images")
    take = rng.permutation(len(index))[: min(count, len(index))]
    return np.stack([records[index[i][0]].images[index[i][1]] for i in sorted(take)])


def _augment_batch(images: np.ndarray, seed: int, epoch: int, item_ids: np.ndarray, params: AugmentParams) -> np.ndarray:
    # 아이템별 스트림 (epoch, index) 으로 배치 순서와 무관하게 결정적
    return np.stack(
        [augment(images[i], make_stream(seed, "vqvae.augment", epoch, int(i)), params) for i in item_ids]
    )


def train_vqvae(
    images: np.ndarray,
    cfg: VqvaeConfig,
    seed: int = 0,
    model: VQVAE | None = None,
    on_epoch: EpochCallback | None = None,
) -> tuple[VQVAE, VqvaeTrainingLog]:
    """
    Fit a VQVAE on ``images`` (N×H×W×3 in [0, 1]).

    Each epoch shuffles with the ``vqvae.shuffle`` stream and logs mean losses,
    the number of codes in use and codebook perplexity.

    Raises:
        ValueError: If ``images`` is empty
    """
    images = np.asarray(images, dtype=np.float32)
    if images.ndim != 4 or len(images) == 0:
        raise ValueError(f"train_vqvae needs at least one N×H×W×3 image, got shape {images.shape}")
    size = images.shape[1]
    if model is None:
        model = VQVAE(cfg, size, make_stream(seed, "vqvae.init"))
    optimizer = Adam(model.parameters(), lr=cfg.learning_rate)
    shuffle = make_stream(seed, "vqvae.shuffle")
    params = AugmentParams.from_config(cfg, size)
    log = VqvaeTrainingLog()

    for epoch in range(cfg.epochs):
        order = shuffle.permutation(len(images))
        sums = {"recon_mse": 0.0, "vq_loss": 0.0, "commit_loss": 0.0, "total": 0.0}
        batches = 0
        for start in range(0, len(order), cfg.batch_size):
            ids = order[start : start + cfg.batch_size]
            batch = _augment_batch(images, seed, epoch, ids, params) if cfg.augment else images[ids]
            optimizer.zero_grad()
            loss, parts = model.loss(batch)
            loss.backward()
            optimizer.step()
            for key in sums:
                sums[key] += parts[key]
            batches += 1
        used_indices, _ = model.encode_batch(images[:USAGE_SAMPLE])
        counts, perplexity = codebook_usage(used_indices, model.codebook_size)
        row = {key: value / batches for key, value in sums.items()}
        row.update({"epoch": float(epoch), "codes_used": float((counts > 0).sum()), "perplexity": perplexity})
        log.epochs.append(row)
        logger.info(
            "vqvae epoch %d: recon %.5f vq %.5f commit %.5f perplexity %.2f",
            epoch,
            row["recon_mse"],
            row["vq_loss"],
            row["commit_loss"],
            perplexity,
            extra={"stage": "train-rep", "step": epoch},
        )
        if on_epoch is not None:
            on_epoch(row)
    return model, log


def reconstruction_mse(model: VQVAE, images: np.ndarray) -> float:
    """Per-pixel MSE of ``decode(encode(x))`` without augmentation."""
    recon = model.reconstruct(images)
    return float(np.mean((recon - np.asarray(images, dtype=recon.dtype)) ** 2))
