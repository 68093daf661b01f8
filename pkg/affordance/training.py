"""Maximum-likelihood training and evaluation of the affordance model."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from affordance.data import PairSet
from affordance.model import AffordanceModel
from autodiff.optim import Adam
from autodiff.rng import make_stream
from autodiff.tensor import no_grad
from config import PixelCnnConfig

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class AffordanceTrainingLog:
    epochs: list[dict[str, float]] = field(default_factory=list)

    @property
    def final(self) -> dict[str, float]:
        return self.epochs[-1] if self.epochs else {}


def log_likelihood(model: AffordanceModel, targets: np.ndarray, z0: np.ndarray, batch_size: int = 64) -> float:
    """
    Teacher-forced mean log-probability per token (nats, <= 0).

    Equal to the negative training loss on the same pairs.
    """
    targets = np.asarray(targets, dtype=np.int64)
    z0 = np.asarray(z0)
    if targets.ndim == 2:
        targets, z0 = targets[None], z0[None]
    total = 0.0
    with no_grad():
        for start in range(0, len(targets), batch_size):
            chunk = slice(start, start + batch_size)
            loss = model.loss(targets[chunk], z0[chunk])
            total += loss.item() * len(targets[chunk])
    return -total / len(targets)


def heldout_nll(model: AffordanceModel, pairs: PairSet) -> float:
    """Mean negative log-likelihood per token over ``pairs``."""
    if len(pairs) == 0:
        return float("nan")
    return -log_likelihood(model, pairs.targets, pairs.z0)


def train_affordance(
    pairs: PairSet,
    cfg: PixelCnnConfig,
    codebook: np.ndarray,
    seed: int = 0,
    conditional: bool = True,
    validation: PairSet | None = None,
    on_epoch: Callable[[dict[str, float]], None] | None = None,
) -> tuple[AffordanceModel, AffordanceTrainingLog]:
    """
    Fit p(z_t | z0) by minimizing mean cross-entropy over all grid positions.

    Raises:
        ValueError: If ``pairs`` is empty
        AffordanceContractError: If pair shapes do not match the codebook grid
    """
    if len(pairs) == 0:
        raise ValueError("train_affordance needs at least one pair")
    grid = pairs.targets.shape[1]
    stream = "affordance" if conditional else "affordance.unconditional"
    model = AffordanceModel(cfg, codebook, grid, make_stream(seed, f"{stream}.init"), conditional=conditional)
    model.check_codes(pairs.targets, pairs.z0)
    optimizer = Adam(model.parameters(), lr=cfg.learning_rate)
    shuffle = make_stream(seed, f"{stream}.shuffle")
    log = AffordanceTrainingLog()

    for epoch in range(cfg.epochs):
        order = shuffle.permutation(len(pairs))
        total, batches = 0.0, 0
        for start in range(0, len(order), cfg.batch_size):
            rows = order[start : start + cfg.batch_size]
            optimizer.zero_grad()
            loss = model.loss(pairs.targets[rows], pairs.z0[rows])
            loss.backward()
            optimizer.step()
            total += loss.item()
            batches += 1
        row = {"epoch": float(epoch), "train_nll": total / batches}
        if validation is not None and len(validation):
            row["val_nll"] = heldout_nll(model, validation)
        log.epochs.append(row)
        logger.info(
            "affordance epoch %d: train %.4f val %.4f nats/token",
            epoch,
            row["train_nll"],
            row.get("val_nll", float("nan")),
            extra={"stage": "train-affordance", "step": epoch},
        )
        if on_epoch is not None:
            on_epoch(row)
    return model, log
