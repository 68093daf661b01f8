"""Prior dataset collection across sampled training scenes."""

from __future__ import annotations

import logging
from collections import Counter
from pathlib import Path
from typing import Sequence

from config import ExperimentConfig
from datastore.dataset_file import load_dataset, save_dataset
from datastore.records import TrajectoryRecord
from deskworld.scenes import prior_scene_seed, sample_environment
from deskworld.scripted import scripted_collect

logger = logging.getLogger(__name__)

INTERACTABLES = ("drawer", "button", "object")


def collect_dataset(cfg: ExperimentConfig, seed: int, count: int | None = None) -> list[TrajectoryRecord]:
    """
    One scripted play trajectory in each of ``count`` freshly sampled scenes.

    Scene ``i`` and its reset both use ``prior_scene_seed(seed, i)``, so a seed
    reproduces the same file byte for byte.
    """
    count = cfg.data.num_trajectories if count is None else count
    records = []
    for index in range(count):
        scene_seed = prior_scene_seed(seed, index)
        spec = sample_environment(scene_seed, cfg.env)
        records.append(scripted_collect(spec, scene_seed, cfg.env.horizon, cfg.env))
        if (index + 1) % 100 == 0:
            logger.info("Collected %d/%d trajectories", index + 1, count)
    return records


def summarize_dataset(records: Sequence[TrajectoryRecord]) -> dict[str, float]:
    """Trajectory and transition counts plus the fraction of scenes holding each interactable."""
    present: Counter[str] = Counter()
    for record in records:
        present.update(record.spec.interactables())
    total = max(len(records), 1)
    summary = {
        "trajectories": float(len(records)),
        "transitions": float(sum(record.length for record in records)),
    }
    for name in INTERACTABLES:
        summary[f"freq_{name}"] = present[name] / total
    return summary


def load_or_collect(cfg: ExperimentConfig, path: str | Path, seed: int) -> list[TrajectoryRecord]:
    path = Path(path)
    if path.exists():
        records = load_dataset(path)
        logger.info("Loaded %d prior trajectories from %s", len(records), path)
        return records
    records = collect_dataset(cfg, seed)
    save_dataset(records, path)
    logger.info("Wrote %d prior trajectories to %s", len(records), path)
    return records
