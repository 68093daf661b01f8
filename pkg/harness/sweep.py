"""
sweep.py

Prior-data scaling sweep: rerun the pipeline on nested subsets of the prior
dataset for several seeds and collect success-vs-episode curves.

Subset ``K`` is the first ``K`` trajectories of one seeded permutation, so every
smaller subset is contained in every larger one. Runs are independent and go to
``<out>/size-<K>/seed-<S>``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from autodiff.rng import make_stream
from config import ExperimentConfig, RuntimeConfig, from_dict
from datastore.dataset_file import load_dataset
from harness.pipeline import run_pipeline
from harness.run_directory import RunDirectory, write_csv

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["size", "seed", "episode", "success"]


class SweepError(ValueError):
    """Requested subset sizes cannot be drawn from the dataset."""


def subset_indices(dataset_size: int, sizes: Sequence[int], seed: int) -> dict[int, np.ndarray]:
    """
    Prefixes of one seeded permutation of ``range(dataset_size)``.

    Raises:
        SweepError: If sizes are not ascending and positive, or exceed the dataset
    """
    sizes = [int(size) for size in sizes]
    if not sizes or sizes != sorted(sizes) or sizes[0] < 1:
        raise SweepError(f"sizes must be positive and ascending, got {sizes}")
    if sizes[-1] > dataset_size:
        raise SweepError(f"subset size {sizes[-1]} exceeds the {dataset_size} trajectories in the dataset")
    order = make_stream(seed, "sweep.subsample").permutation(dataset_size)
    return {size: np.sort(order[:size]) for size in sizes}


@dataclass(frozen=True, slots=True)
class SweepJob:
    config: dict
    dataset_path: str
    indices: tuple[int, ...]
    size: int
    seed: int
    out: str


def curve_rows(run_dir: RunDirectory, size: int, seed: int) -> list[dict[str, float]]:
    """Finetune success per evaluated episode count, from the run's metrics."""
    metrics = run_dir.metrics()
    success = metrics[(metrics["stage"] == "finetune") & (metrics["metric"] == "success")]
    success = success.sort_values("step")
    return [
        {"size": size, "seed": seed, "episode": int(row.step), "success": float(row.value)}
        for row in success.itertuples(index=False)
    ]


def run_job(job: SweepJob) -> list[dict[str, float]]:
    cfg = from_dict(job.config)
    records = load_dataset(job.dataset_path)
    subset = [records[i] for i in job.indices]
    pipeline = run_pipeline(cfg.with_seed(job.seed), job.out, records=subset)
    return curve_rows(pipeline.run_dir, job.size, job.seed)


def run_sweep(
    cfg: ExperimentConfig,
    dataset_path: str | Path,
    sizes: Sequence[int],
    seeds: Sequence[int],
    out: str | Path,
    workers: int | None = None,
) -> pd.DataFrame:
    """
    Run every (size, seed) pipeline and write ``<out>/sweep.csv``.

    Raises:
        SweepError: On invalid sizes
    """
    records = load_dataset(dataset_path)
    subsets = subset_indices(len(records), sizes, cfg.seeds.run)
    del records
    out = Path(out)
    jobs = [
        SweepJob(
            config=cfg.to_dict(),
            dataset_path=str(dataset_path),
            indices=tuple(int(i) for i in subsets[size]),
            size=size,
            seed=int(seed),
            out=str(out / f"size-{size}" / f"seed-{seed}"),
        )
        for size in subsets
        for seed in seeds
    ]
    workers = min(workers or RuntimeConfig.THREADS, len(jobs))
    logger.info("Sweep: %d runs over sizes %s with %d workers", len(jobs), list(subsets), workers)
    if workers <= 1:
        results = [run_job(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_job, jobs))
    frame = pd.DataFrame([row for rows in results for row in rows], columns=SWEEP_COLUMNS)
    write_csv(frame, out / "sweep.csv", SWEEP_COLUMNS, append=False)
    return frame
