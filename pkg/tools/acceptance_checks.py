"""Long-running training checks on the desk profile (minutes to hours each)."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd

from affordance.causality import causality_check
from affordance.data import PairSet, build_pairs, split_by_trajectory
from affordance.model import AffordanceModel
from affordance.training import heldout_nll, train_affordance
from autodiff.rng import make_stream
from config import ExperimentConfig, make_profile
from datastore.encoding import encode_dataset
from datastore.records import LatentTrajectory, TrajectoryRecord
from datastore.replay import ReplayBuffer
from file_utils import save_json
from gcrl.probes import run_her_probe
from gcrl.relabel import Relabeler
from gcrl.reward import SparseReward, batch_reward
from harness.collect import load_or_collect
from harness.pipeline import run_pipeline
from harness.sweep import run_sweep
from logging_setup import setup_logging
from mylogger import run_context
from representation.training import sample_images, train_vqvae
from representation.vqvae import VQVAE, latent_grid_size

logger = logging.getLogger(__name__)

DEFAULT_OUTPUT = "outputs/acceptance"
DEFAULT_SEEDS = [0, 1, 2, 3, 4]
SWEEP_SIZES = [250, 1000, 4000]
RELABEL_MIXTURE = (0.2, 0.4, 0.4)
RELABEL_DRAWS = 100_000

VQVAE_MSE_LIMIT = 0.01
CAUSALITY_LIMIT = 1e-6
COPY_NLL_LIMIT = 0.05
CONDITIONAL_GAIN = 0.10
FREQUENCY_TOLERANCE = 0.01
HER_SUCCESS = 0.9
HER_EPISODES = 200
OFFLINE_SUCCESS = 0.40
ONLINE_GAIN = 0.15
NULL_GAIN_LIMIT = 0.05
EPISODE0_SPREAD = 0.10


@dataclass(slots=True)
class CheckResult:
    name: str
    passed: bool
    details: dict[str, object] = field(default_factory=dict)
    seconds: float = 0.0


class Workspace:
    """Dataset and representation shared between checks, built on first use."""

    def __init__(self, cfg: ExperimentConfig, out: Path, seeds: list[int], workers: int | None):
        self.cfg = cfg
        self.out = out
        self.seeds = seeds
        self.workers = workers
        self._records: list[TrajectoryRecord] | None = None
        self._vqvae: VQVAE | None = None
        self._images: np.ndarray | None = None

    @property
    def dataset_path(self) -> Path:
        return self.out / f"prior-{self.cfg.data.num_trajectories}.vald"

    @property
    def records(self) -> list[TrajectoryRecord]:
        if self._records is None:
            self._records = load_or_collect(self.cfg, self.dataset_path, self.cfg.seeds.run)
        return self._records

    @property
    def images(self) -> np.ndarray:
        if self._images is None:
            self._images = sample_images(self.records, self.cfg.vqvae.num_images, self.cfg.seeds.run)
        return self._images

    @property
    def vqvae(self) -> VQVAE:
        if self._vqvae is None:
            self._vqvae, _ = train_vqvae(self.images, self.cfg.vqvae, self.cfg.seeds.run)
        return self._vqvae


def _chunked_mse(model: VQVAE, images: np.ndarray, chunk: int = 200) -> float:
    total = 0.0
    for start in range(0, len(images), chunk):
        batch = images[start : start + chunk]
        total += float(np.sum((model.reconstruct(batch) - batch) ** 2))
    return total / images.size


def check_vqvae(ws: Workspace) -> CheckResult:
    mse = _chunked_mse(ws.vqvae, ws.images)
    return CheckResult(
        "vqvae",
        mse < VQVAE_MSE_LIMIT,
        {"images": len(ws.images), "epochs": ws.cfg.vqvae.epochs, "recon_mse": mse, "limit": VQVAE_MSE_LIMIT},
    )


def _copy_pairs(codebook: np.ndarray, grid: int, count: int, seed: int) -> PairSet:
    rng = make_stream(seed, "acceptance.copy")
    indices = rng.integers(0, len(codebook), size=(count, grid, grid))
    return PairSet(codebook[indices].astype(np.float32), indices.astype(np.int64), np.arange(count, dtype=np.int64))


def check_pixelcnn(ws: Workspace) -> CheckResult:
    cfg, seed = ws.cfg, ws.cfg.seeds.run
    grid = latent_grid_size(cfg.env.image_size)
    codebook = make_stream(seed, "acceptance.codebook").normal(
        size=(cfg.vqvae.codebook_size, cfg.vqvae.embedding_dim)
    ).astype(np.float32)

    fresh = AffordanceModel(cfg.pixelcnn, codebook, grid, make_stream(seed, "acceptance.causality"))
    causality = causality_check(fresh, trials=20, seed=seed)

    copy = _copy_pairs(codebook, grid, 1100, seed)
    copy_model, _ = train_affordance(copy.subset(np.arange(1000)), cfg.pixelcnn, codebook, seed)
    copy_nll = heldout_nll(copy_model, copy.subset(np.arange(1000, 1100)))

    latents = encode_dataset(ws.records, ws.vqvae)
    pairs = build_pairs(latents, cfg.data.pairs_per_trajectory, make_stream(seed, "affordance.pairs"))
    train, heldout = split_by_trajectory(pairs, 0.1, make_stream(seed, "affordance.split"))
    book = ws.vqvae.codebook.data
    conditional, _ = train_affordance(train, cfg.pixelcnn, book, seed)
    unconditional, _ = train_affordance(train, cfg.pixelcnn, book, seed, conditional=False)
    cond_nll = heldout_nll(conditional, heldout)
    uncond_nll = heldout_nll(unconditional, heldout)
    gain = (uncond_nll - cond_nll) / uncond_nll

    return CheckResult(
        "pixelcnn",
        causality.max_violation < CAUSALITY_LIMIT and copy_nll < COPY_NLL_LIMIT and gain >= CONDITIONAL_GAIN,
        {
            "max_violation": causality.max_violation,
            "copy_nll": copy_nll,
            "conditional_nll": cond_nll,
            "unconditional_nll": uncond_nll,
            "conditional_gain": gain,
        },
    )


def _random_trajectory(rng: np.random.Generator, length: int, dim: int) -> LatentTrajectory:
    latents = np.cumsum(rng.normal(0.0, 0.5, size=(length + 1, dim)), axis=0).astype(np.float32)
    return LatentTrajectory(
        spec=None,
        indices=np.zeros((length + 1, 1, 1), dtype=np.int16),
        latents=latents,
        actions=rng.uniform(-1.0, 1.0, size=(length, 4)).astype(np.float32),
    )


def check_relabel(ws: Workspace) -> CheckResult:
    seed, epsilon = ws.cfg.seeds.run, 1.0
    relabeler = Relabeler(RELABEL_MIXTURE, epsilon)
    branches = relabeler.branches(RELABEL_DRAWS, make_stream(seed, "acceptance.branches"))
    frequencies = np.bincount(branches, minlength=3) / RELABEL_DRAWS
    worst = float(np.max(np.abs(frequencies - np.asarray(RELABEL_MIXTURE))))

    rng = make_stream(seed, "acceptance.relabel")
    buffer = ReplayBuffer(10_000, SparseReward(epsilon))
    for _ in range(50):
        trajectory = _random_trajectory(rng, 20, 6)
        buffer.push(trajectory, goal_bank=trajectory.latents[rng.integers(0, 21, size=4)])
    batch = buffer.sample(4096, rng, relabel=relabeler)
    values = set(np.unique(batch.rewards).tolist())
    recomputed = bool(np.array_equal(batch.rewards, batch_reward(batch.next_observations, batch.goals, epsilon)))

    return CheckResult(
        "relabel",
        worst <= FREQUENCY_TOLERANCE and values <= {-1.0, 0.0} and recomputed,
        {"frequencies": frequencies.tolist(), "max_deviation": worst, "reward_values": sorted(values), "recomputed": recomputed},
    )


def check_her(ws: Workspace) -> CheckResult:
    best = {}
    for seed in ws.seeds:
        best[seed] = run_her_probe(seed, episodes=HER_EPISODES).best
    return CheckResult("her", all(rate >= HER_SUCCESS for rate in best.values()), {"best_success": best})


def _improvement_runs(ws: Workspace, name: str, goal_source: str) -> dict[str, float]:
    offline, online = [], []
    for seed in ws.seeds:
        cfg = ws.cfg.with_seed(seed)
        cfg.rl.goal_source = goal_source
        pipeline = run_pipeline(cfg, ws.out / name / f"seed-{seed}", records=ws.records)
        summary = pipeline.summary()
        offline.append(float(summary["offline_success"]))
        online.append(float(summary["finetune_success"]))
        logger.info(
            "%s seed %d: offline %.2f online %.2f", name, seed, offline[-1], online[-1], extra={"stage": name}
        )
    return {"offline": float(np.mean(offline)), "online": float(np.mean(online)), "gain": float(np.mean(online) - np.mean(offline))}


def check_offline_online(ws: Workspace) -> CheckResult:
    means = _improvement_runs(ws, "offline-online", "affordance")
    return CheckResult("offline-online", means["offline"] >= OFFLINE_SUCCESS and means["gain"] >= ONLINE_GAIN, means)


def check_null_goal(ws: Workspace) -> CheckResult:
    means = _improvement_runs(ws, "null-goal", "null")
    return CheckResult("null-goal", means["gain"] <= NULL_GAIN_LIMIT, means)


def scaling_trend(frame: pd.DataFrame) -> dict[str, object]:
    """Final and episode-0 success per size from a sweep.csv frame."""
    final = frame.sort_values("episode").groupby(["size", "seed"]).last().reset_index()
    per_size = final.groupby("size")["success"].agg(["mean", "sem"]).fillna(0.0)
    start = frame[frame["episode"] == 0].groupby("size")["success"].mean()
    means, errors = per_size["mean"].to_numpy(), per_size["sem"].to_numpy()
    inversions = [
        (i, float(means[i] - means[i + 1]), float(max(errors[i], errors[i + 1])))
        for i in range(len(means) - 1)
        if means[i + 1] < means[i]
    ]
    monotone = len(inversions) == 0 or (len(inversions) == 1 and inversions[0][1] <= inversions[0][2])
    return {
        "final_success": {int(k): float(v) for k, v in per_size["mean"].items()},
        "episode0_success": {int(k): float(v) for k, v in start.items()},
        "episode0_spread": float(start.max() - start.min()) if len(start) else 0.0,
        "inversions": len(inversions),
        "monotone": monotone,
    }


def check_sweep(ws: Workspace) -> CheckResult:
    cfg = ws.cfg.with_seed(ws.cfg.seeds.run)
    cfg.data.num_trajectories = max(SWEEP_SIZES)
    path = ws.out / f"prior-{cfg.data.num_trajectories}.vald"
    load_or_collect(cfg, path, cfg.seeds.run)
    frame = run_sweep(cfg, path, SWEEP_SIZES, ws.seeds, ws.out / "sweep", ws.workers)
    trend = scaling_trend(frame)
    return CheckResult("sweep", trend["monotone"] and trend["episode0_spread"] < EPISODE0_SPREAD, trend)


CHECKS: dict[str, Callable[[Workspace], CheckResult]] = {
    "vqvae": check_vqvae,
    "pixelcnn": check_pixelcnn,
    "relabel": check_relabel,
    "her": check_her,
    "offline-online": check_offline_online,
    "null-goal": check_null_goal,
    "sweep": check_sweep,
}


def run_checks(names: list[str], ws: Workspace) -> list[CheckResult]:
    results = []
    for name in names:
        started = time.perf_counter()
        with run_context(stage=f"acceptance.{name}"):
            result = CHECKS[name](ws)
        result.seconds = round(time.perf_counter() - started, 1)
        logger.info("%s: %s in %.1fs", name, "PASS" if result.passed else "FAIL", result.seconds)
        results.append(result)
    return results


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Run long training checks on the desk profile.")
    parser.add_argument("check", nargs="?", default="all", choices=["all", *CHECKS])
    parser.add_argument("--output", default=DEFAULT_OUTPUT)
    parser.add_argument("--seeds", type=int, nargs="+", default=DEFAULT_SEEDS)
    parser.add_argument("--workers", type=int, default=None)
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    out = Path(args.output)
    setup_logging(log_file=out / "acceptance.jsonl")
    names = list(CHECKS) if args.check == "all" else [args.check]
    ws = Workspace(make_profile("desk"), out, args.seeds, args.workers)

    results = run_checks(names, ws)

    save_json({r.name: {"passed": r.passed, "seconds": r.seconds, **r.details} for r in results}, out / f"{args.check}.json")
    for result in results:
        print(f"{'PASS' if result.passed else 'FAIL'} {result.name} ({result.seconds}s) {result.details}")
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
