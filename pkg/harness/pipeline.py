"""
pipeline.py

End-to-end experiment: collect -> train-rep -> train-affordance -> pretrain -> finetune -> eval.

Each stage checkpoints into the run directory and is recorded in stages.json.
A rerun in the same directory restores completed stages from their checkpoints
and continues with the first unfinished one, after dropping any metric rows an
interrupted stage left behind. Every stage draws randomness from named streams
of the run seed, so a resumed run writes the same metrics as an uninterrupted one.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from affordance.data import build_pairs, split_by_trajectory
from affordance.model import AffordanceModel
from affordance.sampling import sample_indices
from affordance.training import train_affordance
from autodiff.rng import make_stream
from config import ConfigError, ExperimentConfig, relabel_mixture
from datastore.checkpoint import load_checkpoint, save_checkpoint
from datastore.encoding import encode_dataset
from datastore.records import LatentTrajectory, TrajectoryRecord
from datastore.replay import ReplayBuffer
from deskworld.models import ACTION_DIM, SceneSpec
from deskworld.scenes import sample_test_environment
from file_utils import load_json
from gcrl.awac import ActorCritic
from gcrl.evaluation import EvalResult, GoalSet, LatentPolicy, build_goal_set, encode_goals, evaluate
from gcrl.relabel import Relabeler
from gcrl.reward import SparseReward, calibrate_epsilon
from gcrl.training import affordance_goal_sampler, fill_buffer, goal_banks, offline_pretrain, online_finetune
from harness.collect import load_or_collect, summarize_dataset
from harness.run_directory import RunDirectory
from mylogger import run_context
from representation.training import reconstruction_mse, sample_images, train_vqvae
from representation.vqvae import VQVAE, latent_grid_size

logger = logging.getLogger(__name__)

STAGES = ("collect", "train-rep", "train-affordance", "pretrain", "finetune", "eval")
GRID_SAMPLES = 7


class StageError(Exception):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage} failed: {message}")
        self.stage = stage


@dataclass(slots=True)
# 단계 사이에 전달되는 산출물
# pylint: disable=too-many-instance-attributes
class PipelineState:
    records: list[TrajectoryRecord] = field(default_factory=list)
    vqvae: VQVAE | None = None
    latents: list[LatentTrajectory] = field(default_factory=list)
    epsilon: float = 0.0
    affordance: AffordanceModel | None = None
    nets: ActorCritic | None = None
    buffer: ReplayBuffer | None = None
    relabeler: Relabeler | None = None
    test_spec: SceneSpec | None = None
    goal_set: GoalSet | None = None
    offline_success: float | None = None
    finetune_success: float | None = None
    final_success: float | None = None


def affordance_sample_grid(
    vqvae: VQVAE,
    model: AffordanceModel,
    image: np.ndarray,
    count: int,
    rng: np.random.Generator,
    temperature: float = 1.0,
) -> np.ndarray:
    """Conditioning frame followed by ``count`` decoded goal samples, as (count + 1)×H×W×3."""
    first = vqvae.encode(image)
    z0 = np.repeat(first.quantized[None], count, axis=0)
    indices = sample_indices(model, z0, rng, temperature)
    decoded = vqvae.decode_indices(indices)
    return np.concatenate([np.asarray(image, dtype=np.float32)[None], decoded.astype(np.float32)])


class Pipeline:
    """
    Args:
        cfg: resolved experiment configuration
        run_dir: where artifacts go
        records: prior trajectories to use instead of loading ``dataset_path``
        dataset_path: prior dataset file; collected there when missing
    """

    def __init__(
        self,
        cfg: ExperimentConfig,
        run_dir: RunDirectory,
        records: Sequence[TrajectoryRecord] | None = None,
        dataset_path: str | Path | None = None,
    ):
        self.cfg = cfg
        self.run_dir = run_dir
        self.seed = cfg.seeds.run
        self.state = PipelineState(records=list(records) if records is not None else [])
        self._records_given = records is not None
        self.dataset_path = Path(dataset_path or cfg.data.dataset_path)

    # ------------------------------------------------------------------ driver
    def run(self, until: str = "eval") -> PipelineState:
        """
        Run (or resume) every stage up to and including ``until``.

        Raises:
            ConfigError: If the run directory holds a different configuration
            StageError: If a stage fails; earlier stages stay committed
        """
        if until not in STAGES:
            raise ValueError(f"unknown stage {until!r}; options: {', '.join(STAGES)}")
        self._check_config_snapshot()
        self.run_dir.rollback()
        completed = set(self.run_dir.completed_stages())
        for stage in STAGES[: STAGES.index(until) + 1]:
            handler = stage.replace("-", "_")
            with run_context(stage=stage, run=self.run_dir.root.name, seed=self.seed):
                if stage in completed:
                    logger.info("Restoring completed stage %s", stage)
                    getattr(self, f"_restore_{handler}")()
                    continue
                logger.info("Running stage %s", stage)
                started = time.perf_counter()
                try:
                    getattr(self, f"_run_{handler}")()
                except ConfigError:
                    raise
                except Exception as exc:  # pylint: disable=broad-exception-caught
                    logger.error("Stage %s failed: %s", stage, exc, exc_info=True)
                    raise StageError(stage, str(exc)) from exc
                self.run_dir.append_timing(stage, time.perf_counter() - started)
                self.run_dir.commit_stage(stage)
        return self.state

    def _check_config_snapshot(self) -> None:
        path = self.run_dir.paths["config_json"]
        current = self.cfg.to_dict()
        if path.exists():
            stored = load_json(path)
            if _jsonable(current) != stored:
                raise ConfigError(f"{self.run_dir.root} was created with a different configuration")
            return
        self.run_dir.write_config(self.cfg)

    def _metrics(self, stage: str, step: int, row: dict[str, float], skip: tuple[str, ...] = ()) -> None:
        self.run_dir.append_metrics(stage, step, {k: v for k, v in row.items() if k not in skip})

    # ------------------------------------------------------------------ collect
    def _load_records(self) -> None:
        if not self._records_given:
            self.state.records = load_or_collect(self.cfg, self.dataset_path, self.seed)
        if not self.state.records:
            raise ValueError("the prior dataset is empty")

    def _run_collect(self) -> None:
        self._load_records()
        self._metrics("collect", 0, summarize_dataset(self.state.records))

    def _restore_collect(self) -> None:
        self._load_records()

    # ------------------------------------------------------------------ representation
    def _new_vqvae(self) -> VQVAE:
        return VQVAE(self.cfg.vqvae, self.cfg.env.image_size, make_stream(self.seed, "vqvae.init"))

    def _run_train_rep(self) -> None:
        cfg = self.cfg
        images = sample_images(self.state.records, cfg.vqvae.num_images, self.seed)
        model, _ = train_vqvae(
            images,
            cfg.vqvae,
            self.seed,
            model=self._new_vqvae(),
            on_epoch=lambda row: self._metrics("train-rep", int(row["epoch"]), row, skip=("epoch",)),
        )
        shown = images[: GRID_SAMPLES + 1]
        self.run_dir.save_grid("reconstruction", np.concatenate([shown, model.reconstruct(shown)]), len(shown))
        self.state.vqvae = model
        self.state.latents = encode_dataset(self.state.records, model)
        if cfg.rl.reward_epsilon > 0:
            epsilon = cfg.rl.reward_epsilon
        else:
            epsilon = calibrate_epsilon(
                self.state.latents, make_stream(self.seed, "epsilon"), cfg.rl.epsilon_percentile
            )
        self.state.epsilon = epsilon
        self._metrics(
            "train-rep", cfg.vqvae.epochs, {"recon_mse_clean": reconstruction_mse(model, images), "epsilon": epsilon}
        )
        save_checkpoint(
            self.run_dir.checkpoint_path("train-rep"),
            modules={"vqvae": model},
            meta={"epsilon": epsilon, "architecture": model.architecture()},
        )

    def _restore_train_rep(self) -> None:
        checkpoint = load_checkpoint(self.run_dir.checkpoint_path("train-rep"))
        model = self._new_vqvae()
        checkpoint.restore_module("vqvae", model)
        self.state.vqvae = model
        self.state.epsilon = float(checkpoint.meta["epsilon"])
        self.state.latents = encode_dataset(self.state.records, model)

    # ------------------------------------------------------------------ affordance
    def _new_affordance(self) -> AffordanceModel:
        vqvae = self.state.vqvae
        return AffordanceModel(
            self.cfg.pixelcnn,
            vqvae.codebook.data,
            latent_grid_size(self.cfg.env.image_size),
            make_stream(self.seed, "affordance.init"),
        )

    def _run_train_affordance(self) -> None:
        cfg = self.cfg
        pairs = build_pairs(
            self.state.latents,
            cfg.data.pairs_per_trajectory,
            make_stream(self.seed, "affordance.pairs"),
            cfg.data.pair_mode,
        )
        train, validation = split_by_trajectory(
            pairs, cfg.data.validation_fraction, make_stream(self.seed, "affordance.split")
        )
        model, _ = train_affordance(
            train,
            cfg.pixelcnn,
            self.state.vqvae.codebook.data,
            self.seed,
            validation=validation,
            on_epoch=lambda row: self._metrics("train-affordance", int(row["epoch"]), row, skip=("epoch",)),
        )
        self.state.affordance = model
        grid = affordance_sample_grid(
            self.state.vqvae,
            model,
            self.state.records[0].images[0],
            GRID_SAMPLES,
            make_stream(self.seed, "affordance.samples"),
            cfg.pixelcnn.temperature,
        )
        self.run_dir.save_grid("affordance_samples", grid)
        save_checkpoint(
            self.run_dir.checkpoint_path("train-affordance"),
            modules={"affordance": model},
            meta={"architecture": model.architecture()},
        )

    def _restore_train_affordance(self) -> None:
        checkpoint = load_checkpoint(self.run_dir.checkpoint_path("train-affordance"))
        model = self._new_affordance()
        checkpoint.restore_module("affordance", model)
        self.state.affordance = model

    # ------------------------------------------------------------------ reinforcement learning
    def _prepare_evaluation(self) -> None:
        if self.state.goal_set is not None:
            return
        cfg = self.cfg
        spec = sample_test_environment(cfg.seeds.test_environment, cfg.eval.task, cfg.env)
        goals = build_goal_set(spec, cfg.eval.task, cfg.eval.goal_set_size, cfg.seeds.test_environment, cfg.env)
        self.state.test_spec = spec
        self.state.goal_set = encode_goals(goals, self.state.vqvae)

    def _prepare_buffer(self) -> None:
        cfg, state = self.cfg, self.state
        temperature = cfg.pixelcnn.temperature
        state.buffer = ReplayBuffer(cfg.rl.replay_capacity, SparseReward(state.epsilon))
        banks = goal_banks(state.affordance, state.latents, cfg.rl.affordance_bank_size, self.seed, temperature)
        fill_buffer(state.buffer, state.latents, banks)
        state.relabeler = Relabeler(
            relabel_mixture(cfg.rl), state.epsilon, affordance_goal_sampler(state.affordance, temperature)
        )

    def _new_nets(self) -> ActorCritic:
        return ActorCritic.create(self.state.vqvae.latent_dim, ACTION_DIM, self.cfg.rl, self.seed)

    def _restore_nets(self, stage: str) -> dict[str, Any]:
        checkpoint = load_checkpoint(self.run_dir.checkpoint_path(stage))
        nets = self._new_nets()
        for name, module in nets.modules().items():
            checkpoint.restore_module(name, module)
        nets.policy_optimizer.state = checkpoint.restore_optimizer("policy")
        nets.q_optimizer.state = checkpoint.restore_optimizer("q")
        self.state.nets = nets
        return checkpoint.meta

    def _save_nets(self, stage: str, meta: dict[str, Any]) -> None:
        nets = self.state.nets
        save_checkpoint(
            self.run_dir.checkpoint_path(stage),
            modules=nets.modules(),
            optimizers=nets.optimizer_states(),
            meta=meta,
        )

    def evaluate_nets(self, nets: ActorCritic) -> EvalResult:
        self._prepare_evaluation()
        return evaluate(
            LatentPolicy(nets.policy),
            self.state.test_spec,
            self.state.goal_set,
            self.cfg.eval.episodes,
            self.state.vqvae,
            self.cfg.env,
        )

    def _run_pretrain(self) -> None:
        self._prepare_evaluation()
        self._prepare_buffer()
        self.state.nets = self._new_nets()
        offline_pretrain(
            self.state.buffer,
            self.state.nets,
            self.cfg.rl,
            self.state.relabeler,
            self.seed,
            on_row=lambda row: self._metrics("pretrain", int(row["step"]), row, skip=("step",)),
        )
        result = self.evaluate_nets(self.state.nets)
        self.state.offline_success = result.success_rate
        self.run_dir.append_eval("pretrain", result.outcomes)
        self._metrics("pretrain", self.cfg.rl.pretrain_steps, {"success": result.success_rate})
        self._save_nets("pretrain", {"offline_success": result.success_rate})

    def _restore_pretrain(self) -> None:
        self._prepare_evaluation()
        self._prepare_buffer()
        meta = self._restore_nets("pretrain")
        self.state.offline_success = float(meta["offline_success"])

    def _run_finetune(self) -> None:
        cfg, state = self.cfg, self.state
        log = online_finetune(
            state.test_spec,
            state.vqvae,
            state.affordance,
            state.nets,
            state.buffer,
            state.relabeler,
            cfg.rl,
            cfg.env,
            self.seed,
            evaluate_fn=self.evaluate_nets,
            goal_source=cfg.rl.goal_source,
            temperature=cfg.pixelcnn.temperature,
            on_row=lambda row: self._metrics("finetune", int(row["episode"]), row, skip=("episode",)),
        )
        if log.evaluations:
            self._metrics("finetune", 0, {"success": log.evaluations[0][1]})
            state.finetune_success = log.evaluations[-1][1]
        self._save_nets("finetune", {"finetune_success": state.finetune_success})

    def _restore_finetune(self) -> None:
        self._prepare_evaluation()
        meta = self._restore_nets("finetune")
        self.state.finetune_success = meta.get("finetune_success")

    # ------------------------------------------------------------------ evaluation
    def _run_eval(self) -> None:
        result = self.evaluate_nets(self.state.nets)
        self.state.final_success = result.success_rate
        self.run_dir.append_eval("eval", result.outcomes)
        self._metrics("eval", 0, {"success": result.success_rate})
        self.run_dir.write_summary(self.summary())

    def _restore_eval(self) -> None:
        path = self.run_dir.paths["summary_json"]
        if path.exists():
            self.state.final_success = load_json(path).get("final_success")

    def summary(self) -> dict[str, Any]:
        state = self.state
        return {
            "seed": self.seed,
            "task": self.cfg.eval.task,
            "trajectories": len(state.records),
            "epsilon": state.epsilon,
            "offline_success": state.offline_success,
            "finetune_success": state.finetune_success,
            "final_success": state.final_success,
        }


def _jsonable(values: Any) -> Any:
    if isinstance(values, dict):
        return {key: _jsonable(value) for key, value in values.items()}
    if isinstance(values, (list, tuple)):
        return [_jsonable(item) for item in values]
    return values


def run_pipeline(
    cfg: ExperimentConfig,
    out: str | Path,
    until: str = "eval",
    records: Sequence[TrajectoryRecord] | None = None,
    dataset_path: str | Path | None = None,
) -> Pipeline:
    pipeline = Pipeline(cfg, RunDirectory(out), records=records, dataset_path=dataset_path)
    pipeline.run(until)
    return pipeline
