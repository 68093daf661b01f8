"""Tests for the run directory, dataset collection helpers and sweep subsets."""

from __future__ import annotations

import unittest
from dataclasses import dataclass

import numpy as np
import pytest

from config import EnvConfig, make_profile
from file_utils import load_json
from harness.collect import collect_dataset, summarize_dataset
from harness.pipeline import STAGES, Pipeline, StageError
from harness.run_directory import METRICS_COLUMNS, RunDirectory, read_csv
from harness.sweep import SweepError, curve_rows, subset_indices


@dataclass
class _Outcome:
    episode: int
    goal_index: int
    reset_seed: int
    success: bool


@pytest.fixture()
def run_dir(tmp_path) -> RunDirectory:
    return RunDirectory(tmp_path / "run")


def test_metrics_file_starts_with_schema_line(run_dir) -> None:
    run_dir.append_metrics("train-rep", 0, {"recon_mse": 0.5, "vq_loss": 0.1})
    run_dir.append_metrics("train-rep", 1, {"recon_mse": 0.25})

    lines = run_dir.paths["metrics_csv"].read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# schema: " + ",".join(METRICS_COLUMNS)
    assert lines[1] == ",".join(METRICS_COLUMNS)
    frame = run_dir.metrics()
    assert list(frame["metric"]) == ["recon_mse", "vq_loss", "recon_mse"]
    assert list(frame["step"]) == [0, 0, 1]


def test_empty_metric_row_writes_nothing(run_dir) -> None:
    run_dir.append_metrics("collect", 0, {})
    assert not run_dir.paths["metrics_csv"].exists()
    assert run_dir.metrics().empty


def test_rollback_drops_uncommitted_rows(run_dir) -> None:
    run_dir.append_metrics("collect", 0, {"trajectories": 6.0})
    run_dir.commit_stage("collect")
    run_dir.append_metrics("train-rep", 0, {"recon_mse": 0.5})
    run_dir.append_eval("pretrain", [_Outcome(0, 0, 11, True)])

    run_dir.rollback()

    assert list(run_dir.metrics()["stage"]) == ["collect"]
    assert run_dir.evaluations().empty
    assert run_dir.completed_stages() == ["collect"]
    stages = load_json(run_dir.paths["stages_json"])
    assert stages == {"completed": ["collect"], "metric_rows": 1, "eval_rows": 0}


def test_commit_is_idempotent(run_dir) -> None:
    run_dir.commit_stage("collect")
    run_dir.commit_stage("collect")
    assert run_dir.completed_stages() == ["collect"]


def test_fresh_directory_has_no_stages(run_dir) -> None:
    assert run_dir.completed_stages() == []
    run_dir.rollback()
    assert not run_dir.root.exists()


def test_eval_rows_store_success_as_int(run_dir) -> None:
    run_dir.append_eval("eval", [_Outcome(0, 0, 11, True), _Outcome(1, 1, 12, False)])
    frame = run_dir.evaluations()
    assert list(frame["success"]) == [1, 0]
    assert list(frame["reset_seed"]) == [11, 12]


def test_summary_normalizes_non_finite_values(run_dir) -> None:
    run_dir.write_summary({"final_success": float("nan"), "epsilon": float("inf"), "curve": [0.5, float("-inf")]})
    summary = load_json(run_dir.paths["summary_json"])
    assert summary == {"final_success": "nan", "epsilon": "inf", "curve": [0.5, "-inf"]}


def test_timings_live_apart_from_metrics(run_dir) -> None:
    run_dir.append_timing("collect", 1.23456)
    assert read_csv(run_dir.paths["timings_csv"]).to_dict("records") == [{"stage": "collect", "seconds": 1.235}]
    assert not run_dir.paths["metrics_csv"].exists()


def test_grid_and_checkpoint_paths(run_dir) -> None:
    path = run_dir.save_grid("reconstruction", np.zeros((2, 4, 4, 3), dtype=np.float32))
    assert path == run_dir.paths["samples"] / "reconstruction.ppm"
    assert path.exists()
    assert run_dir.checkpoint_path("pretrain").name == "pretrain.valc"


class TestSubsetIndices(unittest.TestCase):
    def test_subsets_are_nested_and_sorted(self):
        subsets = subset_indices(50, [5, 20, 50], seed=3)
        self.assertEqual([len(subsets[k]) for k in (5, 20, 50)], [5, 20, 50])
        self.assertTrue(set(subsets[5]) <= set(subsets[20]) <= set(subsets[50]))
        np.testing.assert_array_equal(subsets[50], np.arange(50))
        np.testing.assert_array_equal(subsets[20], np.sort(subsets[20]))

    def test_same_seed_same_subsets(self):
        first = subset_indices(40, [10], seed=1)[10]
        np.testing.assert_array_equal(first, subset_indices(40, [10, 30], seed=1)[10])
        self.assertFalse(np.array_equal(first, subset_indices(40, [10], seed=2)[10]))

    def test_invalid_sizes(self):
        for sizes in ([], [20, 10], [0, 5], [10, 60]):
            with self.subTest(sizes=sizes):
                with self.assertRaises(SweepError):
                    subset_indices(50, sizes, seed=0)


def test_curve_rows_read_finetune_success(run_dir) -> None:
    run_dir.append_metrics("pretrain", 3, {"success": 0.1})
    run_dir.append_metrics("finetune", 2, {"success": 0.5, "q_loss": 1.0})
    run_dir.append_metrics("finetune", 0, {"success": 0.0})

    rows = curve_rows(run_dir, size=250, seed=1)

    assert rows == [
        {"size": 250, "seed": 1, "episode": 0, "success": 0.0},
        {"size": 250, "seed": 1, "episode": 2, "success": 0.5},
    ]


class TestCollection(unittest.TestCase):
    def setUp(self):
        self.cfg = make_profile("desk")
        self.cfg.env = EnvConfig(image_size=16, horizon=3)

    def test_collection_is_reproducible(self):
        first = collect_dataset(self.cfg, seed=5, count=3)
        second = collect_dataset(self.cfg, seed=5, count=3)
        self.assertEqual(len(first), 3)
        for a, b in zip(first, second):
            self.assertTrue(a.same_as(b))
        self.assertFalse(first[0].same_as(collect_dataset(self.cfg, seed=6, count=1)[0]))

    def test_summary_counts(self):
        records = collect_dataset(self.cfg, seed=0, count=4)
        summary = summarize_dataset(records)
        self.assertEqual(summary["trajectories"], 4.0)
        self.assertEqual(summary["transitions"], 12.0)
        for name in ("drawer", "button", "object"):
            self.assertGreaterEqual(summary[f"freq_{name}"], 0.0)
            self.assertLessEqual(summary[f"freq_{name}"], 1.0)

    def test_empty_summary(self):
        summary = summarize_dataset([])
        self.assertEqual(summary["trajectories"], 0.0)
        self.assertEqual(summary["freq_drawer"], 0.0)


def test_pipeline_rejects_unknown_stage(tmp_path, tiny_config) -> None:
    with pytest.raises(ValueError):
        Pipeline(tiny_config, RunDirectory(tmp_path / "run"), records=[]).run("deploy")
    assert not (tmp_path / "run").exists()


def test_empty_prior_dataset_fails_collect_stage(tmp_path, tiny_config) -> None:
    run_dir = RunDirectory(tmp_path / "run")
    with pytest.raises(StageError) as info:
        Pipeline(tiny_config, run_dir, records=[]).run("collect")
    assert info.value.stage == "collect"
    assert run_dir.completed_stages() == []
    assert run_dir.paths["config_json"].exists()


def test_stage_order() -> None:
    assert STAGES == ("collect", "train-rep", "train-affordance", "pretrain", "finetune", "eval")
