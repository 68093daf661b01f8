from __future__ import annotations

from pathlib import Path

import pytest

from datastore.dataset_file import load_dataset
from file_utils import read_ppm
from harness.pipeline import StageError
from harness.sweep import SweepError
from run_affordance import DEFAULT_SIZES, EXIT_CONFIG_ERROR, EXIT_STAGE_FAILURE, _load_config, main, parse_args

TINY_TOML = "[env]\nimage_size = 16\nhorizon = 4\n"


@pytest.fixture()
def tiny_toml(tmp_path: Path) -> Path:
    path = tmp_path / "tiny.toml"
    path.write_text(TINY_TOML, encoding="utf-8")
    return path


class _FakePipeline:
    """Stands in for the pipeline so CLI wiring can be checked without training."""

    error: Exception | None = None
    ran: list[str] = []

    def __init__(self, cfg, run_dir, **_kwargs):
        self.cfg = cfg
        self.run_dir = run_dir

    def run(self, until: str = "eval"):
        if self.error is not None:
            raise self.error
        _FakePipeline.ran.append(until)

    def summary(self) -> dict:
        return {
            "seed": self.cfg.seeds.run,
            "task": self.cfg.eval.task,
            "trajectories": 6,
            "offline_success": None,
            "finetune_success": 0.25,
            "final_success": 0.5,
        }


@pytest.fixture()
def fake_pipeline(monkeypatch):
    _FakePipeline.error = None
    _FakePipeline.ran = []
    monkeypatch.setattr("run_affordance.Pipeline", _FakePipeline)
    monkeypatch.setattr("run_affordance.setup_logging", lambda **_kwargs: {})
    return _FakePipeline


def test_parse_args_maps_collect_values() -> None:
    args = parse_args(["collect", "--count", "3", "--out", "prior.vald", "--seed", "4"])

    assert args.command == "collect"
    assert args.count == 3
    assert args.out == "prior.vald"
    assert args.seed == 4
    assert args.profile == "desk"
    assert args.config is None


def test_parse_args_stage_and_sweep_defaults() -> None:
    assert parse_args(["pretrain", "--profile", "paper"]).profile == "paper"

    sweep = parse_args(["sweep"])
    assert sweep.sizes == list(DEFAULT_SIZES)
    assert sweep.seeds == [0, 1, 2, 3, 4]


def test_paper_profile_resolves_full_scale_values() -> None:
    args = parse_args(["collect", "--profile", "paper"])

    cfg = _load_config(args)

    assert args.profile == "paper"
    assert cfg.data.num_trajectories == 8000
    assert cfg.vqvae.codebook_size == 512
    assert cfg.pixelcnn.layers == 15
    assert cfg.rl.batch_size == 1024


def test_parse_args_rejects_unknown_profile_and_command() -> None:
    with pytest.raises(SystemExit):
        parse_args(["collect", "--profile", "laptop"])
    with pytest.raises(SystemExit):
        parse_args(["deploy"])


@pytest.mark.error_handling
def test_config_error_exit_code(tmp_path, capsys) -> None:
    bad = tmp_path / "bad.toml"
    bad.write_text("[rl]\ngama = 0.9\n", encoding="utf-8")

    exit_code = main(["collect", "--config", str(bad), "--out", str(tmp_path / "prior.vald")])

    assert exit_code == EXIT_CONFIG_ERROR
    assert "config error" in capsys.readouterr().err
    assert not (tmp_path / "prior.vald").exists()


def test_collect_writes_dataset_and_prints_counts(tmp_path, tiny_toml, capsys) -> None:
    out = tmp_path / "data" / "prior.vald"

    exit_code = main(["collect", "--config", str(tiny_toml), "--count", "2", "--out", str(out)])

    assert exit_code == 0
    records = load_dataset(out)
    assert len(records) == 2
    stdout = capsys.readouterr().out
    assert "trajectories=2 transitions=8" in stdout
    assert "interactable_freq drawer=" in stdout


def test_stage_command_runs_until_that_stage(tmp_path, fake_pipeline, capsys) -> None:
    exit_code = main(["train-affordance", "--out", str(tmp_path / "run")])

    assert exit_code == 0
    assert fake_pipeline.ran == ["train-affordance"]
    assert f"run_dir={tmp_path / 'run'}" in capsys.readouterr().out


def test_pipeline_command_prints_summary(tmp_path, fake_pipeline, capsys) -> None:
    exit_code = main(["pipeline", "--out", str(tmp_path / "run"), "--seed", "3"])

    assert exit_code == 0
    assert fake_pipeline.ran == ["eval"]
    stdout = capsys.readouterr().out
    assert "task=open_drawer seed=3 trajectories=6" in stdout
    assert "offline_success=n/a" in stdout
    assert "finetune_success=25.0%" in stdout
    assert "final_success=50.0%" in stdout


@pytest.mark.error_handling
def test_stage_failure_exit_code(tmp_path, fake_pipeline, capsys) -> None:
    fake_pipeline.error = StageError("pretrain", "replay buffer is empty")

    exit_code = main(["pipeline", "--out", str(tmp_path / "run")])

    assert exit_code == EXIT_STAGE_FAILURE
    assert "[pretrain]" in capsys.readouterr().err


@pytest.mark.error_handling
def test_sweep_error_exit_code(tmp_path, monkeypatch, capsys) -> None:
    def _fail(*_args, **_kwargs):
        raise SweepError("subset size 4000 exceeds the 6 trajectories in the dataset")

    monkeypatch.setattr("run_affordance.run_sweep", _fail)

    exit_code = main(["sweep", "--sizes", "4000", "--out", str(tmp_path / "sweep")])

    assert exit_code == 1
    assert "[sweep]" in capsys.readouterr().err


@pytest.mark.error_handling
def test_missing_dataset_for_sweep_is_reported(tmp_path, capsys) -> None:
    exit_code = main(["sweep", "--dataset", str(tmp_path / "missing.vald"), "--out", str(tmp_path / "sweep")])

    assert exit_code == 1
    assert "missing.vald" in capsys.readouterr().err


def test_render_writes_scene_grid(tmp_path, tiny_toml, capsys) -> None:
    exit_code = main(["render", "--config", str(tiny_toml), "--count", "2", "--out", str(tmp_path / "render")])

    assert exit_code == 0
    path = tmp_path / "render" / "scenes_seed-0.ppm"
    assert f"render={path}" in capsys.readouterr().out
    # 16px 두 장, 1px 여백
    assert read_ppm(path).shape == (18, 35, 3)


@pytest.mark.error_handling
def test_corrupt_dataset_is_reported(tmp_path, capsys) -> None:
    corrupt = tmp_path / "corrupt.vald"
    corrupt.write_bytes(b"nope, not a dataset")

    exit_code = main(["sweep", "--dataset", str(corrupt), "--out", str(tmp_path / "sweep")])

    assert exit_code == 1
    assert "bad magic" in capsys.readouterr().err
