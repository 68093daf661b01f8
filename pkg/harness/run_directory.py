"""
run_directory.py

Layout and writers for one run directory (one experiment and seed).

Artifacts:
    config.resolved.json   fully resolved experiment configuration
    metrics.csv            append-only (stage, step, metric, value) rows
    eval.csv               (stage, episode, goal_index, reset_seed, success) rows
    timings.csv            wall-clock seconds per stage, kept apart so metrics stay reproducible
    stages.json            completed stages and the committed row counts
    summary.json           headline success rates
    checkpoints/<stage>.valc
    samples/*.ppm
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Any, Iterable

import pandas as pd

from config import ExperimentConfig
from file_utils import image_grid, load_json, save_json, write_ppm

logger = logging.getLogger(__name__)

METRICS_COLUMNS = ["stage", "step", "metric", "value"]
EVAL_COLUMNS = ["stage", "episode", "goal_index", "reset_seed", "success"]
TIMINGS_COLUMNS = ["stage", "seconds"]


def _normalize_non_finite(value: Any) -> Any:
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if isinstance(value, dict):
        return {key: _normalize_non_finite(inner) for key, inner in value.items()}
    if isinstance(value, (list, tuple)):
        return [_normalize_non_finite(item) for item in value]
    return value


def build_run_paths(root: str | Path) -> dict[str, Path]:
    """Return deterministic output paths inside a run directory."""
    run_dir = Path(root)
    return {
        "run_dir": run_dir,
        "config_json": run_dir / "config.resolved.json",
        "metrics_csv": run_dir / "metrics.csv",
        "eval_csv": run_dir / "eval.csv",
        "timings_csv": run_dir / "timings.csv",
        "stages_json": run_dir / "stages.json",
        "summary_json": run_dir / "summary.json",
        "checkpoints": run_dir / "checkpoints",
        "samples": run_dir / "samples",
        "log_file": run_dir / "logs" / "run.jsonl",
    }


def write_csv(frame: pd.DataFrame, path: Path, columns: list[str], append: bool) -> None:
    if append and path.exists():
        frame.to_csv(path, mode="a", header=False, index=False, columns=columns)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(f"# schema: {','.join(columns)}\n")
        frame.to_csv(handle, index=False, columns=columns)


def read_csv(path: str | Path) -> pd.DataFrame:
    """Read a run CSV, skipping its schema comment line."""
    return pd.read_csv(path, comment="#")


class RunDirectory:
    """
    Writers for the artifacts of one run.

    Metric and evaluation rows are committed per stage: ``commit_stage`` records
    how many rows belong to finished stages, and ``rollback`` drops anything a
    failed or interrupted stage appended after that.
    """

    def __init__(self, root: str | Path):
        self.paths = build_run_paths(root)
        self.root = self.paths["run_dir"]

    # ------------------------------------------------------------------ stage bookkeeping
    def load_stages(self) -> dict[str, Any]:
        path = self.paths["stages_json"]
        if not path.exists():
            return {"completed": [], "metric_rows": 0, "eval_rows": 0}
        return load_json(path)

    def completed_stages(self) -> list[str]:
        return list(self.load_stages()["completed"])

    def commit_stage(self, stage: str) -> None:
        state = self.load_stages()
        if stage not in state["completed"]:
            state["completed"].append(stage)
        state["metric_rows"] = self._row_count(self.paths["metrics_csv"])
        state["eval_rows"] = self._row_count(self.paths["eval_csv"])
        save_json(state, self.paths["stages_json"])

    def rollback(self) -> None:
        """Truncate metrics and evaluation rows to what completed stages committed."""
        state = self.load_stages()
        self._truncate(self.paths["metrics_csv"], METRICS_COLUMNS, state["metric_rows"])
        self._truncate(self.paths["eval_csv"], EVAL_COLUMNS, state["eval_rows"])

    @staticmethod
    def _row_count(path: Path) -> int:
        return len(read_csv(path)) if path.exists() else 0

    @staticmethod
    def _truncate(path: Path, columns: list[str], rows: int) -> None:
        if not path.exists():
            return
        frame = read_csv(path)
        if len(frame) > rows:
            logger.info("Dropping %d uncommitted rows from %s", len(frame) - rows, path.name)
            write_csv(frame.iloc[:rows], path, columns, append=False)

    # ------------------------------------------------------------------ writers
    def write_config(self, cfg: ExperimentConfig) -> Path:
        save_json(cfg.to_dict(), self.paths["config_json"])
        return self.paths["config_json"]

    def append_metrics(self, stage: str, step: int, values: dict[str, float]) -> None:
        rows = [{"stage": stage, "step": int(step), "metric": key, "value": float(v)} for key, v in values.items()]
        if rows:
            write_csv(pd.DataFrame(rows), self.paths["metrics_csv"], METRICS_COLUMNS, append=True)

    def append_eval(self, stage: str, outcomes: Iterable[Any]) -> None:
        rows = [
            {
                "stage": stage,
                "episode": o.episode,
                "goal_index": o.goal_index,
                "reset_seed": o.reset_seed,
                "success": int(o.success),
            }
            for o in outcomes
        ]
        write_csv(pd.DataFrame(rows, columns=EVAL_COLUMNS), self.paths["eval_csv"], EVAL_COLUMNS, append=True)

    def append_timing(self, stage: str, seconds: float) -> None:
        frame = pd.DataFrame([{"stage": stage, "seconds": round(float(seconds), 3)}])
        write_csv(frame, self.paths["timings_csv"], TIMINGS_COLUMNS, append=True)

    def write_summary(self, summary: dict[str, Any]) -> Path:
        save_json(_normalize_non_finite(summary), self.paths["summary_json"])
        return self.paths["summary_json"]

    def checkpoint_path(self, stage: str) -> Path:
        return self.paths["checkpoints"] / f"{stage}.valc"

    def save_grid(self, name: str, images: Any, columns: int | None = None) -> Path:
        return write_ppm(image_grid(images, columns), self.paths["samples"] / f"{name}.ppm")

    def metrics(self) -> pd.DataFrame:
        path = self.paths["metrics_csv"]
        return read_csv(path) if path.exists() else pd.DataFrame(columns=METRICS_COLUMNS)

    def evaluations(self) -> pd.DataFrame:
        path = self.paths["eval_csv"]
        return read_csv(path) if path.exists() else pd.DataFrame(columns=EVAL_COLUMNS)
