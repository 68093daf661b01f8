"""CLI entry point for the affordance-learning pipeline and its individual stages."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from config import PROFILES, ConfigError, ExperimentConfig, RuntimeConfig, load_experiment_config

# numpy를 처음 import 하기 전에 BLAS 스레드 수를 고정해야 적용됨
RuntimeConfig.apply_thread_cap()

# pylint: disable=wrong-import-position
from autodiff.rng import make_stream  # noqa: E402
from datastore.dataset_file import save_dataset  # noqa: E402
from datastore.errors import DatasetFormatError  # noqa: E402
from deskworld.render import render  # noqa: E402
from deskworld.scenes import prior_scene_seed, reset, sample_environment, sample_test_environment  # noqa: E402
from file_utils import image_grid, write_ppm  # noqa: E402
from harness.collect import collect_dataset, summarize_dataset  # noqa: E402
from harness.pipeline import STAGES, Pipeline, StageError, affordance_sample_grid  # noqa: E402
from harness.run_directory import RunDirectory  # noqa: E402
from harness.sweep import SweepError, run_sweep  # noqa: E402
from logging_setup import setup_logging  # noqa: E402

EXIT_STAGE_FAILURE = 2
EXIT_CONFIG_ERROR = 3
DEFAULT_SIZES = (250, 1000, 4000)


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Experiment TOML (or a config.resolved.json snapshot).")
    common.add_argument("--profile", default="desk", choices=sorted(PROFILES), help="Base profile under --config.")
    common.add_argument("--seed", type=int, help="Run seed; overrides seeds.run.")
    common.add_argument("--out", help="Output path (dataset file for collect, directory otherwise).")
    common.add_argument("--dataset", help="Prior dataset file; overrides data.dataset_path.")

    parser = argparse.ArgumentParser(description="Visual affordance learning experiments at desk scale.")
    commands = parser.add_subparsers(dest="command", required=True)

    collect = commands.add_parser("collect", parents=[common], help="Collect scripted prior trajectories.")
    collect.add_argument("--count", type=int, help="Number of trajectories; overrides data.num_trajectories.")

    for stage in STAGES[1:]:
        commands.add_parser(stage, parents=[common], help=f"Run the pipeline through the {stage} stage.")
    commands.add_parser("pipeline", parents=[common], help="Run every stage and print the summary.")

    sample = commands.add_parser("sample", parents=[common], help="Dump affordance samples for a test scene.")
    sample.add_argument("--count", type=int, default=8, help="Goal samples per conditioning frame.")
    sample.add_argument("--temperature", type=float, help="Sampling temperature; overrides pixelcnn.temperature.")

    sweep = commands.add_parser("sweep", parents=[common], help="Prior-data scaling sweep.")
    sweep.add_argument("--sizes", type=int, nargs="+", default=list(DEFAULT_SIZES), help="Ascending subset sizes.")
    sweep.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4], help="Run seeds per size.")
    sweep.add_argument("--workers", type=int, help="Parallel runs; defaults to VAL_THREADS.")

    render_cmd = commands.add_parser("render", parents=[common], help="Render prior scenes to PPM.")
    render_cmd.add_argument("--count", type=int, default=8, help="Number of scenes.")
    return parser.parse_args(argv)


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_experiment_config(args.config, profile=args.profile)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.dataset:
        cfg.data.dataset_path = args.dataset
    return cfg


def _run_dir(args: argparse.Namespace, cfg: ExperimentConfig) -> Path:
    if args.out:
        return Path(args.out)
    name = Path(args.config).stem if args.config else args.profile
    return Path(RuntimeConfig.OUTPUT_ROOT) / name / f"seed-{cfg.seeds.run}"


def _cmd_collect(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    records = collect_dataset(cfg, cfg.seeds.run, args.count)
    path = save_dataset(records, args.out or cfg.data.dataset_path)
    summary = summarize_dataset(records)
    print(f"dataset={path}")
    print(f"trajectories={int(summary['trajectories'])} transitions={int(summary['transitions'])}")
    print(
        "interactable_freq "
        + " ".join(f"{key[5:]}={value:.3f}" for key, value in summary.items() if key.startswith("freq_"))
    )
    return 0


def _print_summary(summary: dict) -> None:
    def pct(value: float | None) -> str:
        return "n/a" if value is None else f"{100.0 * value:.1f}%"

    print(f"task={summary['task']} seed={summary['seed']} trajectories={summary['trajectories']}")
    print(f"offline_success={pct(summary['offline_success'])}")
    print(f"finetune_success={pct(summary['finetune_success'])}")
    print(f"final_success={pct(summary['final_success'])}")


def _cmd_stage(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    until = "eval" if args.command == "pipeline" else args.command
    run_dir = RunDirectory(_run_dir(args, cfg))
    setup_logging(log_file=run_dir.paths["log_file"])
    pipeline = Pipeline(cfg, run_dir)
    pipeline.run(until)
    print(f"run_dir={run_dir.root}")
    if until == "eval":
        _print_summary(pipeline.summary())
    return 0


def _cmd_sample(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    run_dir = RunDirectory(_run_dir(args, cfg))
    pipeline = Pipeline(cfg, run_dir)
    pipeline.run("train-affordance")
    temperature = args.temperature if args.temperature is not None else cfg.pixelcnn.temperature
    spec = sample_test_environment(cfg.seeds.test_environment, cfg.eval.task, cfg.env)
    image = render(spec, reset(spec, cfg.seeds.run), cfg.env)
    grid = affordance_sample_grid(
        pipeline.state.vqvae,
        pipeline.state.affordance,
        image,
        args.count,
        make_stream(cfg.seeds.run, "cli.sample"),
        temperature,
    )
    path = run_dir.save_grid(f"affordance_seed-{cfg.seeds.run}_t-{temperature:g}", grid)
    print(f"samples={path}")
    return 0


def _cmd_sweep(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    out = _run_dir(args, cfg) if args.out else Path(RuntimeConfig.OUTPUT_ROOT) / "sweep"
    frame = run_sweep(cfg, cfg.data.dataset_path, args.sizes, args.seeds, out, args.workers)
    final = frame.sort_values("episode").groupby(["size", "seed"]).tail(1)
    for size, group in final.groupby("size"):
        print(f"size={size} runs={len(group)} final_success_mean={group['success'].mean():.3f}")
    print(f"sweep_csv={out / 'sweep.csv'}")
    return 0


def _cmd_render(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    out = Path(args.out or Path(RuntimeConfig.OUTPUT_ROOT) / "render")
    frames = []
    for index in range(args.count):
        scene_seed = prior_scene_seed(cfg.seeds.run, index)
        spec = sample_environment(scene_seed, cfg.env)
        frames.append(render(spec, reset(spec, scene_seed), cfg.env))
    path = write_ppm(image_grid(frames, columns=min(args.count, 4)), out / f"scenes_seed-{cfg.seeds.run}.ppm")
    print(f"render={path}")
    return 0


COMMANDS = {
    "collect": _cmd_collect,
    "sample": _cmd_sample,
    "sweep": _cmd_sweep,
    "render": _cmd_render,
}


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    try:
        cfg = _load_config(args)
        handler = COMMANDS.get(args.command, _cmd_stage)
        return handler(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except StageError as exc:
        print(f"[{exc.stage}] {exc}", file=sys.stderr)
        return EXIT_STAGE_FAILURE
    except (SweepError, DatasetFormatError, OSError) as exc:
        print(f"[{args.command}] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
