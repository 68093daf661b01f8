"""
scenes.py

Scene sampling, episode resets and the evaluation task catalog.

Prior-data scenes and test scenes use disjoint seed ranges: prior scene seeds
lie below ``TEST_SEED_BASE`` and test scene seeds at or above it.
"""

from __future__ import annotations

import logging

import numpy as np

from autodiff.rng import make_stream
from config import EnvConfig
from deskworld.models import EnvState, SceneContractError, SceneSpec, Task, f32

logger = logging.getLogger(__name__)

TEST_SEED_BASE = 1 << 30
MIN_SEPARATION = 0.16
INTERACTABLE_COUNT = 3
MAX_LAYOUT_TRIES = 10_000
MAX_TEST_TRIES = 10_000


def adjusted_presence_prob(target: float, count: int = INTERACTABLE_COUNT) -> float:
    """
    Per-interactable draw probability q so that, after re-drawing scenes with
    nothing present, each interactable's marginal presence equals ``target``.

    Solves ``q = target * (1 - (1 - q) ** count)`` by fixed-point iteration.
    """
    if target >= 1.0:
        return 1.0
    q = target
    for _ in range(500):
        q = target * (1.0 - (1.0 - q) ** count)
    return q


def _point(rng: np.random.Generator, low: float, high: float, low_y: float | None = None,
           high_y: float | None = None) -> tuple[float, float]:
    x = rng.uniform(low, high)
    y = rng.uniform(low if low_y is None else low_y, high if high_y is None else high_y)
    return (f32(x), f32(y))


def _separated(groups: list[list[tuple[float, float]]]) -> bool:
    for i, group_a in enumerate(groups):
        for group_b in groups[i + 1 :]:
            for a in group_a:
                for b in group_b:
                    if np.hypot(a[0] - b[0], a[1] - b[1]) < MIN_SEPARATION:
                        return False
    return True


def sample_environment(seed: int, env: EnvConfig | None = None) -> SceneSpec:
    """
    Sample a scene deterministically from ``seed``.

    Each interactable (drawer, button drawer, object) is present with marginal
    probability ``env.presence_prob`` after re-drawing empty scenes. The tray is
    present independently with the same probability.
    """
    env = env or EnvConfig()
    rng = make_stream(seed, "scene")
    q = adjusted_presence_prob(env.presence_prob)
    while True:
        flags = rng.random(INTERACTABLE_COUNT) < q
        if flags.any():
            break
    drawer_present, button_present, object_present = (bool(f) for f in flags)
    tray_present = bool(rng.random() < env.presence_prob)
    orientation = 1 if rng.random() < 0.5 else -1
    geometry = int(rng.integers(0, env.geometry_count))
    colors = [tuple(f32(c) for c in rng.uniform(0.15, 1.0, size=3)) for _ in range(3)]

    for _ in range(MAX_LAYOUT_TRIES):
        handle = _point(rng, 0.3, 0.7, 0.15, 0.85)
        button = _point(rng, 0.1, 0.9)
        obj = _point(rng, 0.1, 0.9)
        tray = _point(rng, 0.15, 0.85)
        groups = []
        if drawer_present:
            groups.append([
                handle,
                (handle[0] + orientation * env.drawer_travel, handle[1]),
                (handle[0] - orientation * 0.1, handle[1]),
            ])
        if button_present:
            box_y = button[1] + 0.12 if button[1] < 0.7 else button[1] - 0.12
            groups.append([button, (button[0], box_y)])
        if object_present:
            groups.append([obj])
        if tray_present:
            groups.append([tray])
        if _separated(groups):
            break
    else:
        raise SceneContractError(f"scene {seed}: no valid layout after {MAX_LAYOUT_TRIES} tries")

    return SceneSpec(
        seed=int(seed),
        drawer_present=drawer_present,
        drawer_handle=handle,
        drawer_color=colors[0],
        drawer_orientation=orientation,
        button_drawer_present=button_present,
        button_position=button,
        button_color=colors[1],
        object_present=object_present,
        object_geometry=geometry,
        object_color=colors[2],
        object_position=obj,
        tray_present=tray_present,
        tray_position=tray,
        geometry_count=env.geometry_count,
    )


def prior_scene_seed(collect_seed: int, index: int) -> int:
    """Scene seed for prior trajectory ``index``; always below ``TEST_SEED_BASE``."""
    return (int(collect_seed) * 1_000_003 + int(index)) % TEST_SEED_BASE


def task_feasible(spec: SceneSpec, task: Task | str) -> bool:
    task = Task(task)
    if task in (Task.OPEN_DRAWER, Task.CLOSE_DRAWER):
        return spec.drawer_present
    if task is Task.TOGGLE_BUTTON_DRAWER:
        return spec.button_drawer_present
    if task is Task.GRASP_OBJECT:
        return spec.object_present
    return spec.object_present and spec.tray_present


def sample_test_environment(seed: int, task: Task | str, env: EnvConfig | None = None) -> SceneSpec:
    """
    Draw test scenes from the held-out seed range until ``task`` is feasible.

    Raises:
        SceneContractError: If no feasible scene turns up
    """
    task = Task(task)
    for attempt in range(MAX_TEST_TRIES):
        spec_seed = TEST_SEED_BASE + (int(seed) * MAX_TEST_TRIES + attempt) % TEST_SEED_BASE
        spec = sample_environment(spec_seed, env)
        if task_feasible(spec, task):
            logger.debug("test scene for %s: seed=%d after %d draws", task, spec_seed, attempt + 1)
            return spec
    raise SceneContractError(f"no feasible scene for task {task} from test seed {seed}")


def reset(spec: SceneSpec, seed: int, task: Task | str | None = None) -> EnvState:
    """
    Initial state for an episode.

    The gripper starts high and open at a random workspace position, and each
    present drawer starts open or closed with equal probability. ``task``
    applies the task's reset override (for example open_drawer starts closed).
    """
    rng = make_stream(seed, "reset", spec.seed)
    gripper = rng.uniform(0.05, 0.95, size=2)
    drawer_open = int(rng.integers(0, 2))
    button_open = int(rng.integers(0, 2))
    state = EnvState(
        spec_seed=spec.seed,
        gripper=(f32(gripper[0]), f32(gripper[1])),
        gripper_high=True,
        aperture=1.0,
        drawer_extension=float(drawer_open) if spec.drawer_present else 0.0,
        button_drawer_open=button_open if spec.button_drawer_present else 0,
        object_position=spec.object_position,
        held=False,
        t=0,
    )
    if task is not None:
        state = apply_task_reset(spec, state, task)
    return state


def apply_task_reset(spec: SceneSpec, state: EnvState, task: Task | str) -> EnvState:
    task = Task(task)
    if not task_feasible(spec, task):
        raise SceneContractError(f"task {task} is not feasible in scene {spec.seed}")
    if task is Task.OPEN_DRAWER:
        return state.evolve(drawer_extension=0.0)
    if task is Task.CLOSE_DRAWER:
        return state.evolve(drawer_extension=1.0)
    if task is Task.TOGGLE_BUTTON_DRAWER:
        return state.evolve(button_drawer_open=0)
    return state
