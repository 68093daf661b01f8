"""
scripted.py

Waypoint controllers for play-data collection and single-task experts.

A script is a queue of phases. Each phase either emits an action or reports
that it is finished, in which case the next phase runs in the same step.
Gripper commands are always explicit (+1 closed, -1 open) so action noise never
flips the gripper.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np

from autodiff.rng import make_stream
from config import EnvConfig
from datastore.records import TrajectoryRecord
from deskworld.dynamics import handle_position, step
from deskworld.models import ACTION_DIM, EnvState, SceneSpec, Task
from deskworld.render import render
from deskworld.scenes import reset

logger = logging.getLogger(__name__)

ARRIVAL_TOLERANCE = 0.015
PHASE_STEP_LIMIT = 40

TargetFn = Callable[[EnvState], tuple[float, float]]


@dataclass(slots=True)
class Phase:
    kind: str
    target: TargetFn | None = None
    value: float = 0.0
    until: Callable[[EnvState], bool] | None = None
    steps: int = 0


class WaypointScript:
    """Runs phases in order; idles with the current grip command once done."""

    def __init__(self, spec: SceneSpec, env: EnvConfig, phases: list[Phase]):
        self.spec = spec
        self.env = env
        self.phases = deque(phases)
        self.grip_command = -1.0

    @property
    def done(self) -> bool:
        return not self.phases

    def _idle(self) -> np.ndarray:
        return np.array([0.0, 0.0, 0.0, self.grip_command], dtype=np.float32)

    def act(self, state: EnvState) -> np.ndarray:
        while self.phases:
            phase = self.phases[0]
            action = self._run_phase(phase, state)
            if action is not None:
                phase.steps += 1
                return action
            self.phases.popleft()
        return self._idle()

    def _run_phase(self, phase: Phase, state: EnvState) -> np.ndarray | None:
        if phase.steps >= PHASE_STEP_LIMIT:
            return None
        if phase.kind == "grip":
            self.grip_command = phase.value
            want_closed = phase.value > 0
            if (state.aperture == 0.0) == want_closed:
                return None
            return self._idle()
        if phase.kind == "height":
            want_high = phase.value > 0
            if state.gripper_high == want_high:
                return None
            return np.array([0.0, 0.0, 1.0, self.grip_command], dtype=np.float32)
        if phase.kind == "move":
            assert phase.target is not None
            tx, ty = phase.target(state)
            dx, dy = tx - state.gripper[0], ty - state.gripper[1]
            if abs(dx) <= ARRIVAL_TOLERANCE and abs(dy) <= ARRIVAL_TOLERANCE:
                return None
            scale = self.env.velocity_scale
            return np.array(
                [np.clip(dx / scale, -1, 1), np.clip(dy / scale, -1, 1), 0.0, self.grip_command],
                dtype=np.float32,
            )
        if phase.kind == "drag":
            assert phase.until is not None
            if phase.until(state):
                return None
            return np.array([phase.value, 0.0, 0.0, self.grip_command], dtype=np.float32)
        raise ValueError(f"unknown phase kind {phase.kind!r}")


# --------------------------------------------------------------------------- behaviours
def _handle_target(spec: SceneSpec, env: EnvConfig) -> TargetFn:
    return lambda state: handle_position(spec, state.drawer_extension, env)


def drawer_phases(spec: SceneSpec, env: EnvConfig, open_it: bool) -> list[Phase]:
    direction = float(spec.drawer_orientation if open_it else -spec.drawer_orientation)
    until = (lambda s: s.drawer_extension >= 1.0) if open_it else (lambda s: s.drawer_extension <= 0.0)
    return [
        Phase("grip", value=-1.0),
        Phase("height", value=1.0),
        Phase("move", target=_handle_target(spec, env)),
        Phase("height", value=-1.0),
        Phase("grip", value=1.0),
        Phase("drag", value=direction, until=until),
        Phase("grip", value=-1.0),
        Phase("height", value=1.0),
    ]


def button_phases(spec: SceneSpec) -> list[Phase]:
    position = spec.button_position
    return [
        Phase("grip", value=-1.0),
        Phase("height", value=1.0),
        Phase("move", target=lambda _: position),
        Phase("height", value=-1.0),
        Phase("height", value=1.0),
    ]


def grasp_phases(spec: SceneSpec) -> list[Phase]:
    return [
        Phase("grip", value=-1.0),
        Phase("height", value=1.0),
        Phase("move", target=lambda s: s.object_position),
        Phase("height", value=-1.0),
        Phase("grip", value=1.0),
        Phase("height", value=1.0),
    ]


def place_phases(destination: tuple[float, float]) -> list[Phase]:
    return [
        Phase("move", target=lambda _: destination),
        Phase("height", value=-1.0),
        Phase("grip", value=-1.0),
        Phase("height", value=1.0),
    ]


def task_script(spec: SceneSpec, state: EnvState, task: Task | str, env: EnvConfig) -> WaypointScript:
    """Single-task expert for ``task`` from ``state``."""
    task = Task(task)
    if task is Task.OPEN_DRAWER:
        phases = drawer_phases(spec, env, open_it=True)
    elif task is Task.CLOSE_DRAWER:
        phases = drawer_phases(spec, env, open_it=False)
    elif task is Task.TOGGLE_BUTTON_DRAWER:
        phases = button_phases(spec)
    elif task is Task.GRASP_OBJECT:
        phases = grasp_phases(spec)
    else:
        phases = grasp_phases(spec) + place_phases(spec.tray_position)
    return WaypointScript(spec, env, phases)


def play_script(spec: SceneSpec, state: EnvState, rng: np.random.Generator, env: EnvConfig) -> WaypointScript:
    """Visit every present interactable in shuffled order with its canonical behaviour."""
    order = list(spec.interactables())
    rng.shuffle(order)
    relocate = spec.tray_position if spec.tray_present else tuple(float(v) for v in rng.uniform(0.1, 0.9, 2))
    phases: list[Phase] = []
    for name in order:
        if name == "drawer":
            phases += drawer_phases(spec, env, open_it=state.drawer_extension < 0.5)
        elif name == "button":
            phases += button_phases(spec)
        else:
            phases += grasp_phases(spec) + place_phases(relocate)
    return WaypointScript(spec, env, phases)


# --------------------------------------------------------------------------- rollouts
@dataclass(slots=True)
class Rollout:
    """States s_0..s_H, actions a_0..a_{H-1} and images of every state."""

    states: list[EnvState]
    actions: np.ndarray
    images: np.ndarray


def rollout(
    spec: SceneSpec,
    state: EnvState,
    script: WaypointScript,
    horizon: int,
    env: EnvConfig,
    noise_rng: np.random.Generator | None = None,
    noise: float = 0.0,
) -> Rollout:
    states = [state]
    actions = np.zeros((horizon, ACTION_DIM), dtype=np.float32)
    images = np.zeros((horizon + 1, env.image_size, env.image_size, 3), dtype=np.float32)
    images[0] = render(spec, state, env)
    for t in range(horizon):
        action = script.act(state).astype(np.float64)
        if noise_rng is not None and noise > 0:
            action = action + noise_rng.normal(0.0, noise, size=ACTION_DIM)
        action = np.clip(action, -1.0, 1.0).astype(np.float32)
        state = step(spec, state, action, env)
        actions[t] = action
        states.append(state)
        images[t + 1] = render(spec, state, env)
    return Rollout(states=states, actions=actions, images=images)


def scripted_collect(
    spec: SceneSpec, seed: int, horizon: int | None = None, env: EnvConfig | None = None
) -> TrajectoryRecord:
    """
    Collect one play trajectory in ``spec``.

    Returns:
        TrajectoryRecord: H actions, H+1 images and H+1 ground-truth states
    """
    env = env or EnvConfig()
    horizon = env.horizon if horizon is None else horizon
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    state = reset(spec, seed)
    rng = make_stream(seed, "scripted", spec.seed)
    script = play_script(spec, state, rng, env)
    result = rollout(spec, state, script, horizon, env, noise_rng=rng, noise=env.action_noise)
    return TrajectoryRecord.from_rollout(spec, result)


def expert_rollout(
    spec: SceneSpec, seed: int, task: Task | str, env: EnvConfig | None = None, horizon: int | None = None
) -> Rollout:
    """Noise-free single-task expert episode from the task's reset distribution."""
    env = env or EnvConfig()
    horizon = env.horizon if horizon is None else horizon
    state = reset(spec, seed, task=task)
    return rollout(spec, state, task_script(spec, state, task, env), horizon, env)
