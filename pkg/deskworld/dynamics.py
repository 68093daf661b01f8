"""
dynamics.py

Deterministic one-step transition of the desk.

Step order: clamp action, toggle height (and register button presses), apply
the gripper command, grasp or release, then move the gripper (dragging the
drawer when it holds the handle). A held object always sits at the gripper.
"""

from __future__ import annotations

import math
from typing import Any

import numpy as np

from config import EnvConfig
from deskworld.models import EnvState, SceneContractError, SceneSpec, clamp_action, f32


def handle_position(spec: SceneSpec, extension: float, env: EnvConfig) -> tuple[float, float]:
    hx, hy = spec.drawer_handle
    return (hx + spec.drawer_orientation * extension * env.drawer_travel, hy)


def _distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def holds_handle(spec: SceneSpec, state: EnvState, env: EnvConfig) -> bool:
    """Low, closed, empty gripper within grasp radius of the drawer handle."""
    if not spec.drawer_present or state.gripper_high or state.aperture > 0.0 or state.held:
        return False
    return _distance(state.gripper, handle_position(spec, state.drawer_extension, env)) <= env.grasp_radius


def step(spec: SceneSpec, state: EnvState, action: Any, env: EnvConfig | None = None) -> EnvState:
    """
    Advance ``state`` by one action ``(vx, vy, vh, grip)``.

    Raises:
        SceneContractError: If ``state`` was not produced for ``spec``
    """
    env = env or EnvConfig()
    if state.spec_seed != spec.seed:
        raise SceneContractError(f"state of scene {state.spec_seed} stepped in scene {spec.seed}")
    vx, vy, vh, grip = (float(a) for a in clamp_action(action))

    gripper_high = state.gripper_high
    button_open = state.button_drawer_open
    if vh > 0.5:
        gripper_high = not gripper_high
        # 버튼은 높이가 high→low로 바뀌는 순간에만 눌림
        if (
            not gripper_high
            and spec.button_drawer_present
            and _distance(state.gripper, spec.button_position) <= env.button_radius
        ):
            button_open = 1 - button_open

    aperture = state.aperture
    if grip > 0.0:
        aperture = 0.0
    elif grip < 0.0:
        aperture = 1.0

    held = state.held
    object_position = state.object_position
    closing = state.aperture > 0.0 and aperture == 0.0
    opening = state.aperture == 0.0 and aperture > 0.0
    if (
        closing
        and not gripper_high
        and spec.object_present
        and _distance(state.gripper, object_position) <= env.grasp_radius
    ):
        held = True
    if opening:
        held = False

    interim = state.evolve(gripper_high=gripper_high, aperture=aperture, held=held)
    extension = state.drawer_extension
    gx, gy = state.gripper
    if holds_handle(spec, interim, env):
        before = handle_position(spec, extension, env)[0]
        extension = float(np.clip(extension + spec.drawer_orientation * vx * env.velocity_scale, 0.0, 1.0))
        after = handle_position(spec, extension, env)[0]
        gx = gx + (after - before)
        gy = gy + vy * env.velocity_scale
    else:
        gx = gx + vx * env.velocity_scale
        gy = gy + vy * env.velocity_scale
    gripper = (f32(np.clip(gx, 0.0, 1.0)), f32(np.clip(gy, 0.0, 1.0)))
    if held:
        object_position = gripper

    return EnvState(
        spec_seed=state.spec_seed,
        gripper=gripper,
        gripper_high=gripper_high,
        aperture=aperture,
        drawer_extension=f32(extension),
        button_drawer_open=button_open,
        object_position=object_position,
        held=held,
        t=state.t + 1,
    )
