"""Value types for the desk simulator."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from enum import StrEnum
from typing import Any

import numpy as np

Point = tuple[float, float]
Color = tuple[float, float, float]

STATE_FIELDS = (
    "gripper_x",
    "gripper_y",
    "gripper_high",
    "aperture",
    "drawer_extension",
    "button_drawer_open",
    "object_x",
    "object_y",
    "held",
    "t",
)
STATE_DIM = len(STATE_FIELDS)
ACTION_DIM = 4


class SceneContractError(ValueError):
    """Two states or a state and a scene do not belong together."""


class Task(StrEnum):
    """Evaluation tasks with single-task scripted experts."""

    OPEN_DRAWER = "open_drawer"
    CLOSE_DRAWER = "close_drawer"
    TOGGLE_BUTTON_DRAWER = "toggle_button_drawer"
    GRASP_OBJECT = "grasp_object"
    PLACE_IN_TRAY = "place_in_tray"


def f32(value: float) -> float:
    """Round to the nearest float32 and return it as a python float."""
    return float(np.float32(value))


@dataclass(slots=True, frozen=True)
# 씬 파라미터는 평면 구조로 유지 (직렬화 단순화)
# pylint: disable=too-many-instance-attributes
class SceneSpec:
    """
    Parametric description of one sampled desk.

    Positions are in the unit workspace. ``drawer_handle`` is the handle position
    with the drawer closed; the handle moves along x by
    ``drawer_orientation * extension * drawer_travel``.
    """

    seed: int
    drawer_present: bool
    drawer_handle: Point
    drawer_color: Color
    drawer_orientation: int
    button_drawer_present: bool
    button_position: Point
    button_color: Color
    object_present: bool
    object_geometry: int
    object_color: Color
    object_position: Point
    tray_present: bool
    tray_position: Point
    geometry_count: int = 84

    def __post_init__(self) -> None:
        if not (self.drawer_present or self.button_drawer_present or self.object_present):
            raise SceneContractError(f"scene {self.seed}: no interactable present")
        if self.drawer_orientation not in (-1, 1):
            raise SceneContractError(f"scene {self.seed}: drawer_orientation must be -1 or +1")
        if not 0 <= self.object_geometry < self.geometry_count:
            raise SceneContractError(
                f"scene {self.seed}: geometry {self.object_geometry} outside [0, {self.geometry_count})"
            )
        for name in ("drawer_handle", "button_position", "object_position", "tray_position"):
            x, y = getattr(self, name)
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                raise SceneContractError(f"scene {self.seed}: {name} {x, y} outside the workspace")
        for name in ("drawer_color", "button_color", "object_color"):
            if any(not 0.0 <= c <= 1.0 for c in getattr(self, name)):
                raise SceneContractError(f"scene {self.seed}: {name} outside [0, 1]")

    @property
    def button_drawer_box(self) -> Point:
        """Centre of the button-operated drawer body, drawn beside its button."""
        x, y = self.button_position
        return (x, f32(y + 0.12 if y < 0.7 else y - 0.12))

    def interactables(self) -> list[str]:
        present = []
        if self.drawer_present:
            present.append("drawer")
        if self.button_drawer_present:
            present.append("button")
        if self.object_present:
            present.append("object")
        return present

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: dict[str, Any]) -> "SceneSpec":
        data = dict(values)
        for key in ("drawer_handle", "drawer_color", "button_position", "button_color",
                    "object_color", "object_position", "tray_position"):
            data[key] = tuple(float(v) for v in data[key])
        return cls(**data)


@dataclass(slots=True, frozen=True)
class EnvState:
    """
    Physical state of one desk at step ``t``.

    ``aperture`` is 1.0 when the gripper is open and 0.0 when closed.
    """

    spec_seed: int
    gripper: Point
    gripper_high: bool
    aperture: float
    drawer_extension: float
    button_drawer_open: int
    object_position: Point
    held: bool
    t: int = 0

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.gripper[0],
                self.gripper[1],
                float(self.gripper_high),
                self.aperture,
                self.drawer_extension,
                float(self.button_drawer_open),
                self.object_position[0],
                self.object_position[1],
                float(self.held),
                float(self.t),
            ],
            dtype=np.float32,
        )

    @classmethod
    def from_array(cls, spec_seed: int, values: np.ndarray) -> "EnvState":
        v = [float(x) for x in np.asarray(values, dtype=np.float32)]
        return cls(
            spec_seed=int(spec_seed),
            gripper=(v[0], v[1]),
            gripper_high=v[2] > 0.5,
            aperture=v[3],
            drawer_extension=v[4],
            button_drawer_open=int(round(v[5])),
            object_position=(v[6], v[7]),
            held=v[8] > 0.5,
            t=int(round(v[9])),
        )

    def evolve(self, **changes: Any) -> "EnvState":
        return replace(self, **changes)


def clamp_action(action: Any) -> np.ndarray:
    """Clamp ``(vx, vy, vh, grip)`` into [-1, 1] as float32."""
    values = np.asarray(action, dtype=np.float64).reshape(-1)
    if values.shape != (ACTION_DIM,):
        raise ValueError(f"action must have {ACTION_DIM} components, got shape {values.shape}")
    return np.clip(np.nan_to_num(values), -1.0, 1.0).astype(np.float32)
