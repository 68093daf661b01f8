"""Ground-truth success test used only for scoring."""

from __future__ import annotations

import math
from dataclasses import dataclass

from config import EnvConfig
from deskworld.models import EnvState, SceneContractError, SceneSpec


@dataclass(slots=True, frozen=True)
class SuccessThresholds:
    drawer: float = 0.1
    object_radius: float = 0.08

    @classmethod
    def from_env(cls, env: EnvConfig) -> "SuccessThresholds":
        return cls(drawer=env.drawer_success_threshold, object_radius=env.object_success_radius)


def oracle_success(
    spec: SceneSpec, final: EnvState, goal: EnvState, thresholds: SuccessThresholds | None = None
) -> bool:
    """
    True iff ``final`` matches ``goal`` on every goal-relevant field.

    Drawer extensions must differ by less than ``thresholds.drawer``, button
    drawers must agree, the object must lie within ``thresholds.object_radius``
    of its goal position and held flags must agree.

    Raises:
        SceneContractError: If either state belongs to another scene
    """
    thresholds = thresholds or SuccessThresholds()
    if final.spec_seed != spec.seed or goal.spec_seed != spec.seed:
        raise SceneContractError(
            f"oracle_success: states from scenes {final.spec_seed}/{goal.spec_seed}, spec {spec.seed}"
        )
    if abs(final.drawer_extension - goal.drawer_extension) >= thresholds.drawer:
        return False
    if final.button_drawer_open != goal.button_drawer_open:
        return False
    if spec.object_present:
        dx = final.object_position[0] - goal.object_position[0]
        dy = final.object_position[1] - goal.object_position[1]
        if math.hypot(dx, dy) > thresholds.object_radius:
            return False
    return final.held == goal.held
