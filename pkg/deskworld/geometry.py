"""
geometry.py

Procedural object catalog. Every geometry id maps to a point-symmetric shape
(ellipse, rectangle, ring, cross, even polygon or dumbbell) defined on
coordinates normalized by the object radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SHAPE_KINDS = ("ellipse", "rectangle", "ring", "cross", "polygon", "dumbbell")


@dataclass(slots=True, frozen=True)
class ShapeParams:
    kind: str
    rotation: float
    aspect: float
    detail: float


def shape_params(geometry_id: int) -> ShapeParams:
    """Deterministic parameters for a catalog id."""
    if geometry_id < 0:
        raise ValueError(f"geometry id must be non-negative, got {geometry_id}")
    kind = SHAPE_KINDS[geometry_id % len(SHAPE_KINDS)]
    variant = geometry_id // len(SHAPE_KINDS)
    rotation = (variant * math.pi / 7.0) % math.pi
    aspect = 0.5 + 0.5 * (variant % 4) / 3.0
    if kind == "ring":
        detail = 0.35 + 0.04 * (variant % 6)
    elif kind == "cross":
        detail = 0.3 + 0.06 * (variant % 4)
    elif kind == "polygon":
        detail = float((4, 6, 8)[variant % 3])
    else:
        detail = 0.35 + 0.05 * (variant % 3)
    return ShapeParams(kind=kind, rotation=rotation, aspect=aspect, detail=detail)


def shape_mask(geometry_id: int, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """
    Boolean mask of the shape over normalized offsets ``dx``, ``dy``.

    The shape fits inside the unit disk and satisfies ``mask(-dx, -dy) == mask(dx, dy)``.
    """
    params = shape_params(geometry_id)
    cos_r, sin_r = math.cos(params.rotation), math.sin(params.rotation)
    u = cos_r * dx + sin_r * dy
    v = -sin_r * dx + cos_r * dy
    if params.kind == "ellipse":
        return (u * u) + (v / params.aspect) ** 2 <= 1.0
    if params.kind == "rectangle":
        half = 1.0 / math.sqrt(1.0 + params.aspect**2)
        return (np.abs(u) <= half) & (np.abs(v) <= half * params.aspect)
    if params.kind == "ring":
        r2 = u * u + v * v
        return (r2 <= 1.0) & (r2 >= params.detail**2)
    if params.kind == "cross":
        width = params.detail
        inside = (u * u + v * v) <= 1.0
        return inside & ((np.abs(u) <= width / 2) | (np.abs(v) <= width / 2))
    if params.kind == "polygon":
        sides = int(params.detail)
        angle = np.arctan2(v, u)
        sector = 2.0 * math.pi / sides
        local = np.mod(angle, sector) - sector / 2.0
        apothem = math.cos(math.pi / sides)
        return np.hypot(u, v) * np.cos(local) <= apothem
    # dumbbell: two disks on the rotated axis joined by a bar
    radius = params.detail + 0.1
    centre = 1.0 - radius
    left = (u + centre) ** 2 + v * v <= radius**2
    right = (u - centre) ** 2 + v * v <= radius**2
    bar = (np.abs(u) <= centre) & (np.abs(v) <= radius * 0.4)
    return left | right | bar
