"""
render.py

Flat top-down rasterizer. Produces H×W×3 float32 images whose values are
8-bit levels ``k/255`` so they survive a u8 round trip bit-exactly.

Draw order: table, tray, drawer cabinet and drawer, button drawer, button,
object, gripper.
"""

from __future__ import annotations

import numpy as np

from config import EnvConfig
from deskworld.dynamics import handle_position
from deskworld.geometry import shape_mask
from deskworld.models import EnvState, SceneSpec

TABLE_COLOR = np.array([0.55, 0.45, 0.35])
TRAY_COLOR = np.array([0.32, 0.32, 0.34])
TRAY_INNER_COLOR = np.array([0.42, 0.42, 0.45])
HANDLE_COLOR = np.array([0.1, 0.1, 0.1])
GRIPPER_HIGH_COLOR = np.array([0.95, 0.95, 0.95])
GRIPPER_LOW_COLOR = np.array([0.02, 0.02, 0.02])

OBJECT_RADIUS = 0.045
DRAWER_DEPTH = 0.2
DRAWER_HALF_HEIGHT = 0.08
BUTTON_RADIUS_PX = 0.03
TRAY_HALF = 0.09


def to_u8(image: np.ndarray) -> np.ndarray:
    return np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)


def from_u8(pixels: np.ndarray) -> np.ndarray:
    return pixels.astype(np.float32) / np.float32(255.0)


def quantize(image: np.ndarray) -> np.ndarray:
    """Snap to 8-bit levels and return float32 in [0, 1]."""
    return from_u8(to_u8(image))


class _Canvas:
    def __init__(self, size: int):
        centres = (np.arange(size) + 0.5) / size
        self.ys, self.xs = np.meshgrid(centres, centres, indexing="ij")
        self.image = np.empty((size, size, 3), dtype=np.float64)
        self.image[:] = TABLE_COLOR

    def rect(self, x0: float, x1: float, y0: float, y1: float, color: np.ndarray) -> np.ndarray:
        lo_x, hi_x = min(x0, x1), max(x0, x1)
        lo_y, hi_y = min(y0, y1), max(y0, y1)
        mask = (self.xs >= lo_x) & (self.xs <= hi_x) & (self.ys >= lo_y) & (self.ys <= hi_y)
        self.image[mask] = color
        return mask

    def disk(self, cx: float, cy: float, radius: float, color: np.ndarray) -> None:
        mask = (self.xs - cx) ** 2 + (self.ys - cy) ** 2 <= radius**2
        self.image[mask] = color


def render(spec: SceneSpec, state: EnvState, env: EnvConfig | None = None) -> np.ndarray:
    """Rasterize ``state`` of ``spec`` into an image of side ``env.image_size``."""
    env = env or EnvConfig()
    canvas = _Canvas(env.image_size)

    if spec.tray_present:
        tx, ty = spec.tray_position
        canvas.rect(tx - TRAY_HALF, tx + TRAY_HALF, ty - TRAY_HALF, ty + TRAY_HALF, TRAY_COLOR)
        inset = TRAY_HALF - 0.02
        canvas.rect(tx - inset, tx + inset, ty - inset, ty + inset, TRAY_INNER_COLOR)

    if spec.drawer_present:
        color = np.asarray(spec.drawer_color)
        o = spec.drawer_orientation
        hx, hy = spec.drawer_handle
        front = hx - o * 0.02
        canvas.rect(front - o * DRAWER_DEPTH, front, hy - DRAWER_HALF_HEIGHT, hy + DRAWER_HALF_HEIGHT, color * 0.55)
        cx, _ = handle_position(spec, state.drawer_extension, env)
        moving_front = cx - o * 0.02
        canvas.rect(
            moving_front - o * DRAWER_DEPTH,
            moving_front,
            hy - DRAWER_HALF_HEIGHT + 0.01,
            hy + DRAWER_HALF_HEIGHT - 0.01,
            color,
        )
        # 서랍 내부는 캐비닛 밖으로 나온 부분만 어둡게 표시
        pulled = state.drawer_extension * env.drawer_travel
        if pulled > 0:
            canvas.rect(
                front + o * 0.01,
                moving_front - o * 0.015,
                hy - DRAWER_HALF_HEIGHT + 0.025,
                hy + DRAWER_HALF_HEIGHT - 0.025,
                color * 0.3,
            )
        canvas.rect(cx - 0.012, cx + 0.012, hy - 0.045, hy + 0.045, HANDLE_COLOR)

    if spec.button_drawer_present:
        color = np.asarray(spec.button_color)
        bx, by = spec.button_drawer_box
        canvas.rect(bx - 0.07, bx + 0.07, by - 0.045, by + 0.045, color * 0.55)
        if state.button_drawer_open:
            canvas.rect(bx - 0.055, bx + 0.055, by - 0.03, by + 0.03, color * 0.2)
        else:
            canvas.rect(bx - 0.06, bx + 0.06, by - 0.035, by + 0.035, color)
        px, py = spec.button_position
        canvas.disk(px, py, BUTTON_RADIUS_PX + 0.008, HANDLE_COLOR)
        canvas.disk(px, py, BUTTON_RADIUS_PX, color)

    if spec.object_present:
        ox, oy = state.object_position
        mask = shape_mask(
            spec.object_geometry, (canvas.xs - ox) / OBJECT_RADIUS, (canvas.ys - oy) / OBJECT_RADIUS
        )
        canvas.image[mask] = np.asarray(spec.object_color)

    gx, gy = state.gripper
    gripper_color = GRIPPER_HIGH_COLOR if state.gripper_high else GRIPPER_LOW_COLOR
    spread = 0.02 + 0.025 * state.aperture
    for side in (-1.0, 1.0):
        fx = gx + side * spread
        canvas.rect(fx - 0.008, fx + 0.008, gy - 0.025, gy + 0.025, gripper_color)

    return quantize(canvas.image)
