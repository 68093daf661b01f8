"""
augment.py

Color jitter and random resized crop for representation training.

Jitter order is fixed (brightness, contrast, saturation, hue) and every stage
clamps to [0, 1]. The crop is resized back with bilinear interpolation using
half-pixel centres, so a full-frame crop at the original size is the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from config import VqvaeConfig

Range = tuple[float, float]
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(slots=True, frozen=True)
class AugmentParams:
    brightness: Range = (0.75, 1.25)
    contrast: Range = (0.9, 1.1)
    saturation: Range = (0.9, 1.1)
    hue: Range = (-0.1, 0.1)
    crop_scale: Range = (0.9, 1.0)
    crop_ratio: Range = (0.9, 1.1)
    size: int = 48

    @classmethod
    def from_config(cls, cfg: VqvaeConfig, size: int) -> "AugmentParams":
        return cls(
            brightness=cfg.brightness,
            contrast=cfg.contrast,
            saturation=cfg.saturation,
            hue=cfg.hue,
            crop_scale=cfg.crop_scale,
            crop_ratio=cfg.crop_ratio,
            size=size,
        )

    @classmethod
    def identity(cls, size: int = 48) -> "AugmentParams":
        return cls((1.0, 1.0), (1.0, 1.0), (1.0, 1.0), (0.0, 0.0), (1.0, 1.0), (1.0, 1.0), size)


@dataclass(slots=True, frozen=True)
class JitterFactors:
    brightness: float = 1.0
    contrast: float = 1.0
    saturation: float = 1.0
    hue: float = 0.0


def _gray(image: np.ndarray) -> np.ndarray:
    return image @ _LUMA


def rgb_to_hsv(image: np.ndarray) -> np.ndarray:
    r, g, b = image[..., 0], image[..., 1], image[..., 2]
    high = image.max(axis=-1)
    low = image.min(axis=-1)
    delta = high - low
    safe = np.where(delta > 0, delta, 1.0)
    hue = np.where(
        high == r,
        ((g - b) / safe) % 6.0,
        np.where(high == g, (b - r) / safe + 2.0, (r - g) / safe + 4.0),
    )
    hue = np.where(delta > 0, hue / 6.0, 0.0)
    sat = np.where(high > 0, delta / np.where(high > 0, high, 1.0), 0.0)
    return np.stack([hue, sat, high], axis=-1)


def hsv_to_rgb(image: np.ndarray) -> np.ndarray:
    h, s, v = image[..., 0], image[..., 1], image[..., 2]
    sector = np.floor(h * 6.0)
    frac = h * 6.0 - sector
    p = v * (1.0 - s)
    q = v * (1.0 - s * frac)
    t = v * (1.0 - s * (1.0 - frac))
    sector = sector.astype(np.int64) % 6
    choices_r = [v, q, p, p, t, v]
    choices_g = [t, v, v, q, p, p]
    choices_b = [p, p, t, v, v, q]
    conditions = [sector == i for i in range(6)]
    return np.stack(
        [np.select(conditions, choices_r), np.select(conditions, choices_g), np.select(conditions, choices_b)],
        axis=-1,
    )


def color_jitter(image: np.ndarray, factors: JitterFactors) -> np.ndarray:
    """Apply brightness, contrast, saturation and hue adjustments in that order."""
    out = np.clip(image.astype(np.float64) * factors.brightness, 0.0, 1.0)
    if factors.contrast != 1.0:
        mean = _gray(out).mean()
        out = np.clip((out - mean) * factors.contrast + mean, 0.0, 1.0)
    if factors.saturation != 1.0:
        gray = _gray(out)[..., None]
        out = np.clip(gray + (out - gray) * factors.saturation, 0.0, 1.0)
    if factors.hue != 0.0:
        hsv = rgb_to_hsv(out)
        hsv[..., 0] = (hsv[..., 0] + factors.hue) % 1.0
        out = np.clip(hsv_to_rgb(hsv), 0.0, 1.0)
    return out


def bilinear_resize(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    in_h, in_w = image.shape[:2]
    ys = np.clip((np.arange(out_h) + 0.5) * in_h / out_h - 0.5, 0.0, in_h - 1)
    xs = np.clip((np.arange(out_w) + 0.5) * in_w / out_w - 0.5, 0.0, in_w - 1)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]
    top = image[y0][:, x0] * (1 - wx) + image[y0][:, x1] * wx
    bottom = image[y1][:, x0] * (1 - wx) + image[y1][:, x1] * wx
    return top * (1 - wy) + bottom * wy


def crop_box(height: int, width: int, rng: np.random.Generator, scale: Range, ratio: Range) -> tuple[int, int, int, int]:
    """Sample ``(top, left, h, w)``; falls back to the full frame after 10 failed draws."""
    area = height * width
    log_ratio = (math.log(ratio[0]), math.log(ratio[1]))
    for _ in range(10):
        target = area * rng.uniform(scale[0], scale[1])
        aspect = math.exp(rng.uniform(log_ratio[0], log_ratio[1]))
        w = int(round(math.sqrt(target * aspect)))
        h = int(round(math.sqrt(target / aspect)))
        if 0 < w <= width and 0 < h <= height:
            top = int(rng.integers(0, height - h + 1))
            left = int(rng.integers(0, width - w + 1))
            return top, left, h, w
    return 0, 0, height, width


def random_resized_crop(image: np.ndarray, rng: np.random.Generator, scale: Range, ratio: Range, size: int) -> np.ndarray:
    top, left, h, w = crop_box(image.shape[0], image.shape[1], rng, scale, ratio)
    return bilinear_resize(image[top : top + h, left : left + w], size, size)


def sample_factors(rng: np.random.Generator, params: AugmentParams) -> JitterFactors:
    return JitterFactors(
        brightness=float(rng.uniform(*params.brightness)),
        contrast=float(rng.uniform(*params.contrast)),
        saturation=float(rng.uniform(*params.saturation)),
        hue=float(rng.uniform(*params.hue)),
    )


def augment(image: np.ndarray, rng: np.random.Generator, params: AugmentParams | None = None) -> np.ndarray:
    """Jitter then crop ``image`` (H×W×3 in [0, 1]); returns float32 size×size×3 in [0, 1]."""
    params = params or AugmentParams(size=image.shape[0])
    jittered = color_jitter(image, sample_factors(rng, params))
    cropped = random_resized_crop(jittered, rng, params.crop_scale, params.crop_ratio, params.size)
    return np.clip(cropped, 0.0, 1.0).astype(np.float32)
