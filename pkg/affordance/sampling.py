"""Raster-order ancestral sampling of goal codes."""

from __future__ import annotations

import numpy as np

from affordance.model import AffordanceModel, ensure_shapes
from autodiff.tensor import no_grad
from representation.vqvae import LatentCode


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=-1, keepdims=True)


def sample_indices(
    model: AffordanceModel,
    z0: np.ndarray,
    rng: np.random.Generator,
    temperature: float = 1.0,
) -> np.ndarray:
    """
    Sample N index grids conditioned on N first-frame latents (N×L×L×D).

    Each position draws from ``softmax(logits / temperature)`` given the
    already sampled earlier positions; one uniform per (sample, position).
    """
    if temperature <= 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    z0 = ensure_shapes(model, z0)
    count, grid = len(z0), model.grid
    indices = np.zeros((count, grid, grid), dtype=np.int64)
    with no_grad():
        for position in range(grid * grid):
            row, col = divmod(position, grid)
            logits = model.forward(indices, z0).data[:, row, col, :].astype(np.float64)
            probs = _softmax_rows(logits / temperature)
            cdf = np.cumsum(probs, axis=1)
            draws = rng.random(count)[:, None] * cdf[:, -1:]
            picks = (cdf <= draws).sum(axis=1)
            indices[:, row, col] = np.minimum(picks, model.codebook_size - 1)
    return indices


def sample_goal(
    model: AffordanceModel,
    z0: LatentCode | np.ndarray,
    rng: np.random.Generator,
    temperature: float = 1.0,
) -> LatentCode:
    """Sample one goal ``z_g ~ p(z_t | z0)`` with indices and their codebook embeddings."""
    grid = z0.quantized if isinstance(z0, LatentCode) else np.asarray(z0)
    indices = sample_indices(model, grid[None], rng, temperature)[0]
    return LatentCode(indices=indices, quantized=model.codebook[indices].astype(np.float32))


def sample_goal_bank(
    model: AffordanceModel,
    z0: np.ndarray,
    count: int,
    rng: np.random.Generator,
    temperature: float = 1.0,
    batch_size: int = 256,
) -> np.ndarray:
    """
    Flattened goals for many conditioning frames at once.

    Args:
        z0: M×L×L×D first-frame latents

    Returns:
        np.ndarray: M×count×(L·L·D) float32
    """
    z0 = ensure_shapes(model, z0)
    repeated = np.repeat(z0, count, axis=0)
    chunks = []
    for start in range(0, len(repeated), batch_size):
        chunks.append(sample_indices(model, repeated[start : start + batch_size], rng, temperature))
    indices = np.concatenate(chunks) if chunks else np.zeros((0, model.grid, model.grid), dtype=np.int64)
    flat = model.codebook[indices].reshape(len(z0), count, -1)
    return flat.astype(np.float32)


def greedy_indices(model: AffordanceModel, z0: np.ndarray) -> np.ndarray:
    """Argmax decoding in raster order, the zero-temperature limit of sampling."""
    z0 = ensure_shapes(model, z0)
    count, grid = len(z0), model.grid
    indices = np.zeros((count, grid, grid), dtype=np.int64)
    with no_grad():
        for position in range(grid * grid):
            row, col = divmod(position, grid)
            logits = model.forward(indices, z0).data[:, row, col, :]
            indices[:, row, col] = np.argmax(logits, axis=1)
    return indices
