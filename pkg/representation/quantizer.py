"""Nearest-codebook vector quantization with straight-through gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from autodiff import ops
from autodiff.errors import ShapeError
from autodiff.tensor import Tensor


@dataclass(slots=True)
class QuantizeResult:
    """
    Attributes:
        quantized (Tensor): codebook rows with values of ``e`` and the gradient routed to ``z_e``
        indices (np.ndarray): integer index per position (shape of ``z_e`` minus the last axis)
        vq_loss (Tensor): mean ``||sg(z_e) - e||^2``, trains the codebook only
        commit_loss (Tensor): ``beta * mean ||z_e - sg(e)||^2``, trains the encoder only
    """

    quantized: Tensor
    indices: np.ndarray
    vq_loss: Tensor
    commit_loss: Tensor


def nearest_indices(vectors: np.ndarray, codebook: np.ndarray) -> np.ndarray:
    """Index of the closest codebook row per vector under squared distance; ties pick the lowest index."""
    diff = vectors[:, None, :] - codebook[None, :, :]
    distances = np.einsum("nkd,nkd->nk", diff, diff)
    return np.argmin(distances, axis=1)


def quantize(z_e: Tensor, codebook: Tensor, commitment_cost: float = 0.25) -> QuantizeResult:
    """
    Snap the last axis of ``z_e`` to its nearest codebook row.

    Args:
        z_e: ...×D continuous encoder output
        codebook: K×D embedding table
        commitment_cost: beta

    Raises:
        ShapeError: If the embedding sizes differ
    """
    dim = codebook.shape[1]
    if z_e.shape[-1] != dim:
        raise ShapeError("quantize", z_e.shape, codebook.shape)
    flat = z_e.data.reshape(-1, dim)
    indices = nearest_indices(flat, codebook.data)
    chosen = ops.reshape(ops.embedding(codebook, indices), z_e.shape)
    vq_loss = ops.mse_loss(ops.stop_gradient(z_e), chosen)
    commit_loss = ops.mse_loss(z_e, ops.stop_gradient(chosen)) * commitment_cost
    return QuantizeResult(
        quantized=ops.straight_through(z_e, chosen),
        indices=indices.reshape(z_e.shape[:-1]),
        vq_loss=vq_loss,
        commit_loss=commit_loss,
    )


def codebook_usage(indices: np.ndarray, codebook_size: int) -> tuple[np.ndarray, float]:
    """
    Usage histogram and perplexity ``exp(entropy)`` of the chosen codes.

    Perplexity is 1 when a single code is used and ``K`` when all are used evenly.
    """
    counts = np.bincount(np.asarray(indices).reshape(-1), minlength=codebook_size)
    total = counts.sum()
    if total == 0:
        return counts, 0.0
    probs = counts[counts > 0] / total
    return counts, float(np.exp(-(probs * np.log(probs)).sum()))
