"""
model.py

Conditional gated PixelCNN over the L×L grid of codebook indices.

The target grid is embedded through a frozen copy of the representation
codebook, passed through one mask-A convolution and ``layers - 1`` gated mask-B
blocks, then a 1×1 head with K logits per position. The first frame's quantized
latent ``z0`` enters every gated block as a broadcast bias from a linear
projection of the flattened grid and, in ``global+spatial`` mode, also as a
per-position 1×1 projection.
"""

from __future__ import annotations

import logging
from typing import Any

import numpy as np

from autodiff import ops
from autodiff.errors import ShapeError
from autodiff.layers import Conv2d, Linear, MaskedConv2d, Module
from autodiff.tensor import Tensor, get_default_dtype
from config import PixelCnnConfig

logger = logging.getLogger(__name__)

HEAD_INIT_SCALE = 0.01


class AffordanceContractError(ValueError):
    """Codes do not match the grid or codebook of the model."""


class GatedBlock(Module):
    """Masked-B convolution with conditioning bias, tanh·sigmoid gate and a residual 1×1."""

    def __init__(
        self,
        channels: int,
        kernel: int,
        cond_dim: int,
        embedding_dim: int,
        spatial: bool,
        rng: np.random.Generator,
    ):
        self.masked = MaskedConv2d(channels, 2 * channels, kernel, "B", rng)
        self.cond_global = Linear(cond_dim, 2 * channels, rng)
        self.cond_spatial = Conv2d(embedding_dim, 2 * channels, 1, rng) if spatial else None
        self.out = Conv2d(channels, channels, 1, rng)

    def forward(self, x: Any, cond_flat: Tensor, cond_grid: Tensor) -> Tensor:
        pre = self.masked(x)
        bias = self.cond_global(cond_flat)
        pre = pre + ops.reshape(bias, (bias.shape[0], bias.shape[1], 1, 1))
        if self.cond_spatial is not None:
            pre = pre + self.cond_spatial(cond_grid)
        return x + self.out(ops.gated_activation(pre))


class AffordanceModel(Module):
    """
    p(z_t | z0) over index grids.

    Args:
        cfg: layer count, channels, kernels and conditioning mode
        codebook: K×D representation codebook (copied, not trained)
        grid: side L of the index grid
        rng: initialization stream
        conditional: ``False`` zeroes the conditioning input (ablation)
    """

    def __init__(
        self,
        cfg: PixelCnnConfig,
        codebook: np.ndarray,
        grid: int,
        rng: np.random.Generator,
        conditional: bool = True,
    ):
        self.codebook = np.array(codebook, dtype=get_default_dtype())
        self.codebook_size, self.embedding_dim = self.codebook.shape
        self.grid = grid
        self.conditional = conditional
        self.conditioning = cfg.conditioning
        channels = cfg.channels
        cond_dim = grid * grid * self.embedding_dim
        spatial = cfg.conditioning == "global+spatial"

        self.input_conv = MaskedConv2d(self.embedding_dim, channels, cfg.first_kernel, "A", rng)
        self.blocks = [
            GatedBlock(channels, cfg.kernel, cond_dim, self.embedding_dim, spatial, rng)
            for _ in range(cfg.layers - 1)
        ]
        self.head_hidden = Conv2d(channels, channels, 1, rng)
        self.head_out = Conv2d(channels, self.codebook_size, 1, rng)
        self.head_out.weight.data = self.head_out.weight.data * HEAD_INIT_SCALE
        self.head_out.bias.data = self.head_out.bias.data * HEAD_INIT_SCALE

    @property
    def positions(self) -> int:
        return self.grid * self.grid

    def check_codes(self, targets: np.ndarray, z0: np.ndarray) -> None:
        """
        Raises:
            AffordanceContractError: On grid or codebook mismatch
        """
        grid = (self.grid, self.grid)
        if targets.ndim != 3 or targets.shape[1:] != grid:
            raise AffordanceContractError(f"targets must be N×{self.grid}×{self.grid}, got {targets.shape}")
        if z0.shape != (targets.shape[0], *grid, self.embedding_dim):
            raise AffordanceContractError(
                f"z0 must be N×{self.grid}×{self.grid}×{self.embedding_dim}, got {z0.shape}"
            )
        if targets.size and (targets.min() < 0 or targets.max() >= self.codebook_size):
            raise AffordanceContractError(f"target indices outside [0, {self.codebook_size})")

    def forward(self, targets: Any, z0: Any) -> Tensor:
        """
        Args:
            targets: N×L×L integer indices of z_t (teacher forcing)
            z0: N×L×L×D quantized conditioning latents

        Returns:
            Tensor: N×L×L×K logits
        """
        indices = np.asarray(targets, dtype=np.int64)
        z0_data = z0.data if isinstance(z0, Tensor) else np.asarray(z0, dtype=self.codebook.dtype)
        self.check_codes(indices, z0_data)
        if not self.conditional:
            z0_data = np.zeros_like(z0_data)
        cond_grid = Tensor(np.ascontiguousarray(z0_data.transpose(0, 3, 1, 2)))
        cond_flat = Tensor(z0_data.reshape(len(z0_data), -1))

        x = Tensor(np.ascontiguousarray(self.codebook[indices].transpose(0, 3, 1, 2)))
        h = self.input_conv(x)
        for block in self.blocks:
            h = block(h, cond_flat, cond_grid)
        h = self.head_hidden(ops.relu(h))
        logits = self.head_out(ops.relu(h))
        return ops.permute(logits, (0, 2, 3, 1))

    def loss(self, targets: Any, z0: Any) -> Tensor:
        """Mean cross-entropy over all positions of all pairs (nats per token)."""
        logits = self.forward(targets, z0)
        flat_targets = np.asarray(targets, dtype=np.int64).reshape(-1)
        return ops.cross_entropy_logits(ops.reshape(logits, (-1, self.codebook_size)), flat_targets)

    def architecture(self) -> dict[str, Any]:
        return {
            "codebook_size": self.codebook_size,
            "embedding_dim": self.embedding_dim,
            "grid": self.grid,
            "blocks": len(self.blocks),
            "conditioning": self.conditioning,
            "conditional": self.conditional,
        }


def ensure_shapes(model: AffordanceModel, z0: np.ndarray) -> np.ndarray:
    z0 = np.asarray(z0, dtype=model.codebook.dtype)
    if z0.ndim == 3:
        z0 = z0[None]
    if z0.shape[1:] != (model.grid, model.grid, model.embedding_dim):
        raise ShapeError("affordance conditioning", z0.shape, (model.grid, model.grid, model.embedding_dim))
    return z0
