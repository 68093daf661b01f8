"""
vqvae.py

Vector-quantized autoencoder that maps 48×48 RGB frames to a 12×12 grid of
codebook entries.

Stride plan:
    encoder: k4/s2 → k4/s2 → (conv_layers - 2) × k3/s1 → residual stack → 1×1 to D
    decoder: k3/s1 from D → residual stack → transposed k4/s2 → transposed k4/s2 → sigmoid

Images enter and leave channel-last (N×H×W×3); latents are channel-last grids
(N×L×L×D) so a flattened latent is row-major over (row, column, channel).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from autodiff import ops
from autodiff.errors import ConvConfigError
from autodiff.layers import Conv2d, ConvTranspose2d, Module
from autodiff.tensor import Tensor, get_default_dtype, no_grad
from config import VqvaeConfig
from representation.quantizer import QuantizeResult, quantize

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class LatentCode:
    """
    Attributes:
        indices (np.ndarray): L×L codebook indices
        quantized (np.ndarray): L×L×D float32, ``quantized[i, j] == codebook[indices[i, j]]``
    """

    indices: np.ndarray
    quantized: np.ndarray

    @property
    def flat(self) -> np.ndarray:
        return self.quantized.reshape(-1)


class ResidualStack(Module):
    def __init__(self, channels: int, hidden: int, layers: int, rng: np.random.Generator):
        self.blocks = [
            _ResidualBlock(channels, hidden, rng) for _ in range(layers)
        ]

    def forward(self, x: Any) -> Tensor:
        out = x
        for block in self.blocks:
            out = block(out)
        return ops.relu(out)


class _ResidualBlock(Module):
    def __init__(self, channels: int, hidden: int, rng: np.random.Generator):
        self.conv3 = Conv2d(channels, hidden, 3, rng, padding=1)
        self.conv1 = Conv2d(hidden, channels, 1, rng)

    def forward(self, x: Any) -> Tensor:
        return x + self.conv1(ops.relu(self.conv3(ops.relu(x))))


@dataclass(slots=True)
class VqvaeOutput:
    reconstruction: Tensor
    quantized: QuantizeResult


def latent_grid_size(image_size: int) -> int:
    """
    Grid side after two stride-2 convolutions.

    Raises:
        ConvConfigError: If ``image_size`` does not divide by 4 or is too small
    """
    if image_size < 8 or image_size % 4:
        raise ConvConfigError(f"image size {image_size} is incompatible with the 2×stride-2 plan")
    return image_size // 4


class VQVAE(Module):
    """Encoder, codebook and mirrored decoder."""

    def __init__(self, cfg: VqvaeConfig, image_size: int, rng: np.random.Generator):
        if cfg.conv_layers < 2:
            raise ConvConfigError(f"need at least 2 convolution layers, got {cfg.conv_layers}")
        self.image_size = image_size
        self.grid = latent_grid_size(image_size)
        self.codebook_size = cfg.codebook_size
        self.embedding_dim = cfg.embedding_dim
        self.commitment_cost = cfg.commitment_cost
        hidden = cfg.conv_hidden
        half = max(hidden // 2, 1)

        self.enc_down1 = Conv2d(3, half, 4, rng, stride=2, padding=1)
        self.enc_down2 = Conv2d(half, hidden, 4, rng, stride=2, padding=1)
        self.enc_convs = [Conv2d(hidden, hidden, 3, rng, padding=1) for _ in range(cfg.conv_layers - 2)]
        self.enc_residual = ResidualStack(hidden, cfg.residual_hidden, cfg.residual_layers, rng)
        self.pre_quantize = Conv2d(hidden, cfg.embedding_dim, 1, rng)

        bound = 1.0 / cfg.codebook_size
        self.codebook = Tensor(
            rng.uniform(-bound, bound, size=(cfg.codebook_size, cfg.embedding_dim)).astype(get_default_dtype()),
            requires_grad=True,
            name="codebook",
        )

        self.dec_in = Conv2d(cfg.embedding_dim, hidden, 3, rng, padding=1)
        self.dec_residual = ResidualStack(hidden, cfg.residual_hidden, cfg.residual_layers, rng)
        self.dec_up1 = ConvTranspose2d(hidden, half, 4, rng, stride=2, padding=1)
        self.dec_up2 = ConvTranspose2d(half, 3, 4, rng, stride=2, padding=1)

    @property
    def latent_dim(self) -> int:
        """Length of a flattened latent, L·L·D."""
        return self.grid * self.grid * self.embedding_dim

    def _check_images(self, images: Any) -> Tensor:
        x = images if isinstance(images, Tensor) else Tensor(np.asarray(images, dtype=get_default_dtype()))
        if x.ndim != 4 or x.shape[1:] != (self.image_size, self.image_size, 3):
            raise ConvConfigError(
                f"expected N×{self.image_size}×{self.image_size}×3 images, got {tuple(x.shape)}"
            )
        return x

    def encode_continuous(self, images: Any) -> Tensor:
        """N×H×W×3 images → N×L×L×D pre-quantization latents."""
        x = ops.permute(self._check_images(images), (0, 3, 1, 2))
        h = ops.relu(self.enc_down1(x))
        h = ops.relu(self.enc_down2(h))
        for index, conv in enumerate(self.enc_convs):
            h = conv(h)
            if index < len(self.enc_convs) - 1:
                h = ops.relu(h)
        h = self.enc_residual(h)
        return ops.permute(self.pre_quantize(h), (0, 2, 3, 1))

    def quantize(self, z_e: Tensor) -> QuantizeResult:
        return quantize(z_e, self.codebook, self.commitment_cost)

    def decode(self, z_q: Any) -> Tensor:
        """N×L×L×D latents → N×H×W×3 images in [0, 1]."""
        z = z_q if isinstance(z_q, Tensor) else Tensor(z_q)
        h = self.dec_in(ops.permute(z, (0, 3, 1, 2)))
        h = self.dec_residual(h)
        h = ops.relu(self.dec_up1(h))
        h = self.dec_up2(h)
        return ops.permute(ops.sigmoid(h), (0, 2, 3, 1))

    def forward(self, images: Any) -> VqvaeOutput:
        result = self.quantize(self.encode_continuous(images))
        return VqvaeOutput(reconstruction=self.decode(result.quantized), quantized=result)

    def loss(self, images: Any, targets: Any | None = None) -> tuple[Tensor, dict[str, float]]:
        """Reconstruction MSE + vq loss + commitment loss."""
        out = self.forward(images)
        target = images if targets is None else targets
        target_data = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=get_default_dtype())
        recon = ops.mse_loss(out.reconstruction, target_data)
        total = recon + out.quantized.vq_loss + out.quantized.commit_loss
        parts = {
            "recon_mse": recon.item(),
            "vq_loss": out.quantized.vq_loss.item(),
            "commit_loss": out.quantized.commit_loss.item(),
            "total": total.item(),
        }
        return total, parts

    # ------------------------------------------------------------------ inference
    def encode_batch(self, images: np.ndarray, batch_size: int = 64) -> tuple[np.ndarray, np.ndarray]:
        """
        Deterministic encoding of N images.

        Returns:
            tuple: ``(indices N×L×L int64, quantized N×L×L×D)``; quantized rows are codebook rows bitwise
        """
        images = np.asarray(images)
        if images.ndim == 3:
            images = images[None]
        indices = []
        with no_grad():
            for start in range(0, len(images), batch_size):
                z_e = self.encode_continuous(images[start : start + batch_size])
                indices.append(self.quantize(z_e).indices)
        if not indices:
            grid = (0, self.grid, self.grid)
            return np.zeros(grid, dtype=np.int64), np.zeros((*grid, self.embedding_dim), dtype=self.codebook.dtype)
        stacked = np.concatenate(indices)
        return stacked, self.codebook.data[stacked]

    def encode(self, image: np.ndarray) -> LatentCode:
        indices, quantized = self.encode_batch(np.asarray(image)[None])
        return LatentCode(indices=indices[0], quantized=quantized[0])

    def embed_indices(self, indices: np.ndarray) -> np.ndarray:
        return self.codebook.data[np.asarray(indices, dtype=np.int64)]

    def decode_indices(self, indices: np.ndarray) -> np.ndarray:
        """Decode N×L×L index grids to float images."""
        with no_grad():
            return self.decode(self.embed_indices(indices)).data

    def reconstruct(self, images: np.ndarray) -> np.ndarray:
        indices, _ = self.encode_batch(images)
        return self.decode_indices(indices)

    def architecture(self) -> dict[str, int]:
        return {
            "image_size": self.image_size,
            "codebook_size": self.codebook_size,
            "embedding_dim": self.embedding_dim,
            "grid": self.grid,
        }
