"""
layers.py

Parameterized building blocks shared by the representation, affordance, policy
and critic networks.

Main Classes:
    - Module: parameter registry with state_dict/load_state_dict
    - Linear, MLP: dense layers (weights stored in×out)
    - Conv2d, ConvTranspose2d: square-kernel convolutions
    - MaskedConv2d: raster-order masked convolution (type A excludes the centre)
"""

from __future__ import annotations

import logging
from typing import Any, Iterator, Sequence

import numpy as np

from autodiff import ops
from autodiff.errors import ShapeError
from autodiff.tensor import Tensor, get_default_dtype

logger = logging.getLogger(__name__)


def _uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> Tensor:
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    values = rng.uniform(-bound, bound, size=shape).astype(get_default_dtype())
    return Tensor(values, requires_grad=True)


class Module:
    """Base class that discovers parameters from attributes in assignment order."""

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for attr, value in self.__dict__.items():
            name = f"{prefix}{attr}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(prefix=f"{name}.")
            elif isinstance(value, (list, tuple)):
                for index, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(prefix=f"{name}.{index}.")

    def parameters(self) -> list[Tensor]:
        return [param for _, param in self.named_parameters()]

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.zero_grad()

    def parameter_count(self) -> int:
        return sum(param.size for param in self.parameters())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: param.data.copy() for name, param in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        """
        Copy arrays into the parameters of this module.

        Raises:
            ShapeError: If a parameter is missing, unexpected or has a different shape
        """
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))
        if missing or unexpected:
            raise ShapeError(f"load_state_dict(missing={missing}, unexpected={unexpected})")
        for name, param in own.items():
            value = np.asarray(state[name])
            if value.shape != param.shape:
                raise ShapeError(f"load_state_dict[{name}]", param.shape, value.shape)
            param.data = value.astype(param.dtype, copy=True)

    def to_dtype(self, dtype: Any) -> "Module":
        """Cast every parameter in place (float64 for gradient checks)."""
        for param in self.parameters():
            param.data = param.data.astype(dtype)
            param.grad = None
        return self

    def copy_from(self, other: "Module") -> None:
        self.load_state_dict(other.state_dict())

    def forward(self, *args: Any, **kwargs: Any) -> Tensor:
        raise NotImplementedError(type(self).__name__)

    def __call__(self, *args: Any, **kwargs: Any) -> Tensor:
        return self.forward(*args, **kwargs)


class Linear(Module):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        self.in_features = in_features
        self.out_features = out_features
        self.weight = _uniform_init(rng, (in_features, out_features), in_features)
        self.bias = _uniform_init(rng, (out_features,), in_features)

    def forward(self, x: Any) -> Tensor:
        return ops.matmul(x, self.weight) + self.bias


class MLP(Module):
    """Stack of Linear layers with a hidden activation and a linear output."""

    def __init__(
        self,
        sizes: Sequence[int],
        rng: np.random.Generator,
        activation: str = "relu",
    ):
        if len(sizes) < 2:
            raise ValueError(f"MLP needs at least input and output sizes, got {list(sizes)}")
        self.sizes = tuple(int(size) for size in sizes)
        self.activation = activation
        self.layers = [Linear(a, b, rng) for a, b in zip(self.sizes[:-1], self.sizes[1:])]

    def forward(self, x: Any) -> Tensor:
        out = x
        for index, layer in enumerate(self.layers):
            out = layer(out)
            if index < len(self.layers) - 1:
                out = ops.activation(out, self.activation)
        return out


class Conv2d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = 0,
    ):
        self.stride = stride
        self.padding = padding
        fan_in = in_channels * kernel_size * kernel_size
        self.weight = _uniform_init(rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in)
        self.bias = _uniform_init(rng, (out_channels,), fan_in)

    def forward(self, x: Any) -> Tensor:
        return ops.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class ConvTranspose2d(Module):
    """Transposed convolution; weight is in_channels×out_channels×k×k."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = 0,
        output_padding: int = 0,
    ):
        self.stride = stride
        self.padding = padding
        self.output_padding = output_padding
        fan_in = in_channels * kernel_size * kernel_size
        self.weight = _uniform_init(rng, (in_channels, out_channels, kernel_size, kernel_size), fan_in)
        self.bias = _uniform_init(rng, (out_channels,), fan_in)

    def forward(self, x: Any) -> Tensor:
        return ops.conv_transpose2d(
            x,
            self.weight,
            self.bias,
            stride=self.stride,
            padding=self.padding,
            output_padding=self.output_padding,
        )


def raster_mask(out_channels: int, in_channels: int, kernel_size: int, mask_type: str) -> np.ndarray:
    """
    Build a k×k raster-order mask.

    Type ``A`` hides the centre position and everything after it; type ``B``
    keeps the centre.
    """
    if mask_type not in ("A", "B"):
        raise ValueError(f"mask_type must be 'A' or 'B', got {mask_type!r}")
    if kernel_size % 2 == 0:
        raise ValueError(f"masked convolutions need an odd kernel, got {kernel_size}")
    center = kernel_size // 2
    mask = np.ones((out_channels, in_channels, kernel_size, kernel_size), dtype=get_default_dtype())
    mask[:, :, center, center + (mask_type == "B") :] = 0.0
    mask[:, :, center + 1 :, :] = 0.0
    return mask


class MaskedConv2d(Module):
    """Same-size convolution whose kernel only sees earlier raster positions."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        mask_type: str,
        rng: np.random.Generator,
    ):
        self.mask_type = mask_type
        self.padding = kernel_size // 2
        self.conv = Conv2d(in_channels, out_channels, kernel_size, rng, padding=self.padding)
        self._mask = raster_mask(out_channels, in_channels, kernel_size, mask_type)

    def forward(self, x: Any) -> Tensor:
        mask = self._mask.astype(self.conv.weight.dtype, copy=False)
        return ops.conv2d(x, self.conv.weight * mask, self.conv.bias, padding=self.padding)
