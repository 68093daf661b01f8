"""Adam with decoupled weight decay."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from autodiff.errors import AutodiffContractError, ShapeError
from autodiff.tensor import Tensor

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class AdamState:
    """Moments and hyperparameters for one parameter set."""

    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: Sequence[Tensor], **hyper: Any) -> "AdamState":
        state = cls(**hyper)
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]
        return state

    def to_dict(self) -> dict[str, Any]:
        return {
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "weight_decay": self.weight_decay,
            "step": self.step,
        }

    def arrays(self) -> dict[str, np.ndarray]:
        out = {f"m.{i}": arr for i, arr in enumerate(self.m)}
        out.update({f"v.{i}": arr for i, arr in enumerate(self.v)})
        return out

    @classmethod
    def from_parts(cls, meta: dict[str, Any], arrays: dict[str, np.ndarray]) -> "AdamState":
        count = sum(1 for key in arrays if key.startswith("m."))
        state = cls(**meta)
        state.m = [np.array(arrays[f"m.{i}"]) for i in range(count)]
        state.v = [np.array(arrays[f"v.{i}"]) for i in range(count)]
        return state


def adam_step(params: Sequence[Tensor], state: AdamState) -> None:
    """
    Apply one Adam update in place.

    Weight decay is decoupled: ``p <- p - lr*wd*p`` happens before the moment
    update and is independent of the gradient scale.

    Raises:
        AutodiffContractError: If a parameter has no gradient
        ShapeError: If the moment arrays do not match the parameters
    """
    if len(state.m) != len(params):
        raise ShapeError(f"adam_step: {len(state.m)} moment slots for {len(params)} parameters")
    for index, param in enumerate(params):
        if param.grad is None:
            label = param.name or f"#{index}"
            raise AutodiffContractError(f"adam_step: parameter {label} has no gradient")
        if state.m[index].shape != param.shape:
            raise ShapeError("adam_step", state.m[index].shape, param.shape)

    state.step += 1
    bias1 = 1.0 - state.beta1**state.step
    bias2 = 1.0 - state.beta2**state.step
    for index, param in enumerate(params):
        grad = param.grad
        dtype = param.dtype
        if state.weight_decay:
            param.data = param.data - dtype.type(state.lr * state.weight_decay) * param.data
        state.m[index] = state.beta1 * state.m[index] + (1.0 - state.beta1) * grad
        state.v[index] = state.beta2 * state.v[index] + (1.0 - state.beta2) * grad * grad
        m_hat = state.m[index] / bias1
        v_hat = state.v[index] / bias2
        update = state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        param.data = (param.data - update).astype(dtype, copy=False)


class Adam:
    """Optimizer wrapper that owns an ``AdamState`` for a fixed parameter list."""

    def __init__(
        self,
        params: Sequence[Tensor],
        lr: float = 3e-4,
        weight_decay: float = 0.0,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.state = AdamState.for_params(
            self.params, lr=lr, weight_decay=weight_decay, beta1=beta1, beta2=beta2, eps=eps
        )

    def zero_grad(self) -> None:
        for param in self.params:
            param.zero_grad()

    def step(self) -> None:
        adam_step(self.params, self.state)
