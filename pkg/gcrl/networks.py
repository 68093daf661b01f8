"""
networks.py

Goal-conditioned policy and critic.

Main Classes:
    - GaussianPolicy: MLP over concat(z, z_g) producing a tanh-squashed Gaussian
    - QNetwork: MLP scoring concat(z, a, z_g)
"""

from __future__ import annotations

import math
from typing import Any, Sequence

import numpy as np

from autodiff import ops
from autodiff.layers import MLP, Module
from autodiff.tensor import Tensor, get_default_dtype, no_grad

ACTION_EPS = 1e-6
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _as_tensor(value: Any) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=get_default_dtype()))


class GaussianPolicy(Module):
    """
    pi(a | z, z_g) as ``tanh(u)`` with ``u ~ N(mean, std)`` per action dimension.

    ``log_std`` is squashed into ``[log_std_min, log_std_max]`` with a tanh.
    """

    def __init__(
        self,
        obs_dim: int,
        action_dim: int,
        hidden: Sequence[int],
        rng: np.random.Generator,
        log_std_min: float = -5.0,
        log_std_max: float = 2.0,
    ):
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.log_std_min = log_std_min
        self.log_std_max = log_std_max
        self.body = MLP([2 * obs_dim, *hidden, 2 * action_dim], rng, activation="relu")

    def distribution(self, obs: Any, goals: Any) -> tuple[Tensor, Tensor]:
        """Return ``(mean, log_std)`` of the pre-squash Gaussian, both N×A."""
        out = self.body(ops.concat([_as_tensor(obs), _as_tensor(goals)], axis=1))
        mean = out[:, : self.action_dim]
        raw = ops.tanh(out[:, self.action_dim :])
        half_span = 0.5 * (self.log_std_max - self.log_std_min)
        log_std = raw * half_span + (self.log_std_min + half_span)
        return mean, log_std

    def forward(self, obs: Any, goals: Any) -> Tensor:
        mean, _ = self.distribution(obs, goals)
        return ops.tanh(mean)

    def log_prob(self, obs: Any, goals: Any, actions: Any) -> Tensor:
        """Log-density of squashed ``actions`` (N×A in [-1, 1]); returns N values."""
        mean, log_std = self.distribution(obs, goals)
        a = np.clip(np.asarray(actions, dtype=mean.dtype), -1.0 + ACTION_EPS, 1.0 - ACTION_EPS)
        pre_squash = np.arctanh(a)
        z = ops.sub(pre_squash, mean) * ops.exp(-log_std)
        per_dim = ops.square(z) * -0.5 - log_std - _HALF_LOG_2PI
        jacobian = np.log(1.0 - a * a + ACTION_EPS).sum(axis=1)
        return ops.sum(per_dim, axis=1) - jacobian

    def sample(self, obs: np.ndarray, goals: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        with no_grad():
            mean, log_std = self.distribution(obs, goals)
        noise = rng.standard_normal(mean.shape).astype(mean.dtype)
        return np.tanh(mean.data + np.exp(log_std.data) * noise)

    def mean_action(self, obs: np.ndarray, goals: np.ndarray) -> np.ndarray:
        with no_grad():
            return self.forward(obs, goals).data


class QNetwork(Module):
    def __init__(self, obs_dim: int, action_dim: int, hidden: Sequence[int], rng: np.random.Generator):
        self.body = MLP([2 * obs_dim + action_dim, *hidden, 1], rng, activation="relu")

    def forward(self, obs: Any, actions: Any, goals: Any) -> Tensor:
        joined = ops.concat([_as_tensor(obs), _as_tensor(actions), _as_tensor(goals)], axis=1)
        out = self.body(joined)
        return ops.reshape(out, (out.shape[0],))
