"""
awac.py

Advantage-weighted actor-critic updates.

Critic: mean squared TD error to ``y = s·r + gamma·(1 - terminal)·Q_target(z', a' ~ pi, z_g)``
followed by a Polyak update of the target. Actor: ``-mean(w · log pi(a | z, z_g))``
with ``w = clip(exp(A / lambda), 0, w_max)`` and ``A = Q(z, a, z_g) - Q(z, a_pi, z_g)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from autodiff import ops
from autodiff.layers import Module
from autodiff.optim import Adam
from autodiff.rng import make_stream
from autodiff.tensor import no_grad
from config import RlConfig
from datastore.replay import TransitionBatch
from gcrl.networks import GaussianPolicy, QNetwork

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class ActorCritic:
    policy: GaussianPolicy
    q: QNetwork
    q_target: QNetwork
    policy_optimizer: Adam
    q_optimizer: Adam

    @classmethod
    def create(cls, obs_dim: int, action_dim: int, cfg: RlConfig, seed: int) -> "ActorCritic":
        policy = GaussianPolicy(
            obs_dim,
            action_dim,
            cfg.policy_hidden,
            make_stream(seed, "policy.init"),
            log_std_min=cfg.log_std_min,
            log_std_max=cfg.log_std_max,
        )
        q = QNetwork(obs_dim, action_dim, cfg.q_hidden, make_stream(seed, "q.init"))
        q_target = QNetwork(obs_dim, action_dim, cfg.q_hidden, make_stream(seed, "q.init"))
        q_target.copy_from(q)
        return cls(
            policy=policy,
            q=q,
            q_target=q_target,
            policy_optimizer=Adam(policy.parameters(), lr=cfg.policy_lr, weight_decay=cfg.policy_weight_decay),
            q_optimizer=Adam(q.parameters(), lr=cfg.q_lr, weight_decay=cfg.q_weight_decay),
        )

    def modules(self) -> dict[str, Module]:
        return {"policy": self.policy, "q": self.q, "q_target": self.q_target}

    def optimizer_states(self) -> dict:
        return {"policy": self.policy_optimizer.state, "q": self.q_optimizer.state}


def soft_update(target: Module, online: Module, tau: float) -> None:
    """``target <- (1 - tau)·target + tau·online`` parameter-wise."""
    for t_param, o_param in zip(target.parameters(), online.parameters()):
        t_param.data = ((1.0 - tau) * t_param.data + tau * o_param.data).astype(t_param.dtype)


def td_targets(batch: TransitionBatch, nets: ActorCritic, cfg: RlConfig, rng: np.random.Generator) -> np.ndarray:
    with no_grad():
        next_actions = nets.policy.sample(batch.next_observations, batch.goals, rng)
        next_q = nets.q_target(batch.next_observations, next_actions, batch.goals).data
    rewards = cfg.reward_scale * batch.rewards
    return (rewards + cfg.gamma * (1.0 - batch.terminals) * next_q).astype(next_q.dtype)


def q_update(batch: TransitionBatch, nets: ActorCritic, cfg: RlConfig, rng: np.random.Generator) -> float:
    """One critic step; returns the TD loss before the step."""
    if len(batch) == 0:
        raise ValueError("q_update needs a nonempty batch")
    targets = td_targets(batch, nets, cfg, rng)
    nets.q_optimizer.zero_grad()
    prediction = nets.q(batch.observations, batch.actions, batch.goals)
    loss = ops.mse_loss(prediction, targets)
    loss.backward()
    nets.q_optimizer.step()
    soft_update(nets.q_target, nets.q, cfg.tau)
    return loss.item()


def advantage_weights(advantages: np.ndarray, temperature: float, clip: float) -> np.ndarray:
    """``clip(exp(A / temperature), 0, clip)``; overflow saturates at the clip."""
    scaled = np.minimum(np.asarray(advantages, dtype=np.float64) / temperature, np.log(clip) + 1.0)
    return np.clip(np.exp(scaled), 0.0, clip)


def policy_update(batch: TransitionBatch, nets: ActorCritic, cfg: RlConfig, rng: np.random.Generator) -> float:
    """One actor step; returns the weighted negative log-likelihood before the step."""
    if len(batch) == 0:
        raise ValueError("policy_update needs a nonempty batch")
    with no_grad():
        policy_actions = nets.policy.sample(batch.observations, batch.goals, rng)
        q_data = nets.q(batch.observations, batch.actions, batch.goals).data
        q_policy = nets.q(batch.observations, policy_actions, batch.goals).data
    weights = advantage_weights(q_data - q_policy, cfg.awac_lambda, cfg.weight_clip)
    nets.policy_optimizer.zero_grad()
    log_prob = nets.policy.log_prob(batch.observations, batch.goals, batch.actions)
    loss = -ops.mean(log_prob * weights.astype(log_prob.dtype))
    loss.backward()
    nets.policy_optimizer.step()
    return loss.item()
