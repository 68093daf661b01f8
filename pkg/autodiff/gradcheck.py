"""
gradcheck.py

Central finite-difference checks of analytic gradients.

The caller provides a closure that rebuilds the scalar loss from the current
parameter values. Checks are meant to run inside ``default_dtype(np.float64)``
with float64 parameters.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from autodiff.tensor import Tensor, no_grad

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class GradCheckReport:
    """Per-parameter relative errors between analytic and numeric gradients."""

    epsilon: float
    tolerance: float
    errors: dict[str, float] = field(default_factory=dict)
    exempt: tuple[str, ...] = ()

    @property
    def max_rel_error(self) -> float:
        """Largest error over parameters that are not exempt."""
        checked = [err for name, err in self.errors.items() if not self._is_exempt(name)]
        return max(checked, default=0.0)

    @property
    def max_rel_error_all(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def _is_exempt(self, name: str) -> bool:
        return any(name == prefix or name.startswith(f"{prefix}.") for prefix in self.exempt)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """``|a - n| / (|a| + |n|)`` using Euclidean norms; 0 when both vanish."""
    denom = float(np.linalg.norm(analytic) + np.linalg.norm(numeric))
    if denom < 1e-12:
        return 0.0
    return float(np.linalg.norm(analytic - numeric)) / denom


def finite_difference_check(
    build_loss: Callable[[], Tensor],
    params: Iterable[tuple[str, Tensor]],
    epsilon: float = 1e-5,
    tolerance: float = 1e-4,
    exempt: Sequence[str] = (),
    max_elements: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """
    Compare ``build_loss``'s analytic gradients against central differences.

    Args:
        build_loss: Rebuilds the scalar loss from the current parameter values
        params: (name, tensor) pairs to check, e.g. ``module.named_parameters()``
        epsilon: Finite-difference step
        tolerance: Pass threshold for ``report.passed``
        exempt: Parameter names (or dotted prefixes) reported but not held to tolerance
        max_elements: If set, check a seeded random subset of each parameter's entries

    Returns:
        GradCheckReport: Max relative error per parameter
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    named = list(params)
    for _, param in named:
        param.zero_grad()
    build_loss().backward()

    rng = np.random.default_rng(seed)
    report = GradCheckReport(epsilon=epsilon, tolerance=tolerance, exempt=tuple(exempt))
    for name, param in named:
        analytic_full = param.grad if param.grad is not None else np.zeros_like(param.data)
        param.data = np.ascontiguousarray(param.data)
        flat = param.data.reshape(-1)
        indices = np.arange(flat.size)
        if max_elements is not None and flat.size > max_elements:
            indices = np.sort(rng.choice(flat.size, size=max_elements, replace=False))
        numeric = np.empty(indices.size, dtype=np.float64)
        with no_grad():
            for slot, index in enumerate(indices):
                original = flat[index]
                flat[index] = original + epsilon
                plus = build_loss().item()
                flat[index] = original - epsilon
                minus = build_loss().item()
                flat[index] = original
                numeric[slot] = (plus - minus) / (2.0 * epsilon)
        analytic = analytic_full.reshape(-1)[indices].astype(np.float64)
        report.errors[name] = relative_error(analytic, numeric)
        logger.debug("gradcheck %s: rel_error=%.3e over %d entries", name, report.errors[name], indices.size)
    return report
