"""Perturbation test of the autoregressive mask construction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from affordance.model import AffordanceModel
from autodiff.rng import make_stream
from autodiff.tensor import no_grad


@dataclass(slots=True)
class CausalityReport:
    """
    Attributes:
        max_violation (float): largest logit change at a position <= the perturbed one
        trials (int): number of perturbations tried
        positions (list[int]): raster position perturbed in each trial
        later_changed (int): trials in which some later position did change
    """

    max_violation: float
    trials: int
    positions: list[int]
    later_changed: int


def causality_check(
    model: AffordanceModel,
    trials: int = 20,
    seed: int = 0,
    positions: list[int] | None = None,
) -> CausalityReport:
    """
    Perturb one token and measure logit changes at the same or earlier positions.

    ``positions`` fixes the perturbed raster positions; otherwise they are drawn
    uniformly, always including the first and the last position.
    """
    rng = make_stream(seed, "causality")
    grid, cells = model.grid, model.positions
    if positions is None:
        drawn = rng.integers(0, cells, size=max(trials - 2, 0)).tolist()
        positions = [0, cells - 1, *drawn][:trials]
    worst = 0.0
    later_changed = 0
    with no_grad():
        for position in positions:
            targets = rng.integers(0, model.codebook_size, size=(1, grid, grid))
            z0 = model.codebook[rng.integers(0, model.codebook_size, size=(1, grid, grid))]
            base = model.forward(targets, z0).data.reshape(cells, -1)
            perturbed = targets.copy()
            row, col = divmod(position, grid)
            perturbed[0, row, col] = (perturbed[0, row, col] + 1 + rng.integers(0, model.codebook_size - 1)) % model.codebook_size
            moved = model.forward(perturbed, z0).data.reshape(cells, -1)
            change = np.abs(moved - base).max(axis=1)
            worst = max(worst, float(change[: position + 1].max()))
            if position < cells - 1 and change[position + 1 :].max() > 0:
                later_changed += 1
    return CausalityReport(max_violation=worst, trials=len(positions), positions=list(positions), later_changed=later_changed)
