"""Standard resource distributions used as solver inputs and optimizer starts.

All constructors return admissible fields: values in [0, kappa] with mean
exactly m0 (cells straddling a block edge get the fractional value, so the
budget is met to round-off even when edges fall inside a cell).
"""

from __future__ import annotations

import numpy as np

from .grid import Field, Grid, ResourceBudget

__all__ = [
    "constant_resource",
    "single_crenel",
    "double_crenel",
    "block_resource",
    "slab_resource",
    "random_bang_bang",
]


def constant_resource(grid: Grid, budget: ResourceBudget) -> Field:
    return Field(grid, np.full(grid.cells, budget.m0))


def _interval_coverage(grid, axis, lo, hi):
    """Fraction of each cell along `axis` covered by the interval (lo, hi)."""
    h = grid.spacing[axis]
    left = np.arange(grid.cells[axis]) * h
    right = left + h
    overlap = np.clip(np.minimum(right, hi) - np.maximum(left, lo), 0.0, None)
    return overlap / h


def block_resource(grid: Grid, budget: ResourceBudget, start: float, axis: int = 0) -> Field:
    """Single saturated block of length fraction m0/kappa starting at `start`
    (as a fraction of the axis extent)."""
    extent = grid.extents[axis]
    length = budget.fill_fraction * extent
    if start < -1e-12 or start * extent + length > extent * (1 + 1e-12):
        raise ValueError(f"block starting at {start} does not fit in the habitat")
    cov = _interval_coverage(grid, axis, start * extent, start * extent + length)
    return _from_axis_profile(grid, axis, budget.kappa * cov)


def single_crenel(grid: Grid, budget: ResourceBudget, side: str = "right", axis: int = 0) -> Field:
    """Boundary-anchored saturated block (the step profile)."""
    if side == "right":
        return block_resource(grid, budget, 1.0 - budget.fill_fraction, axis)
    if side == "left":
        return block_resource(grid, budget, 0.0, axis)
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def double_crenel(grid: Grid, budget: ResourceBudget, axis: int = 0) -> Field:
    """Symmetric double block: half the budget against each end of the axis.

    This is the compressed image of the boundary step under one even
    reflection, so its population functional at diffusivity mu equals the
    step's at 4*mu.
    """
    extent = grid.extents[axis]
    half = 0.5 * budget.fill_fraction * extent
    cov = _interval_coverage(grid, axis, 0.0, half)
    cov += _interval_coverage(grid, axis, extent - half, extent)
    return _from_axis_profile(grid, axis, budget.kappa * cov)


def slab_resource(grid: Grid, budget: ResourceBudget, side: str = "right", axis: int = 0) -> Field:
    """Alias of single_crenel; reads better for 2D slabs."""
    return single_crenel(grid, budget, side=side, axis=axis)


def _from_axis_profile(grid, axis, profile):
    if grid.dimension == 1:
        return Field(grid, profile)
    shape = [1, 1]
    shape[axis] = grid.cells[axis]
    return Field(grid, np.broadcast_to(profile.reshape(shape), grid.cells).copy())


def random_bang_bang(grid: Grid, budget: ResourceBudget, rng: np.random.Generator) -> Field:
    """Random saturated/empty pattern with mean exactly m0.

    floor(N * m0/kappa) random cells are saturated and one extra cell gets
    the fractional remainder of the budget.
    """
    n = grid.cell_count
    target = budget.fill_fraction * n
    k = int(np.floor(target))
    order = rng.permutation(n)
    values = np.zeros(n)
    values[order[:k]] = budget.kappa
    if k < n:
        values[order[k]] = budget.kappa * (target - k)
    return Field(grid, values.reshape(grid.cells))
