"""Cell-centered grids, fields and discrete differential operators.

The habitat is an interval (0, a1) or a box (0, a1) x (0, a2), discretized
with uniform cell-centered finite differences.  Zero-flux boundaries are
imposed by ghost-cell reflection, which keeps the discrete Laplacian
symmetric and makes constants lie exactly in its kernel.  Those two facts
are load-bearing: every integral identity used downstream (total-mass
balance, summation by parts, the Rayleigh quotient) then holds exactly at
the discrete level, not just up to truncation error.

Conventions
-----------
* ``mean`` is the volume-weighted average over the habitat (uniform cells,
  so a plain average).
* ``dirichlet_energy`` is the volume-averaged squared gradient computed
  from face-centered differences; boundary faces carry zero flux and are
  excluded.  With these definitions ``mean(u * laplacian(v))`` equals
  ``-<face gradients of u, face gradients of v>`` exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import GridMismatch

__all__ = [
    "Grid",
    "Field",
    "ResourceBudget",
    "mean",
    "neumann_laplacian_apply",
    "dirichlet_energy",
    "laplacian_matrix",
    "field_to_csv",
    "field_from_csv",
]

MIN_CELLS_PER_AXIS = 4


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid on an interval or a box.

    Parameters
    ----------
    extents : tuple of float
        Side lengths (a1,) or (a1, a2); all positive.
    cells : tuple of int
        Number of cells per axis, at least 4 per axis.
    """

    extents: tuple
    cells: tuple

    def __post_init__(self):
        extents = tuple(float(a) for a in self.extents)
        cells = tuple(int(n) for n in self.cells)
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "cells", cells)
        if len(extents) not in (1, 2) or len(cells) != len(extents):
            raise ValueError("grid must be 1D or 2D with one cell count per axis")
        if any(a <= 0 for a in extents):
            raise ValueError(f"extents must be positive, got {extents}")
        if any(n < MIN_CELLS_PER_AXIS for n in cells):
            raise ValueError(f"need at least {MIN_CELLS_PER_AXIS} cells per axis, got {cells}")

    @property
    def dimension(self):
        return len(self.extents)

    @property
    def spacing(self):
        return tuple(a / n for a, n in zip(self.extents, self.cells))

    @property
    def cell_count(self):
        return int(np.prod(self.cells))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def volume(self):
        return float(np.prod(self.extents))

    def axis_centers(self, axis):
        """Cell-center coordinates along one axis."""
        h = self.spacing[axis]
        return (np.arange(self.cells[axis]) + 0.5) * h

    def coordinate_arrays(self):
        """Cell-center coordinates, shaped like a field (meshgrid in 2D)."""
        axes = [self.axis_centers(k) for k in range(self.dimension)]
        if self.dimension == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))


@dataclass(frozen=True)
class Field:
    """Real values attached to the cells of a grid.

    Values are stored as a read-only array shaped like ``grid.cells``;
    fields are immutable after construction and all operations return new
    fields.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != tuple(self.grid.cells):
            if vals.size == self.grid.cell_count:
                vals = vals.reshape(self.grid.cells)
            else:
                raise ValueError(
                    f"values shape {vals.shape} does not match grid cells {self.grid.cells}"
                )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def with_values(self, values):
        """New field on the same grid."""
        return Field(self.grid, values)

    def __eq__(self, other):
        return (
            isinstance(other, Field)
            and self.grid == other.grid
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class ResourceBudget:
    """Admissible-set parameters: pointwise cap ``kappa`` and prescribed
    mean ``m0``, with 0 < m0 < kappa."""

    m0: float
    kappa: float

    def __post_init__(self):
        if not (0.0 < self.m0 < self.kappa):
            raise ValueError(f"need 0 < m0 < kappa, got m0={self.m0}, kappa={self.kappa}")

    @property
    def fill_fraction(self):
        """Length fraction of a saturated block carrying the whole budget."""
        return self.m0 / self.kappa


def _same_grid(u, v):
    if u.grid != v.grid:
        raise GridMismatch(f"fields live on different grids: {u.grid} vs {v.grid}")


def mean(u: Field) -> float:
    """Volume-weighted average of a field over the habitat."""
    return float(np.mean(u.values))


def neumann_laplacian_apply(u: Field) -> Field:
    """Apply the zero-flux Laplacian to a field.

    Second-order central differences with ghost-cell reflection.  The mean
    of the input is subtracted before differencing; this is exact (the
    operator annihilates constants) and avoids the catastrophic
    cancellation that otherwise dominates when the field is a small
    perturbation of a constant.
    """
    vals = u.values - np.mean(u.values)
    out = np.zeros_like(vals)
    for axis in range(u.grid.dimension):
        h2 = u.grid.spacing[axis] ** 2
        padded = np.pad(vals, _pad_width(u.grid.dimension, axis), mode="edge")
        out += (_shift(padded, axis, 2) - 2.0 * vals + _shift(padded, axis, 0)) / h2
    return Field(u.grid, out)


def _pad_width(dim, axis):
    return [(1, 1) if k == axis else (0, 0) for k in range(dim)]


def _shift(padded, axis, start):
    index = [slice(None)] * padded.ndim
    index[axis] = slice(start, padded.shape[axis] - 2 + start)
    return padded[tuple(index)]


def dirichlet_energy(u: Field) -> float:
    """Volume-averaged squared gradient, from face-centered differences.

    Boundary faces are zero-flux and excluded.  Defined so that
    ``mean(u * neumann_laplacian_apply(u)) == -dirichlet_energy(u)``
    exactly (discrete summation by parts).
    """
    g = u.grid
    total = 0.0
    for axis in range(g.dimension):
        h = g.spacing[axis]
        d = np.diff(u.values, axis=axis) / h
        total += float(np.sum(d * d)) * g.cell_volume
    return total / g.volume


@lru_cache(maxsize=32)
def laplacian_matrix(grid: Grid) -> sp.csr_matrix:
    """Sparse matrix of the zero-flux Laplacian (C-order cell numbering).

    Symmetric, negative semidefinite, constants in the kernel.  Cached per
    grid; grids are immutable so sharing is safe.
    """
    blocks = []
    for axis in range(grid.dimension):
        n = grid.cells[axis]
        h2 = grid.spacing[axis] ** 2
        main = np.full(n, -2.0)
        main[0] = main[-1] = -1.0
        off = np.ones(n - 1)
        blocks.append(sp.diags([off, main, off], [-1, 0, 1]) / h2)
    if grid.dimension == 1:
        return blocks[0].tocsr()
    ix = sp.identity(grid.cells[0])
    iy = sp.identity(grid.cells[1])
    return (sp.kron(blocks[0], iy) + sp.kron(ix, blocks[1])).tocsr()


def field_to_csv(u: Field, path_or_buffer) -> None:
    """Write a field as CSV, one row per cell: coordinates then value."""
    coords = u.grid.coordinate_arrays()
    header = ["x", "value"] if u.grid.dimension == 1 else ["x", "y", "value"]
    own = isinstance(path_or_buffer, (str, bytes)) or hasattr(path_or_buffer, "__fspath__")
    handle = open(path_or_buffer, "w", newline="") if own else path_or_buffer
    try:
        writer = csv.writer(handle)
        writer.writerow(header)
        flat_coords = [c.ravel() for c in coords]
        flat_vals = u.values.ravel()
        for i in range(u.grid.cell_count):
            row = [format(c[i], ".17g") for c in flat_coords]
            row.append(format(flat_vals[i], ".17g"))
            writer.writerow(row)
    finally:
        if own:
            handle.close()


def field_from_csv(path_or_buffer) -> Field:
    """Load a field written by :func:`field_to_csv`.

    The uniform cell-centered grid is reconstructed from the coordinates:
    the first center sits at half a spacing, so extent = 2 * x0 * n / 1 is
    recovered from spacing and cell count per axis.
    """
    own = isinstance(path_or_buffer, (str, bytes)) or hasattr(path_or_buffer, "__fspath__")
    handle = open(path_or_buffer, "r", newline="") if own else path_or_buffer
    try:
        reader = csv.reader(handle)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader if row]
    finally:
        if own:
            handle.close()
    if len(header) not in (2, 3):
        raise ValueError(f"unrecognized field CSV header: {header}")
    data = np.asarray(rows)
    dim = len(header) - 1
    axes = []
    for k in range(dim):
        centers = np.unique(data[:, k])
        h = 2.0 * centers[0]
        n = len(centers)
        if n > 1:
            h = centers[1] - centers[0]
        if not np.allclose(np.diff(centers), h, rtol=1e-10, atol=1e-14):
            raise ValueError("coordinates are not a uniform cell-centered grid")
        axes.append((float(h * n), n))
    grid = Grid(tuple(a for a, _ in axes), tuple(n for _, n in axes))
    values = np.full(grid.cells, np.nan)
    spacing = grid.spacing
    for row in data:
        idx = tuple(int(round(row[k] / spacing[k] - 0.5)) for k in range(dim))
        values[idx] = row[-1]
    if np.any(np.isnan(values)):
        raise ValueError("field CSV does not cover every grid cell")
    return Field(grid, values)


def csv_round_trip_text(u: Field) -> str:
    """Serialize a field to CSV text (used by reports and tests)."""
    buf = io.StringIO()
    field_to_csv(u, buf)
    return buf.getvalue()
