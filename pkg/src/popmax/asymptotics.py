"""Large-diffusivity expansion of the steady density and the population.

As mu grows, theta = m0 + (f1 + c1)/mu + (f2 + c2)/mu^2 + ... where each
correction field fk has zero mean and each scalar ck is fixed by the
integral balance of the equation.  The corrections solve a cascade of
zero-flux Poisson problems:

    Lap(f1) = -m0 * (m - m0)
    Lap(f2) = -(m - 2*m0) * (f1 + c1)
    Lap(f_{k+1}) = -[(m - 2*m0) * e_k - sum_{l=1}^{k-1} e_l * e_{k-l}],

with e_k = fk + ck, and the scalars obey

    c1 = mean(|grad f1|^2) / m0^2,
    c_{k+1} = [mean(m * f_{k+1}) - sum_{l=1}^{k} mean(e_l * e_{k+1-l})] / m0.

The population expands as m0 + c1/mu + c2/mu^2 + ...; the first-order
coefficient c1 is the limiting objective: it is convex in m, its maximizers
are saturated/empty patterns, and it equals -2/m0^2 times the minimum of
the quadratic energy E(u) = mean(|grad u|^2)/2 - m0*mean(m*u) over
zero-mean u.

Every scalar is chosen exactly so the next Poisson right side has zero
mean; a nonzero mean beyond round-off therefore signals an implementation
bug, not bad data, and raises GaugeViolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import poisson_solve_zero_mean
from .errors import GaugeViolation, NonZeroMean
from .grid import Field, Grid, ResourceBudget, dirichlet_energy, mean

__all__ = [
    "ExpansionCoefficients",
    "solve_neumann_poisson",
    "first_order_response",
    "first_order_coefficient",
    "first_order_gradient",
    "diffusivity_expansion",
    "limit_energy",
    "maximize_limit_functional",
]

MEAN_MATCH_TOL = 1e-10
COMPATIBILITY_RTOL = 1e-9


@dataclass(frozen=True)
class ExpansionCoefficients:
    """Cascade output: zero-mean correction fields and scalar coefficients.

    ``fields[k]`` and ``coefficients[k]`` are the order-k terms; index 0
    holds the zero field and the mean resource level.
    """

    fields: tuple
    coefficients: tuple
    order: int

    def population_partial_sum(self, mu: float, order: int | None = None) -> float:
        kmax = self.order if order is None else order
        return sum(self.coefficients[k] / mu**k for k in range(kmax + 1))

    def density_partial_sum(self, mu: float, order: int | None = None) -> Field:
        kmax = self.order if order is None else order
        grid = self.fields[0].grid
        total = np.zeros(grid.cells)
        for k in range(kmax + 1):
            total += (self.fields[k].values + self.coefficients[k]) / mu**k
        return Field(grid, total)


def solve_neumann_poisson(grid: Grid, rhs: Field, rtol: float = COMPATIBILITY_RTOL) -> Field:
    """Zero-mean solution of Lap(u) = rhs with zero-flux boundaries.

    The right side must have zero mean up to rtol * scale (solvability of
    the singular problem); the gauge is fixed by pinning one degree of
    freedom and re-centering.
    """
    scale = max(1.0, float(np.max(np.abs(rhs.values))))
    if abs(mean(rhs)) > rtol * scale:
        raise GaugeViolation(
            f"Poisson right side has mean {mean(rhs):.3e} (scale {scale:.3e}); "
            "the zero-flux problem is not solvable"
        )
    u = poisson_solve_zero_mean(grid, rhs.values)
    return Field(grid, u.reshape(grid.cells))


def _check_budget(m: Field, budget: ResourceBudget):
    drift = abs(mean(m) - budget.m0)
    if drift > MEAN_MATCH_TOL * max(1.0, budget.kappa):
        raise GaugeViolation(
            f"resource mean {mean(m):.12e} differs from budget m0={budget.m0} "
            f"by {drift:.3e}; the first-order right side would be incompatible"
        )


def first_order_response(m: Field, budget: ResourceBudget) -> Field:
    """Zero-mean first-order correction field of the expansion."""
    _check_budget(m, budget)
    rhs = Field(m.grid, -budget.m0 * (m.values - budget.m0))
    return solve_neumann_poisson(m.grid, rhs)


def first_order_coefficient(m: Field, budget: ResourceBudget) -> float:
    """First-order population coefficient (the limiting objective)."""
    f1 = first_order_response(m, budget)
    return dirichlet_energy(f1) / budget.m0**2


def first_order_gradient(m: Field, budget: ResourceBudget) -> Field:
    """Gradient density of the limiting objective: (2/m0) * f1.

    Follows from self-adjointness of the Poisson solve; an additive
    constant is immaterial under the budget constraint.
    """
    f1 = first_order_response(m, budget)
    return Field(m.grid, (2.0 / budget.m0) * f1.values)


def diffusivity_expansion(m: Field, budget: ResourceBudget, order: int,
                          mu_hint: float | None = None) -> ExpansionCoefficients:
    """Run the cascade up to the requested order.

    mu_hint, when given, is only used to warn about evaluating the series
    where successive terms no longer decrease.
    """
    if order < 1:
        raise ValueError(f"expansion order must be >= 1, got {order}")
    _check_budget(m, budget)
    grid = m.grid
    m0 = budget.m0
    m_vals = m.values

    fields = [Field(grid, np.zeros(grid.cells))]
    coeffs = [m0]
    f1 = first_order_response(m, budget)
    fields.append(f1)
    coeffs.append(dirichlet_energy(f1) / m0**2)

    full = [np.full(grid.cells, m0), f1.values + coeffs[1]]
    for k in range(1, order):
        rhs_vals = (m_vals - 2.0 * m0) * full[k]
        for ell in range(1, k):
            rhs_vals = rhs_vals - full[ell] * full[k - ell]
        rhs = Field(grid, -rhs_vals)
        fk1 = solve_neumann_poisson(grid, rhs)
        ck1 = float(np.mean(m_vals * fk1.values))
        for ell in range(1, k + 1):
            ck1 -= float(np.mean(full[ell] * full[k + 1 - ell]))
        ck1 /= m0
        fields.append(fk1)
        coeffs.append(ck1)
        full.append(fk1.values + ck1)

    if mu_hint is not None and order >= 2:
        terms = [abs(coeffs[k]) / mu_hint**k for k in range(1, order + 1)]
        if any(b > a for a, b in zip(terms, terms[1:])):
            import warnings

            warnings.warn(
                f"expansion terms do not decrease at mu={mu_hint}; "
                "the series may be evaluated outside its useful range"
            )
    return ExpansionCoefficients(fields=tuple(fields), coefficients=tuple(coeffs), order=order)


def limit_energy(m: Field, u: Field, budget: ResourceBudget) -> float:
    """Quadratic energy whose minimum over zero-mean fields encodes the
    limiting objective: E(u) = mean(|grad u|^2)/2 - m0 * mean(m*u)."""
    scale = 1.0 + float(np.max(np.abs(u.values)))
    if abs(mean(u)) > 1e-9 * scale:
        raise NonZeroMean(f"energy argument must have zero mean, got {mean(u):.3e}")
    return 0.5 * dirichlet_energy(u) - budget.m0 * mean(Field(m.grid, m.values * u.values))


def maximize_limit_functional(budget: ResourceBudget, optimizer_cfg, grid: Grid) -> Field:
    """Maximize the limiting objective over the admissible set.

    Projected gradient ascent with the exact gradient (2/m0)*f1 and
    monotone-rearrangement polishing; the result is a saturated/empty
    pattern, monotone along each axis up to reflection.
    """
    from .optimize import maximize_generic

    def objective(m_field, _warm):
        f1 = first_order_response(m_field, budget)
        value = dirichlet_energy(f1) / budget.m0**2
        grad = Field(grid, (2.0 / budget.m0) * f1.values)
        return value, grad, None

    result = maximize_generic(objective, budget, optimizer_cfg, grid)
    return result.m_star
