"""Derivatives of the total population with respect to the resource field.

All linearized systems share the operator mu*L + diag(m - 2*theta), which is
symmetric and negative definite at the stable steady state.  The adjoint
state p solves

    mu * Lap(p) + (m - 2*theta) * p = 1,   zero flux,

and the first derivative of the population in direction h is
mean(h * g) with gradient density g = -theta * p.  Because the same
symmetric matrix drives both the tangent and the adjoint solves, the two
expressions of the derivative agree to linear-solver accuracy, not just to
discretization error.

The switching function phi = theta * p encodes first-order optimality:
at a maximizer there is a level c with phi < c where the resource is
saturated and phi > c where it vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import solve_shifted_laplacian
from .errors import GridMismatch
from .grid import Field, ResourceBudget, mean, neumann_laplacian_apply
from .steady import SteadyState

__all__ = [
    "AdjointState",
    "SwitchingFunction",
    "solve_adjoint",
    "gradient_density",
    "directional_derivatives",
    "mixed_second_derivative",
    "switching_function",
    "estimate_switching_level",
    "switching_residual",
    "OptimalityMeasures",
    "measure_optimality",
]

ADJOINT_TOL = 1e-9


@dataclass(frozen=True)
class AdjointState:
    p: Field
    mu: float
    residual_inf: float


@dataclass(frozen=True)
class SwitchingFunction:
    """Pointwise product theta * p, with an optional multiplier estimate."""

    phi: Field
    level_c: float | None = None


def _linearized_solve(m, state, rhs, context):
    grid = state.grid
    diag = (m.values - 2.0 * state.theta.values).ravel()
    x = solve_shifted_laplacian(grid, state.mu, diag, rhs.ravel(), context=context)
    return x.reshape(grid.cells)


def _linearized_residual(m, state, x, rhs):
    grid = state.grid
    lap = neumann_laplacian_apply(Field(grid, x)).values
    return state.mu * lap + (m.values - 2.0 * state.theta.values) * x - rhs


def solve_adjoint(m: Field, state: SteadyState) -> AdjointState:
    """Solve the adjoint equation for the converged steady state."""
    _check_pair(m, state)
    rhs = np.ones(state.grid.cells)
    p = _linearized_solve(m, state, rhs, "adjoint solve")
    res = _linearized_residual(m, state, p, rhs)
    return AdjointState(
        p=Field(state.grid, p),
        mu=state.mu,
        residual_inf=float(np.max(np.abs(res))),
    )


def gradient_density(state: SteadyState, adjoint: AdjointState) -> Field:
    """Gradient density g = -theta * p, so dPopulation[h] = mean(h * g)."""
    return Field(state.grid, -state.theta.values * adjoint.p.values)


def directional_derivatives(m: Field, state: SteadyState, h: Field):
    """First and second directional derivatives of the population.

    Solves the tangent system for theta_dot with right side -h*theta, then
    the second-order system with right side -2*(h*theta_dot - theta_dot^2);
    returns (mean(theta_dot), mean(theta_ddot)).
    """
    _check_pair(m, state)
    if h.grid != state.grid:
        raise GridMismatch("direction field lives on a different grid")
    theta = state.theta.values
    theta_dot = _linearized_solve(m, state, -h.values * theta, "tangent solve")
    rhs2 = -2.0 * (h.values * theta_dot - theta_dot**2)
    theta_ddot = _linearized_solve(m, state, rhs2, "second-order solve")
    return float(np.mean(theta_dot)), float(np.mean(theta_ddot))


def mixed_second_derivative(m: Field, state: SteadyState, h1: Field, h2: Field) -> float:
    """Bilinear second derivative B(h1, h2), symmetric by construction.

    Matches the polarization of the diagonal second derivatives:
    d2[h1+h2] - d2[h1] - d2[h2] = 2 * B(h1, h2).
    """
    _check_pair(m, state)
    theta = state.theta.values
    dot1 = _linearized_solve(m, state, -h1.values * theta, "tangent solve")
    dot2 = _linearized_solve(m, state, -h2.values * theta, "tangent solve")
    rhs = -(h1.values * dot2 + h2.values * dot1 - 2.0 * dot1 * dot2)
    cross = _linearized_solve(m, state, rhs, "mixed second-order solve")
    return float(np.mean(cross))


def switching_function(state: SteadyState, adjoint: AdjointState,
                       level_c: float | None = None) -> SwitchingFunction:
    return SwitchingFunction(
        phi=Field(state.grid, state.theta.values * adjoint.p.values),
        level_c=level_c,
    )


def estimate_switching_level(m: Field, phi: Field, budget: ResourceBudget) -> float:
    """Candidate multiplier level: the (m0/kappa)-quantile of phi.

    At an optimum the sublevel set {phi < c} carries the saturated cells,
    whose volume fraction is m0/kappa; the quantile is robust to plateaus
    where root-finding on the measure function would stall.
    """
    return float(np.quantile(phi.values, budget.fill_fraction))


def _cellwise_gradients(grid, vals):
    spacings = grid.spacing
    if grid.dimension == 1:
        return [np.gradient(vals, spacings[0], edge_order=2)]
    return list(np.gradient(vals, *spacings, edge_order=2))


def switching_residual(m: Field, state: SteadyState, adjoint: AdjointState) -> Field:
    """Diagnostic residual of the PDE satisfied by phi = theta * p.

    Evaluated with cell-centered gradients; converges to zero under grid
    refinement but is not used as a convergence criterion.
    """
    grid = state.grid
    theta = state.theta.values
    phi = theta * adjoint.p.values
    mu = state.mu
    lap_phi = neumann_laplacian_apply(Field(grid, phi)).values
    grad_phi = _cellwise_gradients(grid, phi)
    grad_theta = _cellwise_gradients(grid, theta)
    cross = sum(gp * gt for gp, gt in zip(grad_phi, grad_theta)) / theta
    grad_theta_sq = sum(gt * gt for gt in grad_theta)
    res = (
        mu * lap_phi
        - 2.0 * mu * cross
        + phi * (2.0 * mu * grad_theta_sq / theta**2 + 2.0 * m.values - 3.0 * theta)
        - theta
    )
    return Field(grid, res)


@dataclass(frozen=True)
class OptimalityMeasures:
    """Level-set structure of a candidate optimum."""

    level_c: float
    violation_fraction: float
    bang_bang_fraction: float
    saturated_fraction: float
    intermediate_fraction: float
    band_width: float


def measure_optimality(m: Field, phi: Field, budget: ResourceBudget,
                       level_c: float | None = None) -> OptimalityMeasures:
    """Measure how well (m, phi) satisfies the bang-bang level-set structure.

    A cell violates the structure when it is saturated but phi sits above
    the level, empty but phi sits below it, or intermediate with phi away
    from the level.  The tolerance band scales with the grid variation of
    phi, since on a grid the level set {phi = c} is generically empty.
    """
    if level_c is None:
        level_c = estimate_switching_level(m, phi, budget)
    phi_vals = phi.values
    step = 0.0
    for axis in range(m.grid.dimension):
        d = np.abs(np.diff(phi_vals, axis=axis))
        if d.size:
            step = max(step, float(np.max(d)))
    band = 2.0 * step + 1e-12 * (float(np.ptp(phi_vals)) + 1.0)

    kappa = budget.kappa
    tol_m = 1e-9 * kappa
    hi = m.values >= kappa - tol_m
    lo = m.values <= tol_m
    mid = ~(hi | lo)
    bad = (hi & (phi_vals > level_c + band)) | (lo & (phi_vals < level_c - band))
    bad |= mid & (np.abs(phi_vals - level_c) > band)
    return OptimalityMeasures(
        level_c=level_c,
        violation_fraction=float(np.mean(bad)),
        bang_bang_fraction=float(np.mean(hi | lo)),
        saturated_fraction=float(np.mean(hi | lo)),
        intermediate_fraction=float(np.mean(mid)),
        band_width=band,
    )


def _check_pair(m: Field, state: SteadyState):
    if m.grid != state.grid:
        raise GridMismatch("resource and steady state live on different grids")
