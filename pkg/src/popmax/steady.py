"""Steady states of the logistic-diffusion habitat model.

The density theta solves

    mu * Lap(theta) + theta * (m - theta) = 0,   zero flux on the boundary,

with m >= 0 the resource distribution and mu > 0 the diffusivity.  The
positive solution is the one of interest (theta = 0 always solves the
equation); the solver guards against collapsing onto it.

Solution strategy: damped Newton iteration on the discrete residual with
Jacobian mu*L + diag(m - 2*theta), started from the constant mean(m).  The
problem stiffens sharply as mu decreases, so on failure the solver restarts
with a continuation ramp that walks mu down geometrically from an easy
value, warm-starting each stage.

The residual is evaluated with the mean subtracted inside the Laplacian
(exact, since constants are in the kernel); without this the infinity-norm
tolerance is unreachable in float64 at large mu on fine grids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import solve_shifted_laplacian
from .errors import ExtinctionDetected, NoConvergence, NonPositiveResource
from .grid import Field, dirichlet_energy, mean, neumann_laplacian_apply

__all__ = [
    "SteadyState",
    "solve_steady_state",
    "total_population",
    "population_identity_check",
    "diagnostics_text",
]

DEFAULT_TOL = 1e-10
MAX_NEWTON_ITERS = 80
COLLAPSE_FRACTION = 1e-8
CONTINUATION_START = 1.0
CONTINUATION_FACTOR = 0.5


@dataclass(frozen=True)
class SteadyState:
    """Converged density plus solver diagnostics."""

    theta: Field
    mu: float
    residual_inf: float
    newton_iters: int
    residual_history: tuple = ()

    @property
    def grid(self):
        return self.theta.grid


def _laplacian_vals(grid, vals):
    return neumann_laplacian_apply(Field(grid, vals)).values


def _residual(grid, m_vals, mu, theta_vals):
    return mu * _laplacian_vals(grid, theta_vals) + theta_vals * (m_vals - theta_vals)


def _residual_floor(grid, mu, theta_vals):
    """Round-off floor of the infinity-norm residual in float64."""
    eps = np.finfo(float).eps
    h2 = min(h * h for h in grid.spacing)
    spread = float(np.max(np.abs(theta_vals - theta_vals.mean()))) + np.max(np.abs(theta_vals)) * 1e-3
    lap_noise = 6.0 * mu * eps * spread / h2
    reaction_noise = 4.0 * eps * float(np.max(np.abs(theta_vals))) ** 2
    return lap_noise + reaction_noise


def _newton(grid, m_vals, mu, theta0, tol, max_iters):
    """Damped Newton; returns (theta, history, converged)."""
    theta = theta0.copy()
    history = []
    res = _residual(grid, m_vals, mu, theta)
    rnorm = float(np.max(np.abs(res)))
    history.append(rnorm)
    for _ in range(max_iters):
        if rnorm <= tol:
            return theta, history, True
        if len(history) >= 4 and rnorm <= 8.0 * _residual_floor(grid, mu, theta):
            if rnorm >= 0.5 * history[-4]:
                # Stagnating at the float64 rounding floor; accept.
                return theta, history, True
        delta = solve_shifted_laplacian(
            grid, mu, (m_vals - 2.0 * theta).ravel(), -res.ravel(), context="Newton step"
        ).reshape(grid.cells)
        alpha = 1.0
        accepted = False
        while alpha >= 1e-8:
            cand = theta + alpha * delta
            if np.min(cand) > 0.0:
                cand_res = _residual(grid, m_vals, mu, cand)
                cand_norm = float(np.max(np.abs(cand_res)))
                if cand_norm < (1.0 - 1e-4 * alpha) * rnorm or cand_norm <= tol:
                    theta, res, rnorm = cand, cand_res, cand_norm
                    history.append(rnorm)
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            return theta, history, False
        if np.max(theta) < COLLAPSE_FRACTION * max(np.max(m_vals), 1e-300):
            return theta, history, False
    return theta, history, rnorm <= tol


def _check_extinction(m: Field, mu: float):
    from .spectral import principal_eigenvalue  # deferred: spectral is independent of this module

    pair = principal_eigenvalue(m, mu)
    if pair.lambda1 <= 1e-12:
        raise ExtinctionDetected(
            f"density collapsed toward zero and lambda1={pair.lambda1:.6e} <= 0: "
            "the habitat cannot sustain a positive steady state",
            lambda1=pair.lambda1,
        )


def solve_steady_state(m: Field, mu: float, init: Field | None = None,
                       tol: float = DEFAULT_TOL,
                       enforce_nonnegative_resource: bool = True) -> SteadyState:
    """Solve for the positive steady density.

    Parameters
    ----------
    m : Field
        Resource distribution, nonnegative with positive mean.
    mu : float
        Diffusivity, positive.
    init : Field, optional
        Warm start; defaults to the constant mean(m).
    tol : float
        Infinity-norm residual tolerance.
    enforce_nonnegative_resource : bool
        Escape hatch for experimentation with signed resources; when
        disabled, collapse onto the zero state raises ExtinctionDetected
        with the principal eigenvalue attached.

    Raises
    ------
    NonPositiveResource, NoConvergence, ExtinctionDetected
    """
    if mu <= 0:
        raise ValueError(f"diffusivity must be positive, got {mu}")
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    m_vals = m.values
    if enforce_nonnegative_resource and np.min(m_vals) < 0:
        raise NonPositiveResource(f"resource has negative values (min {np.min(m_vals):.3e})")
    if np.mean(m_vals) <= 0:
        raise NonPositiveResource(f"resource mean must be positive, got {np.mean(m_vals):.3e}")

    grid = m.grid
    base = max(float(np.mean(m_vals)), 1e-12)
    theta0 = init.values.copy() if init is not None else np.full(grid.cells, base)
    if np.min(theta0) <= 0:
        theta0 = np.full(grid.cells, base)

    attempts = [("direct", mu, theta0)]
    if init is not None:
        attempts.append(("restart", mu, np.full(grid.cells, base)))

    total_iters = 0
    history_all = []
    for label, mu_try, start in attempts:
        theta, history, ok = _newton(grid, m_vals, mu_try, start, tol, MAX_NEWTON_ITERS)
        total_iters += len(history) - 1
        history_all.extend(history)
        if ok and np.max(theta) >= COLLAPSE_FRACTION * max(np.max(m_vals), 1e-300):
            return _finish(m, mu, theta, history_all, total_iters)
        if np.max(theta) < COLLAPSE_FRACTION * max(np.max(m_vals), 1e-300):
            _check_extinction(m, mu)

    # Continuation ramp in mu from an easy value down to the target.
    mu_k = max(CONTINUATION_START, mu)
    theta = np.full(grid.cells, base)
    while True:
        theta, history, ok = _newton(grid, m_vals, mu_k, theta, tol, MAX_NEWTON_ITERS)
        total_iters += len(history) - 1
        history_all.extend(history)
        if not ok:
            if np.max(theta) < COLLAPSE_FRACTION * max(np.max(m_vals), 1e-300):
                _check_extinction(m, mu)
            raise NoConvergence(
                f"Newton stalled at mu={mu_k:.6g} with residual {history[-1]:.3e} "
                f"(target mu={mu:.6g}, tol={tol:.1e})",
                residual=history[-1],
            )
        if mu_k <= mu:
            return _finish(m, mu, theta, history_all, total_iters)
        mu_k = max(mu, mu_k * CONTINUATION_FACTOR)


def _finish(m, mu, theta, history, iters):
    grid = m.grid
    res = _residual(grid, m.values, mu, theta)
    return SteadyState(
        theta=Field(grid, theta),
        mu=mu,
        residual_inf=float(np.max(np.abs(res))),
        newton_iters=iters,
        residual_history=tuple(history),
    )


def total_population(state: SteadyState) -> float:
    """Average density over the habitat (the quantity being maximized)."""
    return mean(state.theta)


def population_identity_check(state: SteadyState, m: Field) -> float:
    """Residual of the integral identity
    total_population = mean(m) + mu * mean(|grad theta|^2 / theta^2).

    The gradient term is discretized independently of the solver (squared
    face differences averaged back to cells), so this is a real consistency
    check rather than an algebraic tautology; it converges at first order
    or better under grid refinement.
    """
    theta = state.theta.values
    grid = state.grid
    grad2 = np.zeros_like(theta)
    for axis in range(grid.dimension):
        h = grid.spacing[axis]
        d2 = (np.diff(theta, axis=axis) / h) ** 2
        pad = [(0, 0)] * grid.dimension
        pad[axis] = (1, 0)
        left = np.pad(d2, pad)
        pad[axis] = (0, 1)
        right = np.pad(d2, pad)
        grad2 += 0.5 * (left + right)
    lhs = total_population(state)
    rhs = mean(m) + state.mu * float(np.mean(grad2 / theta**2))
    return abs(lhs - rhs)


def diagnostics_text(state: SteadyState) -> str:
    """Structured text record of a solve: iterations and residual history."""
    lines = [
        f"mu {state.mu:.17g}",
        f"newton_iters {state.newton_iters}",
        f"residual_inf {state.residual_inf:.6e}",
        "residual_history " + " ".join(f"{r:.6e}" for r in state.residual_history),
    ]
    return "\n".join(lines) + "\n"
