"""Maximization of the population over the admissible resource patterns.

The admissible set is {0 <= m <= kappa, mean(m) = m0}: a box intersected
with a hyperplane.  Euclidean projection onto it is clip(m + s, 0, kappa)
with the scalar shift s found by bisection, so projected gradient ascent
with the exact adjoint gradient is cheap and keeps every iterate feasible.

Two practical devices matter here:

* Multi-start.  The objective is strictly convex at large diffusivity and
  genuinely multimodal at small diffusivity; a fixed set of structured
  starts plus a seeded random pattern covers both regimes.
* Monotone-rearrangement polishing.  Saturated patterns that match the
  level sets of their own gradient are exact fixed points of projected
  ascent even when they are not global maximizers.  Rearranging the
  pattern into a monotone profile never costs anything at large
  diffusivity and is accepted only when it strictly improves the
  objective, so ascent is preserved and stationary-but-suboptimal patterns
  are escaped.

The constant pattern is the global *minimizer* and a critical point, so
the "constant" start receives a small seeded perturbation before ascent.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import InfeasibleBudget, PopmaxError
from .grid import Field, Grid, ResourceBudget, mean
from .profiles import constant_resource, double_crenel, random_bang_bang, single_crenel
from .rearrange import RearrangementPlan, rearranged
from .sensitivity import (
    OptimalityMeasures,
    estimate_switching_level,
    gradient_density,
    measure_optimality,
    solve_adjoint,
    switching_function,
)
from .steady import solve_steady_state, total_population

__all__ = [
    "OptimizerConfig",
    "OptimizationResult",
    "StartRecord",
    "project_onto_admissible",
    "maximize",
    "maximize_generic",
    "certify",
    "CertificationReport",
    "default_cells_1d",
]

DEFAULT_STARTS = ("constant", "crenel-left", "crenel-right", "double-crenel", "random-bang-bang")


@dataclass(frozen=True)
class OptimizerConfig:
    """Projected-ascent controls; all tolerances positive."""

    max_iters: int = 5000
    step_grow: float = 2.0
    step_shrink: float = 0.5
    min_step: float = 1e-14
    projection_tol: float = 1e-13
    gradient_rtol: float = 1e-8
    starts: tuple = DEFAULT_STARTS
    seed: int = 1234
    polish_with_rearrangement: bool = True
    solver_tol: float = 1e-10
    cells_cap: int = 10_000

    def __post_init__(self):
        for name in ("step_grow", "step_shrink", "min_step", "projection_tol",
                     "gradient_rtol", "solver_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass(frozen=True)
class StartRecord:
    name: str
    objective: float | None
    iterations: int
    projected_gradient: float | None
    error: str = ""


@dataclass(frozen=True)
class CertificationReport:
    measures: OptimalityMeasures
    objective: float
    violation_ok: bool
    bang_bang_ok: bool
    saturation_ok: bool
    violation_tol: float
    bang_bang_tol: float

    @property
    def passed(self):
        return self.violation_ok and self.bang_bang_ok and self.saturation_ok


@dataclass(frozen=True)
class OptimizationResult:
    m_star: Field
    objective: float
    history: tuple  # (objective, projected gradient norm) per accepted iterate
    bang_bang_fraction: float
    optimality_report: CertificationReport | None
    start_records: tuple = ()
    best_start: str = ""

    @property
    def grid(self):
        return self.m_star.grid


def default_cells_1d(mu: float, cap: int = 10_000) -> int:
    """Default 1D resolution: ~1000/mu cells, at least 64, capped.

    The cap keeps the infinity-norm residual of the steady solve above the
    float64 rounding floor; beyond ~10^4 cells the extra resolution buys
    nothing the solver tolerance can certify.
    """
    return int(max(64, min(round(1000.0 / mu), cap)))


def project_onto_admissible(m_raw: Field, budget) -> Field:
    """Euclidean projection onto {0 <= m <= kappa, mean(m) = m0}.

    clip(m + s, 0, kappa) with s found by bisection on the (continuous,
    nondecreasing) clipped mean, then a few exact scalar corrections on the
    unclipped cells.
    """
    m0 = float(budget.m0)
    kappa = float(budget.kappa)
    if not (0.0 < m0 < kappa):
        raise InfeasibleBudget(f"mean level {m0} is not attainable under bounds [0, {kappa}]")
    vals = m_raw.values
    lo = float(-np.max(vals))
    hi = float(kappa - np.min(vals))

    def clipped_mean(s):
        return float(np.mean(np.clip(vals + s, 0.0, kappa)))

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if clipped_mean(mid) < m0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16 * max(1.0, kappa):
            break
    s = 0.5 * (lo + hi)
    out = np.clip(vals + s, 0.0, kappa)
    # Scalar correction on the free cells to hit the mean exactly.
    for _ in range(3):
        gap = m0 - float(np.mean(out))
        if abs(gap) <= 1e-16 * kappa:
            break
        free = (out > 0.0) & (out < kappa)
        n_free = int(np.sum(free))
        if n_free == 0:
            break
        out[free] += gap * out.size / n_free
        out = np.clip(out, 0.0, kappa)
    return Field(m_raw.grid, out)


def _projected_gradient_norm(m, g, budget):
    gmax = float(np.max(np.abs(g.values)))
    if gmax == 0.0:
        return 0.0
    tau = 1e-6 * budget.kappa / gmax
    moved = project_onto_admissible(Field(m.grid, m.values + tau * g.values), budget)
    return float(np.max(np.abs(moved.values - m.values))) / tau


def _polish_plans(grid):
    if grid.dimension == 1:
        return ["increasing", "decreasing"]
    plans = []
    for order in itertools.permutations(range(grid.dimension)):
        for dirs in itertools.product(("increasing", "decreasing"), repeat=grid.dimension):
            plans.append(RearrangementPlan(axis_order=order, directions=dirs))
    return plans


class _Ascent:
    """Single projected-ascent run from one start."""

    def __init__(self, objective_grad, budget, cfg, grid):
        self.oag = objective_grad
        self.budget = budget
        self.cfg = cfg
        self.grid = grid
        self.plans = _polish_plans(grid) if cfg.polish_with_rearrangement else []

    def run(self, start: Field):
        cfg = self.cfg
        m = project_onto_admissible(start, self.budget)
        value, g, warm = self.oag(m, None)
        g0 = max(float(np.max(np.abs(g.values))), 1e-300)
        threshold = cfg.gradient_rtol * g0
        step = self.budget.kappa / max(float(np.max(np.abs(g.values - np.mean(g.values)))), 1e-300)
        history = [(value, _projected_gradient_norm(m, g, self.budget))]

        for _ in range(cfg.max_iters):
            pgn = _projected_gradient_norm(m, g, self.budget)
            if pgn <= threshold:
                polished = self._polish(m, value, warm)
                if polished is None:
                    history.append((value, pgn))
                    break
                m, value, g, warm = polished
                history.append((value, pgn))
                continue
            moved = False
            while step >= cfg.min_step:
                trial = project_onto_admissible(
                    Field(self.grid, m.values + step * g.values), self.budget
                )
                if float(np.max(np.abs(trial.values - m.values))) <= 1e-15 * self.budget.kappa:
                    break
                tv, tg, twarm = self.oag(trial, warm)
                if tv >= value:
                    m, value, g, warm = trial, tv, tg, twarm
                    step *= cfg.step_grow
                    moved = True
                    break
                step *= cfg.step_shrink
            if moved:
                history.append((value, pgn))
                continue
            polished = self._polish(m, value, warm)
            if polished is None:
                history.append((value, pgn))
                break
            m, value, g, warm = polished
            step = max(step, cfg.min_step * 1e6)
            history.append((value, pgn))
        return m, value, tuple(history)

    def _polish(self, m, value, warm):
        best = None
        for plan in self.plans:
            candidate = rearranged(m, plan)
            if float(np.max(np.abs(candidate.values - m.values))) <= 1e-15 * self.budget.kappa:
                continue
            cv, cg, cwarm = self.oag(candidate, warm)
            if cv > value + 1e-14 * max(1.0, abs(value)) and (best is None or cv > best[1]):
                best = (candidate, cv, cg, cwarm)
        return best


def _named_starts(names, budget, grid, rng):
    for name in names:
        if name == "constant":
            base = constant_resource(grid, budget).values
            noise = rng.standard_normal(grid.cells)
            noise -= noise.mean()
            # The constant is a critical point (the global minimizer); a
            # small seeded perturbation lets ascent leave it.
            yield name, Field(grid, base + 0.01 * budget.kappa * noise)
        elif name == "crenel-left":
            yield name, single_crenel(grid, budget, side="left")
        elif name == "crenel-right":
            yield name, single_crenel(grid, budget, side="right")
        elif name == "double-crenel":
            yield name, double_crenel(grid, budget)
        elif name == "random-bang-bang":
            yield name, random_bang_bang(grid, budget, rng)
        else:
            raise ValueError(f"unknown start {name!r}")


def maximize_generic(objective_grad, budget: ResourceBudget, cfg: OptimizerConfig,
                     grid: Grid) -> OptimizationResult:
    """Multi-start projected ascent on an arbitrary objective.

    objective_grad(m, warm) must return (value, gradient Field, warm state);
    warm is threaded between evaluations of the same run and may be None.
    """
    rng = np.random.default_rng(cfg.seed)
    ascent = _Ascent(objective_grad, budget, cfg, grid)
    records = []
    best = None
    for name, start in _named_starts(cfg.starts, budget, grid, rng):
        try:
            m, value, history = ascent.run(start)
        except PopmaxError as exc:
            records.append(StartRecord(name, None, 0, None, error=str(exc)))
            continue
        records.append(StartRecord(name, value, len(history) - 1, history[-1][1]))
        if best is None or value > best[1]:
            best = (m, value, history, name)
    if best is None:
        raise PopmaxError(
            "every optimizer start failed: " + "; ".join(f"{r.name}: {r.error}" for r in records)
        )
    m_star, objective, history, best_name = best
    return OptimizationResult(
        m_star=m_star,
        objective=objective,
        history=history,
        bang_bang_fraction=_bang_bang_fraction(m_star, budget),
        optimality_report=None,
        start_records=tuple(records),
        best_start=best_name,
    )


def maximize(mu: float, budget: ResourceBudget, cfg: OptimizerConfig | None = None,
             grid: Grid | None = None) -> OptimizationResult:
    """Maximize the steady population at diffusivity mu.

    Projected gradient ascent with the exact adjoint gradient; the steady
    solve is warm-started from the previous density along each run.
    Returns the best multi-start run with a certification report attached.
    """
    cfg = cfg or OptimizerConfig()
    if grid is None:
        grid = Grid((1.0,), (default_cells_1d(mu, cfg.cells_cap),))

    def objective(m_field, warm):
        state = solve_steady_state(m_field, mu, init=warm, tol=cfg.solver_tol)
        adjoint = solve_adjoint(m_field, state)
        return total_population(state), gradient_density(state, adjoint), state.theta

    result = maximize_generic(objective, budget, cfg, grid)
    report = certify(result, mu, budget)
    return OptimizationResult(
        m_star=result.m_star,
        objective=result.objective,
        history=result.history,
        bang_bang_fraction=result.bang_bang_fraction,
        optimality_report=report,
        start_records=result.start_records,
        best_start=result.best_start,
    )


def _bang_bang_fraction(m, budget):
    tol = 1e-9 * budget.kappa
    vals = m.values
    return float(np.mean((vals <= tol) | (vals >= budget.kappa - tol)))


def certify(result: OptimizationResult, mu: float, budget: ResourceBudget,
            violation_tol: float = 0.01, bang_bang_tol: float = 0.99,
            solver_tol: float = 1e-10) -> CertificationReport:
    """Recompute the switching structure at the candidate optimum and check
    the level-set correspondence, the saturated fraction and the presence
    of saturated-or-empty cells."""
    m = result.m_star
    state = solve_steady_state(m, mu, tol=solver_tol)
    adjoint = solve_adjoint(m, state)
    phi = switching_function(state, adjoint).phi
    level = estimate_switching_level(m, phi, budget)
    measures = measure_optimality(m, phi, budget, level_c=level)
    return CertificationReport(
        measures=measures,
        objective=total_population(state),
        violation_ok=measures.violation_fraction <= violation_tol,
        bang_bang_ok=measures.bang_bang_fraction >= bang_bang_tol,
        saturation_ok=measures.saturated_fraction > 0.0,
        violation_tol=violation_tol,
        bang_bang_tol=bang_bang_tol,
    )
