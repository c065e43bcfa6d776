"""Linear solves against the zero-flux Laplacian plus a diagonal.

Every linearized operator in the package has the form mu*L + diag(d) with L
the symmetric zero-flux Laplacian: the Newton Jacobian, the adjoint
operator, the tangent systems and the shifted eigenvalue operator.  1D
systems are tridiagonal and solved with banded LAPACK routines; 2D systems
use a sparse LU, falling back to damped-Jacobi preconditioned conjugate
gradient above a size threshold (the operator is symmetric by
construction).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SingularAdjoint
from .grid import Grid, laplacian_matrix

DIRECT_CELL_LIMIT = 80_000
JACOBI_DAMPING = 2.0 / 3.0


def _banded_form(grid: Grid, mu: float, diag: np.ndarray):
    """(1,1)-banded form of mu*L + diag(d) for a 1D grid."""
    n = grid.cells[0]
    h2 = grid.spacing[0] ** 2
    ab = np.zeros((3, n))
    ab[0, 1:] = mu / h2
    ab[2, :-1] = mu / h2
    main = np.full(n, -2.0 * mu / h2)
    main[0] = main[-1] = -mu / h2
    ab[1] = main + diag
    return ab


def solve_shifted_laplacian(grid: Grid, mu: float, diag, rhs, context="linear solve"):
    """Solve (mu*L + diag(d)) x = rhs; raises SingularAdjoint on breakdown."""
    d = np.asarray(diag, dtype=float).ravel()
    b = np.asarray(rhs, dtype=float).ravel()
    try:
        if grid.dimension == 1:
            x = sla.solve_banded((1, 1), _banded_form(grid, mu, d), b)
        elif grid.cell_count <= DIRECT_CELL_LIMIT:
            A = (mu * laplacian_matrix(grid) + sp.diags(d)).tocsc()
            x = spla.splu(A).solve(b)
        else:
            x = _cg_solve(grid, mu, d, b)
    except (np.linalg.LinAlgError, RuntimeError, ValueError) as exc:
        raise SingularAdjoint(
            f"{context}: factorization failed ({exc})",
            pivot_estimate=_pivot_estimate(grid, mu, d),
        ) from exc
    if not np.all(np.isfinite(x)):
        raise SingularAdjoint(
            f"{context}: solution is not finite",
            pivot_estimate=_pivot_estimate(grid, mu, d),
        )
    return x


def _cg_solve(grid, mu, d, b):
    A = (mu * laplacian_matrix(grid) + sp.diags(d)).tocsr()
    # The operator is negative definite near all states of interest; run CG
    # on -A so the preconditioned form is SPD.
    diag_inv = JACOBI_DAMPING / np.abs(A.diagonal())
    M = spla.LinearOperator(A.shape, matvec=lambda v: diag_inv * v)
    x, info = spla.cg(-A, -b, rtol=1e-13, atol=0.0, maxiter=20 * A.shape[0], M=M)
    if info != 0:
        x = spla.spsolve(A.tocsc(), b)
    return x


def _pivot_estimate(grid, mu, d):
    """Cheap smallest-pivot proxy: minimum Gershgorin distance from zero."""
    h2s = [h * h for h in grid.spacing]
    row_offdiag = 2.0 * mu * sum(1.0 / h2 for h2 in h2s)
    main = -row_offdiag + d
    return float(np.min(np.abs(main) - row_offdiag).clip(min=0.0))


def factor_shifted(grid: Grid, mu: float, diag):
    """Reusable solver for the SPD operator shift*I - (mu*L + diag(d)).

    Used by inverse power iteration; the caller guarantees definiteness by
    choosing the shift above the top eigenvalue.
    Returns a closure rhs -> x.
    """
    d = np.asarray(diag, dtype=float).ravel()
    if grid.dimension == 1:
        ab = _banded_form(grid, mu, d)
        upper = np.zeros((2, grid.cells[0]))
        upper[0] = -ab[0]
        upper[1] = -ab[1]
        chol = sla.cholesky_banded(upper)
        return lambda rhs: sla.cho_solve_banded((chol, False), np.asarray(rhs, dtype=float))
    A = (-(mu * laplacian_matrix(grid)) - sp.diags(d)).tocsc()
    lu = spla.splu(A)
    return lambda rhs: lu.solve(np.asarray(rhs, dtype=float).ravel())


@lru_cache(maxsize=16)
def _poisson_factor(grid: Grid):
    """LU of the Laplacian with the first cell pinned to fix the gauge."""
    A = laplacian_matrix(grid).tolil()
    A[0, :] = 0.0
    A[0, 0] = 1.0
    return spla.splu(A.tocsc())


def poisson_solve_zero_mean(grid: Grid, rhs):
    """Solve L u = rhs with zero-flux boundaries and mean(u) = 0.

    The right side must already have zero mean (the caller enforces the
    compatibility condition); one degree of freedom is pinned to make the
    singular system invertible and the mean gauge is restored afterwards.
    """
    b = np.asarray(rhs, dtype=float).ravel().copy()
    b -= b.mean()
    if grid.dimension == 1:
        n = grid.cells[0]
        h2 = grid.spacing[0] ** 2
        ab = np.zeros((3, n))
        ab[0, 1:] = 1.0 / h2
        ab[2, :-1] = 1.0 / h2
        main = np.full(n, -2.0 / h2)
        main[0] = main[-1] = -1.0 / h2
        ab[1] = main
        ab[0, 1] = 0.0
        ab[1, 0] = 1.0
        bb = b.copy()
        bb[0] = 0.0
        u = sla.solve_banded((1, 1), ab, bb)
    else:
        bb = b.copy()
        bb[0] = 0.0
        u = _poisson_factor(grid).solve(bb)
    u -= u.mean()
    return u
