"""Steady logistic-diffusion habitat model: solvers, derivatives and
resource-distribution optimization for the total population size."""

from .asymptotics import (
    ExpansionCoefficients,
    diffusivity_expansion,
    first_order_coefficient,
    first_order_gradient,
    first_order_response,
    limit_energy,
    maximize_limit_functional,
    solve_neumann_poisson,
)
from .errors import (
    DegenerateGapWarning,
    ExtinctionDetected,
    GaugeViolation,
    GridMismatch,
    InfeasibleBudget,
    NoConvergence,
    NonPositiveResource,
    NonZeroMean,
    PopmaxError,
    SingularAdjoint,
    SweepTooCoarse,
)
from .grid import (
    Field,
    Grid,
    ResourceBudget,
    dirichlet_energy,
    field_from_csv,
    field_to_csv,
    mean,
    neumann_laplacian_apply,
)
from .optimize import (
    CertificationReport,
    OptimizationResult,
    OptimizerConfig,
    certify,
    default_cells_1d,
    maximize,
    maximize_generic,
    project_onto_admissible,
)
from .profiles import (
    block_resource,
    constant_resource,
    double_crenel,
    random_bang_bang,
    single_crenel,
)
from .rearrange import (
    RearrangementPlan,
    hardy_littlewood_check,
    monotone_rearrangement_1d,
    polya_check,
    symmetric_rearrangement_box,
)
from .sensitivity import (
    AdjointState,
    SwitchingFunction,
    directional_derivatives,
    estimate_switching_level,
    gradient_density,
    measure_optimality,
    mixed_second_derivative,
    solve_adjoint,
    switching_function,
    switching_residual,
)
from .spectral import (
    EigenPair,
    compare_eigen_vs_population,
    count_blocks,
    l1_distance,
    principal_eigenvalue,
    rayleigh_quotient,
)
from .steady import (
    SteadyState,
    diagnostics_text,
    population_identity_check,
    solve_steady_state,
    total_population,
)

__version__ = "0.1.0"
