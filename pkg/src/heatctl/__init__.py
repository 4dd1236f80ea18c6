"""Spectral toolkit for explicit controls of the 1-D heat equation."""

from .domain import (
    Field,
    SpectralDomain,
    SubdomainWindow,
    build_circle_domain,
    build_interval_domain,
    build_sturm_liouville_domain,
    inner_product,
    inner_product_on,
    laplacian_power,
    project,
    synthesize,
)
from .errors import (
    CholeskyBreakdown,
    ConvergenceError,
    DomainError,
    EigensolverError,
    HeatCtlError,
    RouteMismatch,
    WindowError,
)
from .kernel import (
    h_norm,
    k_kernel_eval,
    kernel_eval,
    kernel_mass,
    l_operator_apply,
    semigroup_apply,
)
from .fullctl import (
    FullControlResult,
    FullControlSpec,
    compute_b,
    compute_f,
    control_solution_series,
    delta_window,
    fit_growth_constant,
    run_full_control,
    stationary_subdomain_feasibility,
)
from .subctl import (
    SubdomainControlSystem,
    assemble_alpha,
    assemble_beta,
    control_energy,
    control_evaluate,
    galerkin_verify,
    solve_control,
)
from .backinv import invert_grid, invert_segmented, invert_spectral, inversion_window

__version__ = "0.1.0"
