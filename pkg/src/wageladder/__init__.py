"""Solver suite for a stationary model of job ladders with diffusive surplus.

Workers climb a wage ladder through on-the-job search while match surplus
diffuses; jobs end when surplus hits an endogenous quit boundary or an
exogenous shock arrives. The package solves the worker obstacle problem, the
stationary population balance, and their joint fixed point, simulates panels
from the solved policies, evaluates a closed-form first-passage benchmark,
and runs decomposition and policy-lever experiments.
"""

from .config import (
    ConfigError,
    OfferKernel,
    OutsideClosure,
    RunConfig,
    baseline_config_path,
    load_config,
)
from .equilibrium import (
    CounterfactualMode,
    EquilibriumResult,
    NonConvergenceError,
    dispersion,
    j2j_rate_pde,
    outside_value,
    solve_equilibrium,
)
from .firstpassage import (
    BenchmarkSpec,
    hazard,
    hitting_cdf,
    hitting_pdf,
    never_end_probability,
    never_end_truncated,
)
from .grid import ActionGrid, EllipticityError, Grid, TridiagonalOperator, build_action_grid, build_grid
from .hjb import (
    IterationLimitError,
    NoBoundaryError,
    WorkerEnv,
    WorkerSolution,
    free_boundary,
    offer_gain,
    smooth_fit_residual,
    solve_obstacle_pi,
    solve_obstacle_vi,
)
from .kernels import backend_name, stream_uniform
from .kolmogorov import (
    DegenerateFlowError,
    FlowSpec,
    StationaryDensity,
    separation_flux,
    solve_stationary,
)
from .montecarlo import (
    EndReason,
    HazardRow,
    Panel,
    SpellRecord,
    TenureVarianceRow,
    density_by_age,
    density_l1,
    empirical_density,
    empirical_hazard,
    hitting_fraction,
    j2j_rate,
    never_end_fraction,
    simulate_hitting_panel,
    simulate_panel,
    variance_by_tenure,
    wage_by_mobility,
    wage_tenure_profile,
)
from .params import (
    InvalidParameterError,
    ModelParams,
    SurplusCoeffs,
    WageMode,
    arrival_rate,
    derive_surplus_coeffs,
    search_cost,
    wage_at,
)

__version__ = "0.1.0"

__all__ = [
    "ActionGrid",
    "BenchmarkSpec",
    "ConfigError",
    "CounterfactualMode",
    "DegenerateFlowError",
    "EllipticityError",
    "EndReason",
    "EquilibriumResult",
    "FlowSpec",
    "Grid",
    "HazardRow",
    "InvalidParameterError",
    "IterationLimitError",
    "ModelParams",
    "NoBoundaryError",
    "NonConvergenceError",
    "OfferKernel",
    "OutsideClosure",
    "Panel",
    "RunConfig",
    "SpellRecord",
    "StationaryDensity",
    "TenureVarianceRow",
    "SurplusCoeffs",
    "TridiagonalOperator",
    "WageMode",
    "WorkerEnv",
    "WorkerSolution",
    "arrival_rate",
    "backend_name",
    "baseline_config_path",
    "build_action_grid",
    "build_grid",
    "density_by_age",
    "density_l1",
    "derive_surplus_coeffs",
    "dispersion",
    "empirical_density",
    "empirical_hazard",
    "free_boundary",
    "hazard",
    "hitting_cdf",
    "hitting_fraction",
    "hitting_pdf",
    "j2j_rate",
    "j2j_rate_pde",
    "load_config",
    "never_end_fraction",
    "never_end_probability",
    "never_end_truncated",
    "offer_gain",
    "outside_value",
    "search_cost",
    "separation_flux",
    "simulate_hitting_panel",
    "simulate_panel",
    "smooth_fit_residual",
    "solve_equilibrium",
    "solve_obstacle_pi",
    "solve_obstacle_vi",
    "solve_stationary",
    "stream_uniform",
    "variance_by_tenure",
    "wage_at",
    "wage_by_mobility",
    "wage_tenure_profile",
    "__version__",
]
