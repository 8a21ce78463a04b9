"""Spectral Galerkin solver and estimate auditor for a nonlinear beam hinged
at both ends.

The solved equation is u_tt + F1(u_t) + u_xxxx + F2(u) = f on an interval,
with u and u_xx vanishing at both ends. Displacements live in the span of
the sine eigenfunctions of the interval; the package integrates the modal
system, audits energy-type bounds along the run, and measures convergence,
twin-run separation, and manufactured-solution errors.
"""

from .basis import (
    EigenBasis,
    Interval,
    Quadrature,
    SpectralField,
    TransformPlan,
    analyze,
    composite_gauss_legendre,
    default_quadrature,
    eval_eigenfunction,
    make_basis,
    norm,
    norm_sq,
    synthesize,
    truncate,
)
from .nonlinearity import (
    HypothesisReport,
    NonlinearFn,
    estimate_floor,
    make_nonlinearity,
    validate_hypotheses,
)
from .ode import (
    Forcing,
    ModalState,
    OdeSystem,
    Trajectory,
    default_dt,
    make_forcing,
    make_profile,
    modal_rhs,
    project_initial_data,
    rk4_stability_limit,
    solve,
    step,
)
from .energy import (
    BoundReport,
    EnergyReport,
    check_apriori_bounds,
    check_h4_recovery,
    energy_report,
    identity_defect,
    identity_residual,
)
from .analysis import (
    ManufacturedSolution,
    Scenario,
    StudyReport,
    convergence_study,
    make_manufactured,
    manufactured_forcing,
    mms_study,
    run_scenario,
    uniqueness_experiment,
)
from .io_cli import ConfigError, RunConfig, parse_config, parse_config_dict, run_cli, write_csv

__version__ = "0.1.0"
