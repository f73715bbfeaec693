"""spinwell: tunnelling dynamics of a spin-1 condensate in a double well."""

__version__ = "0.1.0"

from .model import (
    CouplingConstants,
    Observables,
    SpinorPair,
    StationaryResult,
    SystemParams,
    density_matrix,
    energy,
    find_stationary,
    observables,
    rhs,
    rhs_spin_form,
    singlet_amplitude,
    spin_flip,
    spin_matrices,
    stationary_residual,
)
from .integrator import (
    IntegratorConfig,
    IntegrationError,
    Trajectory,
    integrate,
    integrate_fixed,
    step_fixed,
)
from .reduced import (
    FixedPointFamily,
    FixedPointReport,
    ReducedParams,
    ReducedState,
    ReducedTrajectory,
    Regime,
    analytic_magnetization,
    analytic_period,
    classify_regime,
    conserved_quantity,
    elliptic_k,
    fixed_points,
    integrate_reduced,
    jacobi_cn_dn,
    jacobian,
    reduced_rhs,
    stability_eigenvalues,
    trajectory_relation_r0,
)

__all__ = [name for name in dir() if not name.startswith("_")]
