"""Pseudospectral tools for the conduit equation family on [0, 2*pi).

The package covers three layers: spectral primitives (grids, fields,
Fourier-multiplier operators), the model right-hand sides together
with time integration and blow-up monitoring, and the periodic
traveling-wave solver with amplitude continuation.  `gmodel.cli`
exposes the same functionality as a command-line tool.
"""

__version__ = "0.1.0"

from .equations import (
    CascadeState,
    ModelKind,
    ModelSpec,
    NonFiniteFieldError,
    NonPositiveUError,
    PicardDivergedError,
    cascade_rhs,
    eps_full_rhs,
    gmodel_rhs,
    reconstruct_g,
    velocity_residual,
    velocity_solve,
)
from .initexpr import InitExpressionError, InitialExpression
from .integrate import (
    BlowupPolicy,
    BlowupVerdict,
    DiagnosticsRecord,
    IntegratorConfig,
    Scheme,
    Termination,
    TerminationKind,
    Trajectory,
    detect_blowup,
    diagnostics_record,
    estimate_analyticity_radius,
    integrate,
)
from .io import (
    ConfigError,
    LoadedBranch,
    LoadedRun,
    OutputDirLockedError,
    RunConfig,
    TrajectoryFormatError,
    load_branch,
    load_trajectory,
    output_lock,
    serialize_branch,
    serialize_trajectory,
)
from .spectral import (
    GridMismatchError,
    PeriodicGrid,
    RealField,
    Spectrum,
    dealiased_product,
    derivative,
    helmholtz_inverse,
    helmholtz_inverse_dz,
    mean,
    sobolev_norm,
    spectral_tail_fraction,
    sup_norm,
)
from .validation import (
    ConvergenceReport,
    OrderStudyReport,
    SelftestReport,
    StudyConfig,
    asymptotic_order_study,
    integrator_convergence_study,
    operator_selftest,
)
from .waves import (
    Branch,
    ContinuationConfig,
    CosineSeries,
    KernelReport,
    NewtonDivergedError,
    SingularJacobianError,
    WaveBranchPoint,
    bifurcation_speed,
    continue_branch,
    kernel_check,
    linearized_wave_residual,
    newton_solve,
    wave_residual,
)

__all__ = [
    "__version__",
    # spectral
    "PeriodicGrid", "RealField", "Spectrum", "GridMismatchError",
    "helmholtz_inverse", "helmholtz_inverse_dz", "derivative",
    "dealiased_product", "mean", "sup_norm", "sobolev_norm",
    "spectral_tail_fraction",
    # equations
    "ModelKind", "ModelSpec", "CascadeState",
    "NonFiniteFieldError", "NonPositiveUError", "PicardDivergedError",
    "gmodel_rhs", "velocity_solve", "velocity_residual",
    "eps_full_rhs", "cascade_rhs", "reconstruct_g",
    # integration
    "Scheme", "IntegratorConfig", "TerminationKind", "Termination",
    "DiagnosticsRecord", "BlowupPolicy", "BlowupVerdict", "Trajectory",
    "integrate", "detect_blowup", "diagnostics_record",
    "estimate_analyticity_radius",
    # waves
    "bifurcation_speed", "CosineSeries", "wave_residual",
    "linearized_wave_residual", "KernelReport", "kernel_check",
    "newton_solve", "WaveBranchPoint", "ContinuationConfig", "Branch",
    "continue_branch", "NewtonDivergedError", "SingularJacobianError",
    # validation
    "StudyConfig", "OrderStudyReport", "asymptotic_order_study",
    "ConvergenceReport", "integrator_convergence_study",
    "SelftestReport", "operator_selftest",
    # io
    "RunConfig", "ConfigError", "TrajectoryFormatError",
    "OutputDirLockedError", "output_lock",
    "serialize_trajectory", "load_trajectory", "LoadedRun",
    "serialize_branch", "load_branch", "LoadedBranch",
    # expressions
    "InitialExpression", "InitExpressionError",
]
