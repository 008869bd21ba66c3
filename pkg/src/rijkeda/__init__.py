"""State estimation for a time-delayed thermoacoustic reduced-order model.

The package simulates a horizontal Rijke tube discretized on its natural
acoustic modes, and estimates optimal initial conditions by blending a
background state with timed pressure observations: the cost gradient comes
from a discrete adjoint of the delayed RK4 integrator, and a conjugate
gradient loop produces the analysis state. Twin experiments (synthetic
truth, noisy observations, error bookkeeping) and a CLI wrap the library.
"""

from .adjoint import GradientReport, fd_gradient, fd_relative_errors, gradient
from .cost import (
    AssimilationProblem,
    BackgroundSpec,
    BgKind,
    CostBreakdown,
    CovarianceSpec,
    ObsKind,
    ObservationSet,
    cost_breakdown,
    eval_j_bg,
    eval_j_obs,
    eval_total,
    measure,
    pressure_weights,
)
from .errors import (
    ConfigError,
    IntegrationDivergedError,
    NumericalError,
    OutOfWindowError,
    RijkedaError,
    ZeroEnergyError,
)
from .integrator import IntegratorConfig, Trajectory, integrate
from .model import (
    ModelParams,
    acoustic_energy,
    damping,
    heat_release,
    reconstruct_pressure,
    reconstruct_velocity,
    rhs,
    split_state,
    state_vector,
)
from .optimize import (
    LocalMinimumReport,
    OptimizationResult,
    OptimizerConfig,
    minimize,
    verify_local_minimum,
)
from .twin import (
    TwinConfig,
    TwinResult,
    TwinSummary,
    dominant_period,
    modal_energy_split,
    run_twin,
    sweep_n_obs,
)

__version__ = "0.1.0"
