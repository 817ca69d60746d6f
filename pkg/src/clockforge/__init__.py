"""Three-state atomic clock error modeling toolkit.

Simulates the coupled (time deviation, frequency deviation, frequency
drift) error process exactly on any uniform grid, injects scheduled
anomalies (component jumps, paired frequency jumps, variance bursts),
evaluates closed-form means/covariances and prediction intervals, and
estimates Allan deviation from sample paths.

Figure rendering lives in :mod:`clockforge.plots` and is imported only on
demand, so library use never pulls in matplotlib.
"""

from .analysis import (
    AllanEstimate,
    PredictionReport,
    allan_deviation,
    empirical_moments,
    marginal_density,
    prediction_report,
    summarize_schedule,
    z_quantile,
)
from .config import ScenarioConfig, load_config
from .errors import (
    ClockforgeError,
    ConfigError,
    DomainError,
    InsufficientDataError,
    MisalignedEpochError,
    MisalignedTauError,
    NotPositiveSemidefiniteError,
    ScheduleError,
    ShapeError,
    UnsupportedAnalyticError,
)
from .innovation import (
    InnovationModel,
    RngStream,
    cholesky_lower,
    innovation_covariance,
    sample_innovation,
)
from .model import (
    COMPONENTS,
    AnomalySchedule,
    ClockParameters,
    ClockState,
    InitialState,
    InstantJump,
    MomentPair,
    PairedJump,
    VarianceWindow,
    analytic_covariance,
    analytic_mean,
    anomalous_mean,
    heaviside_integral,
    window_indicator,
)
from .simulate import (
    Ensemble,
    NormalizedSchedule,
    SimulationGrid,
    Trajectory,
    simulate_ensemble,
    simulate_path,
    snap_schedule,
    step,
    validate_schedule,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # model
    "COMPONENTS",
    "ClockParameters",
    "InitialState",
    "ClockState",
    "InstantJump",
    "PairedJump",
    "VarianceWindow",
    "AnomalySchedule",
    "MomentPair",
    "heaviside_integral",
    "window_indicator",
    "analytic_mean",
    "analytic_covariance",
    "anomalous_mean",
    # innovation
    "InnovationModel",
    "RngStream",
    "innovation_covariance",
    "cholesky_lower",
    "sample_innovation",
    # simulate
    "SimulationGrid",
    "NormalizedSchedule",
    "Trajectory",
    "Ensemble",
    "validate_schedule",
    "snap_schedule",
    "step",
    "simulate_path",
    "simulate_ensemble",
    # analysis
    "PredictionReport",
    "AllanEstimate",
    "z_quantile",
    "marginal_density",
    "prediction_report",
    "empirical_moments",
    "allan_deviation",
    "summarize_schedule",
    # config
    "ScenarioConfig",
    "load_config",
    # errors
    "ClockforgeError",
    "DomainError",
    "ShapeError",
    "NotPositiveSemidefiniteError",
    "ScheduleError",
    "MisalignedEpochError",
    "MisalignedTauError",
    "InsufficientDataError",
    "UnsupportedAnalyticError",
    "ConfigError",
]
