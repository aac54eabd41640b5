"""steeplab: a numerical laboratory for steep firing-rate network models.

Simulate point-neuron networks at finite sigmoid steepness, solve the
Heaviside-limit problem under explicit at-threshold conventions, verify
candidate limits through the integral (Volterra) form of the model, and
study how the family of regularized solutions behaves as the steepness
grows.
"""

from .analysis import (
    ClassifierConfig,
    SweepCluster,
    SweepReport,
    ThresholdDiagnostics,
    VolterraResult,
    m_min,
    p_measure,
    r_measure,
    sup_distance,
    sweep,
    threshold_diagnostics,
    volterra_residual,
)
from .errors import (
    ConfigError,
    CrossingBudgetError,
    IntegrationError,
    NumericalError,
    RightSmoothError,
    SingularConnectivityError,
    SteeplabError,
    StepUnderflowError,
    ThresholdPlateauError,
)
from .firing import (
    AssumptionAReport,
    FiringRateFamily,
    check_assumption_A,
    firing_code,
    parse_firing,
)
from .heaviside import HeavisideSolution, solve_heaviside_right_smooth
from .integrator import CrossingEvent, detect_crossings, integrate, solve_rk45
from .model import (
    AssumptionBReport,
    ConstantSource,
    NetworkParams,
    Scenario,
    SourceFamily,
    TabulatedSource,
    ThresholdAdvancedSource,
    check_assumption_B,
    load_scenario,
    rhs,
    save_scenario,
    uniform_bound,
)
from .scenarios import (
    BUILTIN_SCENARIOS,
    ClosedForm,
    builtin,
    closed_form_eval,
    limit_candidates,
)
from .trajectory import (
    DenseOutputTrajectory,
    FunctionTrajectory,
    PiecewiseExpTrajectory,
    TabulatedTrajectory,
    Trajectory,
)

__version__ = "0.1.0"
