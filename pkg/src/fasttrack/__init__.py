"""Market clearing and distributional effects of a paid fast-track queue."""

from .distributions import GaussianCopula, IndependentBeta, IndependentUniform, JointDistribution
from .equilibrium import (
    PrioritySystem,
    SingleQueueEquilibrium,
    Threshold,
    ThresholdStatus,
    Thresholds,
    manifold_sweep,
    priority_boundary,
    priority_clearing_mass,
    priority_masses,
    solve_priority,
    solve_single_queue,
    tail_mass,
    thresholds,
    y_lower_threshold,
    y_upper_threshold,
)
from .errors import (
    AffordabilityError,
    CapacityError,
    ConfigError,
    DegenerateSystemError,
    DomainError,
    FastTrackError,
    InfeasibleError,
    NumericalError,
    UnsupportedDistributionError,
)
from .model import (
    Agent,
    UtilityParams,
    ValueFunction,
    theta_star,
    utility_free_queue,
    utility_outside,
    utility_paid_queue,
)
from .welfare import (
    Choice,
    Comparison,
    RegimeComparison,
    WelfareReport,
    choose_priority,
    choose_single,
    compare_regimes,
    region_geometry,
    regime_utilities,
    verify_income_bands,
)

__version__ = "0.1.0"
