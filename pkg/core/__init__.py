"""
SocSec Core

Secrecy outage analysis for trust-based cooperative beamforming with
friendly jamming: geometry and quadrature, special functions, channel
simulation, Gamma moment matching, closed-form outage probabilities and a
Monte Carlo oracle.
"""
__version__ = "0.1.0"

from core.exceptions import (
    SocSecError,
    GeometryError,
    DomainError,
    NonConvergentError,
    DegenerateFitError,
    ConfigError,
    SimulationError,
    TruncationWarning,
    ErrorCodes,
)

from core.params import SystemParams

from core.gamma_approx import (
    MomentPair,
    fit_gamma,
    dest_signal_params,
    interference_params,
    eve_signal_params,
    dgr_cdf,
)

from core.outage import (
    EstimateMethod,
    OutageEstimate,
    cop_closed,
    sop_single_closed,
    sop_multi_upper,
)

from core.montecarlo import (
    TrialPlan,
    estimate_cop,
    estimate_sop_single,
    estimate_sop_multi,
    empirical_moments,
)

__all__ = [
    # Exceptions
    "SocSecError",
    "GeometryError",
    "DomainError",
    "NonConvergentError",
    "DegenerateFitError",
    "ConfigError",
    "SimulationError",
    "TruncationWarning",
    "ErrorCodes",
    # Scenario
    "SystemParams",
    # Gamma approximation
    "MomentPair",
    "fit_gamma",
    "dest_signal_params",
    "interference_params",
    "eve_signal_params",
    "dgr_cdf",
    # Outage
    "EstimateMethod",
    "OutageEstimate",
    "cop_closed",
    "sop_single_closed",
    "sop_multi_upper",
    # Monte Carlo
    "TrialPlan",
    "estimate_cop",
    "estimate_sop_single",
    "estimate_sop_multi",
    "empirical_moments",
]
