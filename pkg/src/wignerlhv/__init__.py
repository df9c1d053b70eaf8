"""Local hidden-variable simulation of quadrature Bell tests on a two-mode squeezed source."""

from .analytic_oracle import (
    oracle_bell_S,
    oracle_correlation_E,
    oracle_joint_moment,
    oracle_mean_rate,
    oracle_negative_fraction,
)
from .bell_analysis import (
    BellEstimate,
    JointMomentAccumulator,
    accumulate,
    bell_S,
    correlation_E,
    positivity_report,
    sweep_chi,
)
from .errors import CapacityError, ConfigError, DegenerateDenominator
from .gaussian_core import (
    CovarianceModel,
    HiddenVariableSample,
    build_covariance,
    density,
    exact_second_moments,
    sample_batch,
)
from .lhv_model import (
    AnalyzerSettings,
    BellAngles,
    CountRatePair,
    QuadratureRealities,
    Representation,
    count_rates_eq3,
    count_rates_eq4,
    dark_noise_rates,
    quadrature_realities,
)
from .rng import RandomStream

__version__ = "0.1.0"
