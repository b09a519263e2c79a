"""PAM signalling over SPAD-array receivers with dead time.

Modules
-------
mathfn         Lambert W0, Q function, log Bessel K, bisection, Gamma sampling
linkmodel      link budget, array and modulation parameters
spad           photocount moments with paralyzable dead time, event oracle
vnt            variance-normalizing arcsine transform
constellation  uniform, square-law, pre-distortion and joint designs
decoder        thresholds, Gray bit counting, analytical BER
channel        Gamma-Gamma FSO fading and LOS VLC gain
sim            Monte Carlo BER, fading averages, rate search
cli            config-driven experiment runner writing CSV
"""

from .channel import TurbulenceParams, VlcGeometry, fso_geometric_loss, gg_params, gg_pdf, gg_sample, vlc_los_loss
from .constellation import ConstellationDesign, Scheme, check_constraints, design, vnt_means
from .decoder import (
    Domain,
    Receiver,
    ThresholdSet,
    approx_thresholds,
    ber_analytical_appendix,
    ber_analytical_awgn,
    ber_analytical_sdn,
    ber_exact,
    decode,
    midpoint_thresholds,
    ml_thresholds,
)
from .errors import (
    BracketError,
    ConfigError,
    ConvergenceError,
    DesignError,
    DomainError,
    InfeasibleLinkError,
    ModelDomainError,
    NumericError,
    OrderingError,
    SpadOwcError,
)
from .linkmodel import LinkBudget, ModulationConfig, SpadArrayParams, db_to_linear_loss, peak_rate_bound
from .mathfn import lambert_w0, log_bessel_k, q_function
from .sim import (
    BerResult,
    FadingBerResult,
    RateSearchResult,
    analytical_ber,
    make_receiver,
    run_ber_fading,
    run_ber_mc,
    search_max_rate,
)
from .spad import GaussianMoments, array_moments, dead_time_oracle, dead_time_theta
from .vnt import VntParams, vnt_forward, vnt_inverse

__version__ = "0.1.0"
