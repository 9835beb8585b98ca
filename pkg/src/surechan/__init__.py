"""SURE-optimized preamble channel estimation for CP-OFDM."""
from .channels import ChannelProfile, cfr_autocorrelation, draw_cir, load_profile
from .core import ObservationPair, OfdmConfig, build_cfr, build_shift_matrix, channel_gains, dft, idft, observe_preamble
from .estimators import (
    DegenerateObservationError,
    EstimatorSpec,
    RiskReport,
    estimate_cir_threshold,
    estimate_james_stein,
    estimate_lmmse,
    estimate_ml,
    estimate_sure_let,
    estimate_sure_linear,
    lmmse_noiseless_limit,
    sure_risk,
)

__version__ = "0.1.0"
