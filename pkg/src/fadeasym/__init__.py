"""High-SNR asymptotic average error rates over regularly varying fading channels."""

__version__ = "0.1.0"

from .asymptotics import (  # noqa: E402
    AsymptoticEstimate,
    asymptote,
    bounds_check,
    empirical_diversity_order,
    exact_average,
    snr_offset_db,
    wang_for,
)
from .channels import ChannelSpec, make_channel  # noqa: E402
from .combining import Scheme, combine, combined_asymptote, combined_exact_average  # noqa: E402
from .error_models import bpsk_ber, dpsk_ber, mpsk_ser, mqam_ser, parse_modulation  # noqa: E402
from .montecarlo import McConfig, McResult, mc_average_error, mc_curve  # noqa: E402
from .regvar import exponent_from_cdf, tauberian_check  # noqa: E402

__all__ = [
    "AsymptoticEstimate",
    "ChannelSpec",
    "McConfig",
    "McResult",
    "Scheme",
    "asymptote",
    "bounds_check",
    "bpsk_ber",
    "combine",
    "combined_asymptote",
    "combined_exact_average",
    "dpsk_ber",
    "empirical_diversity_order",
    "exact_average",
    "exponent_from_cdf",
    "make_channel",
    "mc_average_error",
    "mc_curve",
    "mpsk_ser",
    "mqam_ser",
    "parse_modulation",
    "snr_offset_db",
    "tauberian_check",
    "wang_for",
]
