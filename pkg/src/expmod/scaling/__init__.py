"""Scaling exponent theory, fits and numerical checks of the scaling bounds."""
from .concentration import (
    TailReport,
    WindowSignReport,
    WindowSpec,
    concentration_tail,
    concentration_threshold,
    d_width,
    default_beta_param,
    rate_I,
    rate_I_second_derivative,
    robbins_bounds,
    window_bounds,
    window_sign_scan,
    window_sign_threshold,
)
from .exponent import BetaValue, ScalingReport, SpectrumReport, beta, fit_power_law, power_spectrum, spectral_exponent
from .fixedpoint import find_x0, iterated_window_sandwich, qr_constants, series_constant
from .lowp import alpha_lowp, b_line, p_star_estimate, positive_upto, verify_lowp_bounds

__all__ = [
    "alpha_lowp",
    "b_line",
    "beta",
    "BetaValue",
    "concentration_tail",
    "concentration_threshold",
    "d_width",
    "default_beta_param",
    "find_x0",
    "fit_power_law",
    "iterated_window_sandwich",
    "p_star_estimate",
    "positive_upto",
    "power_spectrum",
    "qr_constants",
    "rate_I",
    "rate_I_second_derivative",
    "robbins_bounds",
    "ScalingReport",
    "series_constant",
    "spectral_exponent",
    "SpectrumReport",
    "TailReport",
    "verify_lowp_bounds",
    "window_bounds",
    "window_sign_scan",
    "window_sign_threshold",
    "WindowSignReport",
    "WindowSpec",
]
