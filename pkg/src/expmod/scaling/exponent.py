"""Scaling exponent, log-log power-law fits and the power spectrum."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .._numbers import as_fraction
from ..correlation import CorrelationSeries
from ..errors import RangeError, SignError, SingularityError

__all__ = [
    "BetaValue",
    "ScalingReport",
    "SpectrumReport",
    "beta",
    "spectral_exponent",
    "fit_power_law",
    "power_spectrum",
]

VALID = "valid"
SINGULAR_ADJACENT = "singular-adjacent"


class BetaValue(NamedTuple):
    value: float
    flag: str

    @property
    def valid(self) -> bool:
        return self.flag == VALID


def beta(p) -> BetaValue:
    """Asymptotic decay exponent of ``C_p(n)``.

    ``[log(2-p) - log((1-2p)(2-3p))] / log(2-p)``. The product is kept inside
    one logarithm so that ``p > 2/3`` (both factors negative) works. On
    ``(1/2, 2/3)`` the product is negative and the value returned uses its
    absolute value, flagged ``"singular-adjacent"``.

    Raises
    ------
    SingularityError
        At ``p = 1/2`` and ``p = 2/3`` where the product vanishes.
    """
    q = as_fraction(p)
    if not 0 < q < 1:
        raise RangeError(f"p={p} outside (0, 1)")
    prod = (1 - 2 * q) * (2 - 3 * q)
    if prod == 0:
        raise SingularityError(f"no power law at p={q}: decay is faster than any power")
    pf = float(q)
    lam = math.log(2 - pf)
    value = (lam - math.log(abs(float(prod)))) / lam
    return BetaValue(value, VALID if prod > 0 else SINGULAR_ADJACENT)


def spectral_exponent(p) -> float:
    """Power-spectrum exponent ``1 - beta_p``."""
    return 1.0 - beta(p).value


@dataclass(frozen=True)
class ScalingReport:
    p: object
    beta_theoretical: float | None
    fit_slope: float
    fit_intercept: float
    fit_window: tuple[int, int]
    residual: float

    @property
    def relative_error(self) -> float:
        """``|slope + beta| / beta``."""
        return abs(self.fit_slope + self.beta_theoretical) / self.beta_theoretical


def _log_values(series, window):
    n_lo, n_hi = window
    if not n_lo < n_hi:
        raise RangeError(f"empty window {window}")
    if isinstance(series, CorrelationSeries):
        if n_hi > series.n_max or n_lo < 1:
            raise RangeError(f"window {window} outside [1, {series.n_max}]")
        vals = series.values[n_lo : n_hi + 1]
        logs = series.abs_log()[n_lo : n_hi + 1]
        p = series.p
    else:
        n_arr, vals = series
        n_arr = np.asarray(n_arr)
        vals = np.asarray(vals)
        mask = (n_arr >= n_lo) & (n_arr <= n_hi)
        if mask.sum() < 2:
            raise RangeError(f"fewer than two points in window {window}")
        vals = vals[mask]
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.log(np.abs(vals.astype(float)))
        n_lo, n_hi = int(n_arr[mask][0]), int(n_arr[mask][-1])
        p = None
    ns = np.arange(n_lo, n_hi + 1) if p is not None else n_arr[mask]
    for n, v in zip(ns, vals):
        if not v > 0:
            raise SignError(f"non-positive value at n={int(n)}", int(n))
    return np.asarray(ns, dtype=float), logs, p


def fit_power_law(series, window: tuple[int, int]) -> ScalingReport:
    """Ordinary least squares of ``log C`` against ``log n`` on ``window``.

    ``series`` is a CorrelationSeries or an ``(n, values)`` pair.

    Raises
    ------
    SignError
        If a value in the window is not strictly positive.
    """
    ns, logs, p = _log_values(series, window)
    x = np.log(ns)
    slope, intercept = np.polyfit(x, logs, 1)
    resid = logs - (slope * x + intercept)
    rms = float(np.sqrt(np.mean(resid**2)))
    b = None
    if p is not None:
        try:
            b = beta(p).value
        except SingularityError:
            b = None
    return ScalingReport(p, b, float(slope), float(intercept), (int(ns[0]), int(ns[-1])), rms)


def _fit_power_plus_constant(omega, power, bounds=(-1.0, 3.0)) -> float:
    # relative least squares; amplitude and offset are linear given the exponent
    design_w = 1.0 / power

    def cost(a):
        X = np.column_stack([omega**-a, np.ones_like(omega)]) * design_w[:, None]
        coef, *_ = np.linalg.lstsq(X, np.ones_like(omega), rcond=None)
        return float(((X @ coef - 1.0) ** 2).sum())

    res = minimize_scalar(cost, bounds=bounds, method="bounded", options={"xatol": 1e-10})
    return float(res.x)


@dataclass(frozen=True)
class SpectrumReport:
    omega: np.ndarray
    power: np.ndarray
    exponent: float  # fitted alpha in power ~ omega^(-alpha)
    fit_band: tuple[float, float]
    expected: float | None


def power_spectrum(
    series,
    window: tuple[int, int] | None = None,
    band: tuple[float, float] = (0.002, 0.05),
) -> SpectrumReport:
    """Spectrum of the symmetrised correlation sequence and its low-frequency slope.

    The sequence ``c(|m|)`` for ``|m| <= N`` (``N`` = window end) is tapered
    with a Hann window centred at lag zero and transformed with a real FFT.
    Over angular frequencies in ``band`` the spectrum is fitted by
    ``A omega^(-exponent) + B``; the constant absorbs the finite-lag offset
    that biases a plain log-log slope.
    """
    if isinstance(series, CorrelationSeries):
        vals = series.as_float()
        p = series.p
    else:
        vals = np.asarray(series, dtype=float)
        p = None
    n_hi = len(vals) - 1 if window is None else window[1]
    if n_hi + 1 < 64:
        raise RangeError(f"{n_hi + 1} points are too few for a spectrum (need 64)")
    c = vals[: n_hi + 1]
    taper = np.cos(0.5 * np.pi * np.arange(n_hi + 1) / (n_hi + 1)) ** 2
    half = c * taper
    seq = np.concatenate([half, half[:0:-1]])
    spec = np.abs(np.fft.rfft(seq))
    omega = 2 * np.pi * np.arange(len(spec)) / len(seq)
    sel = (omega >= band[0]) & (omega <= band[1])
    if sel.sum() < 4:
        raise RangeError(f"fewer than four frequencies in band {band}")
    alpha = _fit_power_plus_constant(omega[sel], spec[sel])
    expected = None
    if p is not None:
        try:
            expected = spectral_exponent(p)
        except SingularityError:
            pass
    return SpectrumReport(omega, spec, alpha, band, expected)
