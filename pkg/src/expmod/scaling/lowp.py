"""Power-law bounds for small mutation probabilities and the positivity threshold."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .._numbers import as_fraction
from ..correlation import correlation_series

__all__ = [
    "b_line",
    "alpha_lowp",
    "LowPReport",
    "verify_lowp_bounds",
    "positive_upto",
    "PStarEstimate",
    "p_star_estimate",
]

B_INTERCEPT = 0.60206
B_SLOPE = 5.62823


def b_line(p) -> float:
    """Lower-bound exponent ``0.60206 + 5.62823 p``."""
    return B_INTERCEPT + B_SLOPE * float(p)


def alpha_lowp(p, n: int, sign: str = "worst-case") -> float:
    """Induction factor for the lower bound ``C_p(n) >= n^(-b_p)``.

    ``sign="worst-case"`` uses ``-2p(1-p)^n`` for the oscillating term, which
    is the bound the induction needs; ``sign="printed"`` uses ``-2p(p-1)^n``.
    """
    p = float(p)
    b = b_line(p)
    osc = (1 - p) ** n if sign == "worst-case" else (p - 1) ** n
    num = (
        (1 - 2 * p) * (2 - 3 * p) / (2 - p)
        - 2 * p * osc
        - 2 ** (b - 2) * (n / 3) ** (1 + b) * (4 * p * (1 - p)) ** ((n - 1) / 3)
    )
    return num / (1 + p ** (n + 1) * (1 - 2 * p)) * 1.5**b


def _log(x) -> float:
    if isinstance(x, Fraction):
        return math.log(x.numerator) - math.log(x.denominator)
    return math.log(x)


@dataclass
class LowPReport:
    alpha_110_25: float
    alpha_110_25_printed_sign: float
    alpha_monotone_in_p: bool
    alpha_monotone_in_n: bool
    lower_band: dict = field(default_factory=dict)  # p -> (ok, min ratio C / n^-b)
    log_concavity: dict = field(default_factory=dict)  # p -> (ok, worst margin, failing n)
    extended: dict = field(default_factory=dict)  # p -> largest n with the bound intact
    report_only: dict = field(default_factory=dict)  # p in (1/10, 1/5] -> lower-band result

    @property
    def ok(self) -> bool:
        # the log-concavity surrogate is informational: it fails at n = 1 for
        # every p (log C_p(1) is convex in p) and the band it was meant to
        # supply is checked directly above
        return (
            self.alpha_110_25 > 1
            and self.alpha_monotone_in_p
            and self.alpha_monotone_in_n
            and all(v[0] for v in self.lower_band.values())
        )

    @property
    def log_concavity_failures(self) -> dict:
        return {p: v[2] for p, v in self.log_concavity.items() if not v[0]}


def _lower_band(series, p, n_lo=12, n_hi=37):
    b = b_line(p)
    ratios = [_log(series[n]) + b * math.log(n) for n in range(n_lo, n_hi + 1)]
    worst = min(ratios)
    return worst >= 0, math.exp(worst)


def verify_lowp_bounds(
    p_grid=None,
    extra_grid=None,
    n_extend: int = 2000,
) -> LowPReport:
    """Numerical checks of the low-``p`` power-law bounds.

    (i) the induction factor at ``p = 1/10, n = 25`` and its monotonicity;
    (ii) ``C_p(n) >= n^(-b_p)`` for ``12 <= n <= 37`` (exact series);
    (iii) ``log C_p(n) >= -log 4 + 10 p log(4 C_{1/10}(n))`` for ``n <= 25``;
    (iv) the largest ``n <= n_extend`` up to which the lower bound holds.
    ``extra_grid`` points (default ``(1/10, 1/5]``) are reported only.
    """
    if p_grid is None:
        p_grid = [Fraction(i, 100) for i in range(1, 11)]
    if extra_grid is None:
        extra_grid = [Fraction(i, 100) for i in range(11, 21)]
    p_grid = [as_fraction(p) for p in p_grid]

    a25 = alpha_lowp(0.1, 25)
    a25_printed = alpha_lowp(0.1, 25, sign="printed")
    ps = np.linspace(0.005, 0.1, 20)
    ns = np.arange(25, 38)
    table = np.array([[alpha_lowp(p, n) for n in ns] for p in ps])
    rep = LowPReport(
        a25,
        a25_printed,
        bool(np.all(np.diff(table, axis=0) < 0)),
        bool(np.all(np.diff(table, axis=1) > 0)),
    )

    ref = correlation_series(Fraction(1, 10), 37, mode="rational")
    for p in p_grid:
        s = correlation_series(p, 37, mode="rational")
        rep.lower_band[p] = _lower_band(s, p)
        margins = [
            _log(s[n]) - (-math.log(4) + 10 * float(p) * _log(4 * ref[n]))
            for n in range(1, 26)
        ]
        # p = 1/10 is the chord endpoint, where the margin is zero up to rounding
        failing = tuple(n for n, m in enumerate(margins, 1) if m < -1e-12)
        rep.log_concavity[p] = (not failing, min(margins), failing)
        fs = correlation_series(p, n_extend, precision=53, verify=False)
        logs = fs.abs_log()
        b = b_line(p)
        good = (fs.values[12:] > 0) & (logs[12:] + b * np.log(np.arange(12, n_extend + 1)) >= 0)
        bad = np.nonzero(~good)[0]
        rep.extended[p] = n_extend if len(bad) == 0 else 12 + int(bad[0]) - 1
    for p in extra_grid:
        s = correlation_series(as_fraction(p), 37, mode="rational")
        rep.report_only[as_fraction(p)] = _lower_band(s, p)
    return rep


def positive_upto(p, n_max: int) -> bool:
    """True when ``C_p(n) > 0`` for every ``n <= n_max``."""
    s = correlation_series(p, n_max, precision=53, verify=False)
    return bool(np.all(s.values > 0))


@dataclass(frozen=True)
class PStarEstimate:
    value: float
    bracket: tuple[float, float]
    n_max: int
    caveat: str = "positivity only checked up to n_max; the true supremum can only be smaller"


def p_star_estimate(n_max: int = 500, lo: float = 0.1, hi: float = 0.45, tol: float = 1e-5) -> PStarEstimate:
    """Bisection on ``p`` for the predicate "C_p(n) > 0 for all n <= n_max"."""
    if not positive_upto(lo, n_max) or positive_upto(hi, n_max):
        raise ValueError(f"predicate does not change between p={lo} and p={hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if positive_upto(repr(mid), n_max):
            lo = mid
        else:
            hi = mid
    return PStarEstimate(0.5 * (lo + hi), (lo, hi), n_max)
