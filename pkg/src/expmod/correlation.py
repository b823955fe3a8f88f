"""Two-site correlation function ``C_p(n)`` via its exact recurrence.

The recurrence expresses ``C_p(n)`` through ``C_p(k)`` for ``n/2 <= k < n``
with weights built from the substitution length distribution ``nu_p(k, n)``.
It is evaluated in one of three arithmetics:

* ``rational``: exact ``Fraction`` arithmetic (small horizons, oracle use);
* ``float`` with ``precision=53``: numpy float64;
* ``float`` with ``precision > 53``: gmpy2 mpfr held in numpy object arrays.

Float runs are repeated at doubled precision and accepted only where the two
agree to a relative tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import gmpy2
import numpy as np
from scipy.special import gammaln

from ._numbers import MPFR, check_probability, to_mpfr
from .errors import PrecisionExhaustedError, RangeError, ResourceLimitError

__all__ = [
    "WeightKernel",
    "CorrelationSeries",
    "ContractionReport",
    "nu",
    "nu_row",
    "weight_W",
    "weight_sum",
    "weight_sum_printed",
    "S_closed",
    "S_recursive",
    "S_sequence",
    "nu_total",
    "seed_correlation",
    "correlation_series",
    "contraction_bound",
    "decay_contraction_report",
    "decay_horizon",
    "RATIONAL_N_MAX",
]

RATIONAL_N_MAX = 64
_GUARD = 40.0  # extra nats kept beyond the working precision when truncating rows


@dataclass(frozen=True)
class WeightKernel:
    """Coefficients ``f, g, h`` of the correlation recurrence.

    Arithmetic follows the type of ``p``: a Fraction gives exact values.
    """

    p: object

    @property
    def f(self):
        return self.p * (2 * self.p - 1)

    @property
    def g(self):
        return (1 - self.p) * (1 - 3 * self.p)

    @property
    def h(self):
        return (1 - self.p) ** 2

    def total(self):
        return self.f + self.g + self.h


def nu(p, k: int, n: int):
    """Probability that ``k - 1`` substitutions produce ``n - 1`` symbols.

    ``binom(k-1, n-k) (1-p)^(n-k) p^(2k-n-1)``, zero whenever the binomial is
    out of range. Fractions and mpfr values are handled exactly in their own
    arithmetic; anything else is evaluated as a float.
    """
    j = n - k
    if k < 1 or j < 0 or j > k - 1:
        return Fraction(0) if isinstance(p, Fraction) else 0.0 * p if isinstance(p, MPFR) else 0.0
    if isinstance(p, (Fraction, MPFR)):
        return math.comb(k - 1, j) * (1 - p) ** j * p ** (2 * k - n - 1)
    p = float(p)
    c = math.comb(k - 1, j)
    if c < 1e300:
        return c * (1 - p) ** j * p ** (2 * k - n - 1)
    return math.exp(_log_nu(p, k, n))


def _log_nu(p: float, k, n):
    k = np.asarray(k, dtype=float)
    j = n - k
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (
            gammaln(k)
            - gammaln(j + 1)
            - gammaln(k - j)
            + j * math.log1p(-p)
            + (2 * k - n - 1) * math.log(p)
        )
    return np.where((j >= 0) & (j <= k - 1), out, -np.inf)


def nu_row(p: float, n: int, k: np.ndarray | None = None) -> np.ndarray:
    """Float values ``nu_p(k, n)`` for an array of ``k`` (default ``1..n``)."""
    if k is None:
        k = np.arange(1, n + 1)
    return np.exp(_log_nu(float(p), k, n))


def weight_W(p, k: int, n: int):
    """Recurrence kernel ``f nu(k,n) + g nu(k,n-1) + h nu(k,n-2)``."""
    w = WeightKernel(p)
    return w.f * nu(p, k, n) + w.g * nu(p, k, n - 1) + w.h * nu(p, k, n - 2)


def weight_sum(p, n: int):
    """Closed form of ``sum_k W_p(k, n)`` over ``floor(n/2) <= k <= n``.

    ``((1-2p)(2-3p) - 2p(1+p)(p-1)^n) / (2-p)``, obtained from
    ``f S(n) + g S(n-1) + h S(n-2)``.
    """
    return ((1 - 2 * p) * (2 - 3 * p) - 2 * p * (1 + p) * (p - 1) ** n) / (2 - p)


def weight_sum_printed(p, n: int):
    """The variant ``(1-2p)(2-3p)/(2-p) - 2p(p-1)^n``; differs from :func:`weight_sum`."""
    return (1 - 2 * p) * (2 - 3 * p) / (2 - p) - 2 * p * (p - 1) ** n


def S_closed(p, n: int):
    """Total substitution-length mass ``(1 - (p-1)^n) / (2 - p)``."""
    return (1 - (p - 1) ** n) / (2 - p)


def S_sequence(p, n_max: int) -> list:
    """``S(0..n_max)`` from ``S(n) = p S(n-1) + (1-p) S(n-2)``, ``S(0) = 0``, ``S(1) = 1``."""
    if n_max < 0:
        raise RangeError(f"negative distance {n_max}")
    out = [0 * p, 0 * p + 1]
    for _ in range(n_max - 1):
        out.append(p * out[-1] + (1 - p) * out[-2])
    return out[: n_max + 1]


def S_recursive(p, n: int):
    return S_sequence(p, n)[n]


def nu_total(p, n: int):
    """``sum_k nu_p(k, n)``; exact over one common denominator when ``p`` is a Fraction."""
    if n < 1:
        return Fraction(0) if isinstance(p, Fraction) else 0.0
    if isinstance(p, Fraction):
        a, b = p.numerator, p.denominator
        # b^(k-1) nu(k, n) is an integer; lift every term to denominator b^(n-1)
        top = sum(
            math.comb(k - 1, n - k) * (b - a) ** (n - k) * a ** (2 * k - n - 1) * b ** (n - k)
            for k in range((n + 2) // 2, n + 1)
        )
        return Fraction(top, b ** (n - 1))
    return math.fsum(nu_row(p, n))


def seed_correlation(p):
    """``C_p(1) = 1 / (4 (1 + 2p))`` in the arithmetic of ``p``."""
    return 1 / (4 * (1 + 2 * p))


@lru_cache(maxsize=256)
def _seed_cross_check(p: Fraction) -> None:
    # the seed is not produced by the recurrence; compare it with the exact
    # order-1 stationary vector before any series is built on top of it
    from .marginals import build_transition, correlation_from_marginal, stationary

    exact = correlation_from_marginal(stationary(build_transition(1, p)), 1)
    if exact != seed_correlation(p):
        raise ArithmeticError(f"seed value disagrees with the order-1 marginal at p={p}")


@dataclass(frozen=True)
class CorrelationSeries:
    """Values ``C_p(n)`` for ``0 <= n <= n_max``.

    ``values`` holds Fractions (rational mode), float64 (53-bit) or mpfr.
    ``precision`` is the bit precision of the returned values (``None`` in
    rational mode).
    """

    p: Fraction
    values: np.ndarray = field(repr=False)
    mode: str
    precision: int | None
    seed_value: object = field(repr=False)
    shadow_precision: int | None = None

    @property
    def n_max(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, n):
        return self.values[n]

    def __len__(self) -> int:
        return len(self.values)

    def as_float(self) -> np.ndarray:
        if self.values.dtype == float:
            return self.values
        return np.array([float(x) for x in self.values])

    def abs_log(self) -> np.ndarray:
        """``log |C_p(n)|`` computed in the native arithmetic (no underflow)."""
        if self.values.dtype == float:
            with np.errstate(divide="ignore"):
                return np.log(np.abs(self.values))
        out = np.empty(len(self.values))
        for i, x in enumerate(self.values):
            if x == 0:
                out[i] = -np.inf
            elif isinstance(x, Fraction):
                out[i] = math.log(abs(x.numerator)) - math.log(x.denominator)
            else:
                out[i] = float(gmpy2.log(abs(x)))
        return out


def _window(lp: float, lq: float, n: int, lo: int, hi: int, guess: tuple[int, int], cut: float):
    # contiguous k-range where log nu(k, n) is within `cut` of its maximum;
    # starts from the previous row's window and widens when the edge is live
    a = max(lo, guess[0] - 1)
    b = min(hi, guess[1] + 2)
    while True:
        k = np.arange(a, b + 1, dtype=float)
        j = n - k
        v = gammaln(k) - gammaln(j + 1) - gammaln(k - j) + j * lq + (2 * k - n - 1) * lp
        keep = np.nonzero(v >= v.max() - cut)[0]
        grow_lo = keep[0] == 0 and a > lo
        grow_hi = keep[-1] == len(k) - 1 and b < hi
        if not (grow_lo or grow_hi):
            return a + int(keep[0]), a + int(keep[-1])
        if grow_lo:
            a = max(lo, a - 32)
        if grow_hi:
            b = min(hi, b + 32)


def _run_recurrence(P, n_max: int, cut: float | None, dtype):
    """Core recurrence in the arithmetic of ``P`` (float, mpfr or Fraction).

    Keeps ``A(m) = sum_k C(k) nu(k, m)`` so every step costs one dot product
    over the current row of ``nu``. Rows follow
    ``nu(k, n) = p nu(k-1, n-1) + (1-p) nu(k-1, n-2)``. With ``cut`` set,
    entries below ``exp(-cut)`` times the row maximum are dropped.
    """
    Q = 1 - P
    zero = P - P
    one = zero + 1
    kern = WeightKernel(P)
    f, g, h = kern.f, kern.g, kern.h
    C = np.empty(n_max + 1, dtype=dtype)
    A = np.empty(n_max + 1, dtype=dtype)
    C[0] = one / 4
    C[1] = seed_correlation(P)
    A[0] = zero
    A[1] = C[1]
    if cut is not None:
        lp, lq = math.log(float(P)), math.log1p(-float(P))
    rows = {0: (1, np.empty(0, dtype=dtype)), 1: (1, np.array([one], dtype=dtype))}
    win = (1, 1)
    pw = P  # p^(n-1)

    def get(row, lo, hi):
        rlo, arr = row
        out = np.full(hi - lo + 1, zero, dtype=dtype)
        a, b = max(lo, rlo), min(hi, rlo + len(arr) - 1)
        if a <= b:
            out[a - lo : b - lo + 1] = arr[a - rlo : b - rlo + 1]
        return out

    for n in range(2, n_max + 1):
        lo, hi = (n + 2) // 2, n
        if cut is None:
            a, b = lo, hi
        else:
            a, b = _window(lp, lq, n, lo, hi, win, cut)
            win = (a, b)
        row = P * get(rows[n - 1], a - 1, b - 1) + Q * get(rows[n - 2], a - 1, b - 1)
        rows[n] = (a, row)
        rows.pop(n - 3, None)
        top = b == n
        m = b - a + (0 if top else 1)
        inner = np.dot(C[a : a + m], row[:m]) if m > 0 else zero
        C[n] = (f * inner + g * A[n - 1] + h * A[n - 2]) / (1 - f * pw)
        A[n] = inner + C[n] * row[-1] if top else inner
        pw = pw * P
    return C


def _run_float(p: Fraction, n_max: int, precision: int) -> np.ndarray:
    cut = precision * math.log(2) + _GUARD
    if precision == 53:
        return _run_recurrence(float(p), n_max, cut, float)
    with gmpy2.context(precision=precision):
        return _run_recurrence(to_mpfr(p, precision), n_max, cut, object)


def _first_disagreement(lo: np.ndarray, hi: np.ndarray, rtol: float, precision: int):
    with gmpy2.context(precision=precision):
        for n in range(len(lo)):
            a, b = gmpy2.mpfr(lo[n]), gmpy2.mpfr(hi[n])
            scale = max(abs(a), abs(b))
            if abs(a - b) > rtol * scale:
                return n
    return None


def correlation_series(
    p,
    n_max: int,
    mode: str = "float",
    precision: int = 256,
    rtol: float = 1e-12,
    verify: bool = True,
    rational_n_max: int = RATIONAL_N_MAX,
) -> CorrelationSeries:
    """Compute ``C_p(n)`` for ``n = 0..n_max``.

    Parameters
    ----------
    p : str, Fraction or float
        Mutation probability; read exactly (``"0.1"`` means 1/10).
    n_max : int
        Horizon, at least 2.
    mode : {"float", "rational"}
    precision : int
        Working precision in bits for float mode; 53 selects float64.
    rtol : float
        Relative agreement required between the run and its shadow at
        doubled precision.
    verify : bool
        Skip the shadow run when False.

    Raises
    ------
    PrecisionExhaustedError
        When two precision doublings still leave a disagreement.
    """
    pf = check_probability(p)
    if n_max < 2:
        raise RangeError(f"n_max={n_max} must be at least 2")
    _seed_cross_check(pf)
    if mode == "rational":
        if n_max > rational_n_max:
            raise ResourceLimitError(f"rational horizon {n_max} exceeds {rational_n_max}")
        values = _run_recurrence(pf, n_max, None, object)
        return CorrelationSeries(pf, values, "rational", None, values[1])
    if mode != "float":
        raise ValueError(f"unknown mode {mode!r}")
    if precision < 53:
        raise RangeError(f"precision {precision} below 53 bits")

    primary = _run_float(pf, n_max, precision)
    if not verify:
        return CorrelationSeries(pf, primary, "float", precision, primary[1])
    prec = precision
    for _ in range(2):
        shadow_prec = 2 * prec
        shadow = _run_float(pf, n_max, shadow_prec)
        bad = _first_disagreement(primary, shadow, rtol, shadow_prec)
        if bad is None:
            return CorrelationSeries(pf, primary, "float", prec, primary[1], shadow_prec)
        primary, prec = shadow, shadow_prec
    raise PrecisionExhaustedError(
        f"no agreement to rtol={rtol} up to {prec} bits (first failing n={bad})", bad
    )


def contraction_bound(p, n: int) -> tuple[int, float, float]:
    """``(regime, alpha(p), alpha(p) + eps_p(n))`` for the decay inequality."""
    p = float(p)
    if p <= 1 / 3:
        alpha = 1 - 2 * p
        eps = 2 * p * (1 - p) ** n
        regime = 1
    elif p < 1 / 2:
        alpha = p * (3 - 4 * p) / (2 - p)
        eps = 2 * (1 - p) ** n * (1 - p - p * p) / (2 - p)
        regime = 2
    else:
        alpha = p / (2 - p)
        eps = 2 * p * (2 * p - 1) * (1 - p) ** n / (2 - p)
        regime = 3
    return regime, alpha, alpha + eps


@dataclass(frozen=True)
class ContractionReport:
    p: Fraction
    regime: int
    alpha: float
    n: np.ndarray
    ratio: np.ndarray
    bound: np.ndarray
    violations: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def decay_contraction_report(series: CorrelationSeries, n_min: int = 4, slack: float = 1e-12) -> ContractionReport:
    """Compare ``|C(n)| / max_{floor(n/2) <= k <= n} |C(k)|`` with the regime bound."""
    logs = series.abs_log()
    ns = np.arange(n_min, series.n_max + 1)
    ratio = np.empty(len(ns))
    bound = np.empty(len(ns))
    regime, alpha, _ = contraction_bound(series.p, n_min)
    for i, n in enumerate(ns):
        top = logs[n // 2 : n + 1].max()
        ratio[i] = math.exp(logs[n] - top) if np.isfinite(logs[n]) else 0.0
        bound[i] = contraction_bound(series.p, int(n))[2]
    viol = tuple(int(n) for n in ns[ratio > bound + slack])
    return ContractionReport(series.p, regime, alpha, ns, ratio, bound, viol)


def decay_horizon(p, threshold: float = 1e-3, n_cap: int = 100_000, precision: int = 53):
    """Least ``n <= n_cap`` with ``|C_p(m)| < threshold`` for every ``n <= m <= n_cap``.

    Isolated dips at sign changes do not count. Returns ``None`` when the
    series is still above the threshold at ``n_cap``, together with the
    computed series.
    """
    s = correlation_series(p, n_cap, precision=precision, verify=False)
    above = np.nonzero(s.abs_log() >= math.log(threshold))[0]
    if len(above) and above[-1] == n_cap:
        return None, s
    return (int(above[-1]) + 1 if len(above) else 0), s
