"""Large-deviation rate function, tail masses of ``nu_p(., n)`` and window signs."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import xlogy

from .._numbers import check_probability
from ..correlation import _log_nu, weight_W
from ..errors import RangeError
from .lowp import b_line

__all__ = [
    "rate_I",
    "rate_I_second_derivative",
    "robbins_bounds",
    "d_width",
    "window_bounds",
    "WindowSpec",
    "TailReport",
    "concentration_tail",
    "concentration_threshold",
    "WindowSignReport",
    "window_sign_scan",
    "window_sign_threshold",
    "default_beta_param",
]


def rate_I(p, q):
    """Rate function ``q/(q+1) log(q/(1-p)) + (1-q)/(q+1) log((1-q)/p)``.

    Vectorised over ``q``; the endpoints ``q = 0`` and ``q = 1`` take their
    limiting values ``log(1/p)`` and ``log(1/(1-p))/2``.
    """
    p = float(p)
    q = np.asarray(q, dtype=float)
    out = (xlogy(q, q) - q * math.log1p(-p) + xlogy(1 - q, 1 - q) - (1 - q) * math.log(p)) / (q + 1)
    return out if out.ndim else float(out)


def rate_I_second_derivative(p, q):
    """Second derivative of ``rate_I`` in ``q`` on the open interval ``(0, 1)``."""
    p = float(p)
    q = np.asarray(q, dtype=float)
    num = q * np.log(q) + (1 - q) * np.log1p(-q) - q * math.log1p(-p) - (1 - q) * math.log(p)
    d1 = np.log(q) - np.log1p(-q) - math.log1p(-p) + math.log(p)
    d2 = 1 / (q * (1 - q))
    out = d2 / (1 + q) - 2 * d1 / (1 + q) ** 2 + 2 * num / (1 + q) ** 3
    return out if out.ndim else float(out)


def robbins_bounds(p, k: int, n: int) -> tuple[float, float]:
    """Stirling-refined lower and upper bounds for ``nu_p(k+1, n+1)``.

    ``exp(-n I_p(n/k - 1)) A^-/+`` with
    ``A^+/- = exp(+/- eps) / sqrt(2 pi k (n/k-1)(2-n/k))`` and
    ``eps = 1 / (4 min(n-k, 2k-n))`` strictly inside ``n/2 < k < n``, and
    ``A = 1`` at the two ends where the bound is an identity.
    """
    if not n / 2 <= k <= n:
        raise RangeError(f"k={k} outside [n/2, n] for n={n}")
    base = math.exp(-n * rate_I(p, n / k - 1))
    if 2 * k == n or k == n:
        return base, base
    eps = 1.0 / (4 * min(n - k, 2 * k - n))
    pre = 1.0 / math.sqrt(2 * math.pi * k * (n / k - 1) * (2 - n / k))
    return base * pre * math.exp(-eps), base * pre * math.exp(eps)


def d_width(n, p, beta_param: float):
    """Concentration half-width ``sqrt(p(1-p)(2-p)(beta+1) log(n) / n)``."""
    p = float(p)
    n = np.asarray(n, dtype=float)
    out = np.sqrt(p * (1 - p) * (2 - p) * (beta_param + 1) * np.log(n) / n)
    return out if out.ndim else float(out)


def window_bounds(x, p, beta_param: float) -> tuple[float, float]:
    """``(x / (2-p+d(x)), x / (2-p-d(x)))``."""
    d = d_width(x, p, beta_param)
    lam = 2 - float(p)
    if d >= lam:
        raise RangeError(f"width d({x})={d} not below 2-p; window undefined")
    return x / (lam + d), x / (lam - d)


def default_beta_param(p) -> float:
    """``b_p + 1``, the default free exponent with ``beta > b``."""
    return b_line(p) + 1.0


@dataclass(frozen=True)
class WindowSpec:
    p: float
    beta_param: float
    n: int
    d_of_n: float
    ell_of_n: float
    u_of_n: float

    @classmethod
    def at(cls, n: int, p, beta_param: float | None = None) -> "WindowSpec":
        if beta_param is None:
            beta_param = default_beta_param(p)
        lo, hi = window_bounds(n, p, beta_param)
        return cls(float(p), beta_param, n, d_width(n, p, beta_param), lo, hi)

    def k_range(self) -> np.ndarray:
        return np.arange(math.ceil(self.ell_of_n), math.floor(self.u_of_n) + 1)


@dataclass(frozen=True)
class TailReport:
    p: float
    n: int
    delta: float
    bound: float
    tail_mass: float
    window_mass: float

    @property
    def ok(self) -> bool:
        return self.delta <= self.bound


def concentration_tail(p, n: int, beta_param: float, b: float) -> TailReport:
    """``delta_n = n^b * sum nu_p(k, n)`` over ``|n/k - (2-p)| > d(n)``.

    The sum runs over ``ceil(n/2) <= k <= n``; the bound is
    ``n^(-(beta-b)/2)``. Also returns the complementary window mass so the
    two can be checked against ``S_p(n)``.
    """
    if not beta_param > b > 0:
        raise RangeError(f"need beta > b > 0, got beta={beta_param}, b={b}")
    pf = float(p)
    k = np.arange((n + 1) // 2, n + 1)
    vals = np.exp(_log_nu(pf, k, n))
    d = d_width(n, pf, beta_param)
    outside = np.abs(n / k - (2 - pf)) > d
    tail = float(vals[outside].sum())
    inside = float(vals[~outside].sum())
    delta = n**b * tail
    return TailReport(pf, n, delta, n ** (-(beta_param - b) / 2), tail, inside)


def concentration_threshold(p, beta_param: float, b: float, n_grid) -> int | None:
    """Smallest grid ``n`` from which the tail bound holds at every later grid point."""
    ok = [concentration_tail(p, int(n), beta_param, b).ok for n in n_grid]
    return _threshold(n_grid, ok)


def _threshold(grid, ok):
    if not ok or not ok[-1]:
        return None
    i = len(ok) - 1
    while i > 0 and ok[i - 1]:
        i -= 1
    return int(grid[i])


def _q_poly(p, k, n):
    # W(k, n) = (1-p)^(n-k) p^(2k-n) (k-1)! / ((n-k)! (2k-n+1)!) * this polynomial
    # for k strictly inside the support of all three nu terms
    return (1 - 2 * p) * (2 * n - 3 * k) * (2 * k - n + 1) + p * (2 * n - 3 * k - 2) * (n - k)


def _weight_sign(p: Fraction, k: int, n: int) -> int:
    if (n + 3) // 2 <= k <= n - 2:
        v = _q_poly(p, k, n)
    else:
        v = weight_W(p, k, n)
    return (v > 0) - (v < 0)


@dataclass(frozen=True)
class WindowSignReport:
    p: Fraction
    n: int
    k_lo: int
    k_hi: int
    positive: int
    negative: int
    zero: int

    @property
    def verdict(self) -> str:
        if self.positive and not (self.negative or self.zero):
            return "all-positive"
        if self.negative and not (self.positive or self.zero):
            return "all-negative"
        return "mixed"


def window_sign_scan(p, n: int, beta_param: float | None = None) -> WindowSignReport:
    """Sign of ``W_p(k, n)`` for integers ``k`` in ``[l(n), u(n)]``.

    Signs are exact: ``p`` is read as a rational and the interior sign comes
    from the polynomial factor of ``W``.

    Raises
    ------
    RangeError
        If the window contains no integer.
    """
    pq = check_probability(p)
    spec = WindowSpec.at(n, pq, beta_param)
    ks = spec.k_range()
    if len(ks) == 0:
        raise RangeError(f"window [{spec.ell_of_n}, {spec.u_of_n}] holds no integer at n={n}")
    signs = np.array([_weight_sign(pq, int(k), n) for k in ks])
    return WindowSignReport(
        pq, n, int(ks[0]), int(ks[-1]),
        int((signs > 0).sum()), int((signs < 0).sum()), int((signs == 0).sum()),
    )


def window_sign_threshold(p, n_grid, expected: str, beta_param: float | None = None) -> int | None:
    """Smallest grid ``n`` from which the scan verdict equals ``expected`` throughout."""
    ok = [window_sign_scan(p, int(n), beta_param).verdict == expected for n in n_grid]
    return _threshold(n_grid, ok)
