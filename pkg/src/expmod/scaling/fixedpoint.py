"""Fixed-point constants sandwiching iterated concentration windows."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceError, InfeasibleError
from .concentration import d_width, default_beta_param

__all__ = [
    "series_constant",
    "QR",
    "qr_constants",
    "ell_map",
    "u_map",
    "SandwichReport",
    "iterated_window_sandwich",
    "find_x0",
]


def series_constant(p, rtol: float = 1e-15) -> float:
    """``sum_{m>=0} sqrt((m+1) / lambda^m)`` with ``lambda = 2 - p``."""
    lam = 2.0 - float(p)
    total, m = 0.0, 0
    while True:
        term = math.sqrt((m + 1) / lam**m)
        total += term
        # remaining tail is bounded by a geometric series from here on
        ratio = math.sqrt((m + 2) / ((m + 1) * lam))
        if ratio < 1 and term * ratio / (1 - ratio) <= rtol * total:
            return total
        m += 1


@dataclass(frozen=True)
class QR:
    Q: float
    R: float
    residual_Q: float
    residual_R: float
    strength: float  # d(x) * series / lambda


def _newton(fun, dfun, y, lo, hi, tol=1e-16, cap=100):
    for _ in range(cap):
        step = fun(y) / dfun(y)
        y_new = min(max(y - step, lo), hi)
        if abs(y_new - y) <= tol * abs(y):
            return y_new
        y = y_new
    return y


def qr_constants(x, p, beta_param: float | None = None, max_iter: int = 100_000) -> QR:
    """Largest ``Q`` and smallest ``R`` with ``Q = exp(-c/sqrt(Q))``, ``R = exp(c/sqrt(R))``.

    ``c = d(x) * series_constant(p) / (2 - p)``. ``Q`` is reached by plain
    iteration from 1 (monotone decreasing to the largest root), ``R`` by
    damped iteration from 1; both are then polished with Newton steps on
    ``y log y = -/+ c/2`` where ``y = sqrt(Q)`` or ``sqrt(R)``.

    Raises
    ------
    InfeasibleError
        If ``c > 2/e``, where the ``Q`` equation has no root in ``(0, 1]``.
    """
    if beta_param is None:
        beta_param = default_beta_param(p)
    lam = 2.0 - float(p)
    c = d_width(x, p, beta_param) * series_constant(p) / lam
    if c > 2 / math.e:
        raise InfeasibleError(f"no fixed point for Q at x={x} (strength {c:.6g} > 2/e)")

    q = 1.0
    for _ in range(max_iter):
        nxt = math.exp(-c / math.sqrt(q))
        if abs(nxt - q) <= 1e-15:
            break
        q = nxt
    y = _newton(lambda y: y * math.log(y) + c / 2, lambda y: math.log(y) + 1, math.sqrt(q), 1 / math.e, 1.0)
    Q = y * y

    r = 1.0
    for _ in range(max_iter):
        nxt = 0.5 * r + 0.5 * math.exp(c / math.sqrt(r))
        if abs(nxt - r) <= 1e-15 * r:
            break
        r = nxt
    else:
        raise ConvergenceError(f"damped iteration for R did not settle at x={x}")
    y = _newton(lambda y: y * math.log(y) - c / 2, lambda y: math.log(y) + 1, math.sqrt(r), 1.0, math.inf)
    R = y * y
    return QR(Q, R, abs(Q - math.exp(-c / math.sqrt(Q))), abs(R - math.exp(c / math.sqrt(R))), c)


def ell_map(x, p, beta_param):
    return x / (2 - float(p) + d_width(x, p, beta_param))


def u_map(x, p, beta_param):
    return x / (2 - float(p) - d_width(x, p, beta_param))


@dataclass(frozen=True)
class SandwichReport:
    p: float
    x: float
    k_max: int
    Q: float
    R: float
    worst_lower: float  # min over (k, j) of l^j(lam^k x) / (Q lam^(k-j) x)
    worst_upper: float  # max over (k, j) of u^j(lam^k x) / (R lam^(k-j) x)
    ordered: bool  # l^j <= u^j everywhere

    @property
    def ok(self) -> bool:
        return self.worst_lower >= 1 and self.worst_upper <= 1 and self.ordered


def iterated_window_sandwich(x, p, beta_param: float | None = None, k_max: int = 20) -> SandwichReport:
    """Check ``Q lam^(k-j) x <= l^j(lam^k x) <= u^j(lam^k x) <= R lam^(k-j) x``.

    ``l^j`` and ``u^j`` are ``j``-fold compositions of the window endpoint
    maps, for all ``1 <= j <= k <= k_max``.
    """
    if beta_param is None:
        beta_param = default_beta_param(p)
    qr = qr_constants(x, p, beta_param)
    lam = 2.0 - float(p)
    lo_worst, hi_worst, ordered = math.inf, 0.0, True
    for k in range(1, k_max + 1):
        lo = hi = lam**k * x
        for j in range(1, k + 1):
            lo = ell_map(lo, p, beta_param)
            hi = u_map(hi, p, beta_param)
            ref = lam ** (k - j) * x
            lo_worst = min(lo_worst, lo / (qr.Q * ref))
            hi_worst = max(hi_worst, hi / (qr.R * ref))
            ordered &= lo <= hi
    return SandwichReport(float(p), float(x), k_max, qr.Q, qr.R, lo_worst, hi_worst, ordered)


def find_x0(p, beta_param: float | None = None, grid=None, k_max: int = 20) -> float | None:
    """Smallest grid ``x`` from which ``Q`` exists, ``lam Q >= 1`` and the sandwich holds."""
    if beta_param is None:
        beta_param = default_beta_param(p)
    if grid is None:
        grid = np.geomspace(math.e, 1e12, 121)
    lam = 2.0 - float(p)
    ok = []
    for x in grid:
        try:
            rep = iterated_window_sandwich(x, p, beta_param, k_max)
            ok.append(rep.ok and lam * rep.Q >= 1)
        except InfeasibleError:
            ok.append(False)
    if not ok[-1]:
        return None
    i = len(ok) - 1
    while i > 0 and ok[i - 1]:
        i -= 1
    return float(grid[i])
