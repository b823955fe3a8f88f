"""Direct simulation of the dynamics on finite prefixes.

Randomness is counter based: the substitution symbol used by sample ``i`` at
step ``t`` and position ``j`` is raw Philox draw number
``i * stride + t * L + j`` under the master seed, so results do not depend on
how samples are split across workers.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._numbers import check_probability
from .correlation import correlation_series
from .errors import RangeError
from .marginals import build_transition, stationary
from .words import Word

__all__ = [
    "SimConfig",
    "EstimateWithCI",
    "simulate_batch",
    "simulate_prefix",
    "estimate_correlation",
    "estimate_correlations",
    "convergence_scan",
    "SampleComplexity",
    "sample_complexity_demo",
    "worker_count",
]

Z95 = 1.96
BLOCK = 4096


def worker_count() -> int:
    """Thread cap from ``EXPMOD_THREADS`` (default: CPU count)."""
    env = os.environ.get("EXPMOD_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SimConfig:
    p: object
    prefix_length: int = 17
    burn_in: int = 60
    samples: int = 10**5
    seed: int = 0

    def __post_init__(self):
        check_probability(self.p, closed=True)
        if self.prefix_length < 1 or self.burn_in < 0 or self.samples < 1:
            raise ValueError(f"invalid simulation size in {self}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    @property
    def stride(self) -> int:
        # draws reserved per sample, padded so every sample starts on a counter boundary
        need = max(1, self.burn_in * self.prefix_length)
        return -(-need // 4) * 4

    def threshold(self) -> int:
        """Raw draws below this value are modifications (``P = p`` exactly up to 2^-64)."""
        p = check_probability(self.p, closed=True)
        return min(int(p * 2**64), 2**64 - 1) if p < 1 else 2**64


@dataclass(frozen=True)
class EstimateWithCI:
    point: float
    half_width: float
    n_samples: int

    def contains(self, value) -> bool:
        return abs(float(value) - self.point) <= self.half_width

    def z_score(self, value) -> float:
        sd = self.half_width / Z95
        return (self.point - float(value)) / sd if sd > 0 else (0.0 if self.point == float(value) else math.inf)


def _draws(cfg: SimConfig, start: int, count: int) -> np.ndarray:
    bg = np.random.Philox(key=cfg.seed, counter=[start * cfg.stride // 4, 0, 0, 0])
    raw = bg.random_raw(count * cfg.stride).reshape(count, cfg.stride)
    return raw[:, : cfg.burn_in * cfg.prefix_length]


def simulate_batch(cfg: SimConfig, start: int, count: int) -> np.ndarray:
    """Prefixes of samples ``start .. start+count-1`` as a ``(count, L)`` uint8 array.

    Every sample starts from the all-ones word. Each step applies i.i.d.
    substitutions to the first ``L`` symbols (enough for ``L`` outputs) and
    keeps the first ``L`` output symbols.
    """
    L, T = cfg.prefix_length, cfg.burn_in
    x = np.ones((count, L), dtype=np.uint8)
    if T == 0:
        return x
    thr = cfg.threshold()
    raw = _draws(cfg, start, count).reshape(count, T, L)
    cols = np.arange(L)
    for t in range(T):
        mod = (raw[:, t, :] < thr) if thr < 2**64 else np.ones((count, L), dtype=bool)
        emitted = (2 - mod).astype(np.int64)
        flat = np.repeat((x ^ mod).ravel(), emitted.ravel())
        starts = np.concatenate([[0], np.cumsum(emitted.sum(axis=1))[:-1]])
        x = flat[starts[:, None] + cols]
    return x


def simulate_prefix(cfg: SimConfig, sample: int = 0) -> Word:
    return Word.from_symbols(simulate_batch(cfg, sample, 1)[0].tolist())


def _blocked(cfg: SimConfig, fn):
    # per-block results are merged in block order, so worker count never matters
    blocks = [(s, min(BLOCK, cfg.samples - s)) for s in range(0, cfg.samples, BLOCK)]
    workers = min(worker_count(), len(blocks))
    if workers <= 1:
        results = [fn(simulate_batch(cfg, s, c)) for s, c in blocks]
    else:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda b: fn(simulate_batch(cfg, *b)), blocks))
    return sum(results[1:], results[0])


def _estimate(agree: int, total: int) -> EstimateWithCI:
    q = agree / total
    var = q * (1 - q) if total > 1 else 0.25
    return EstimateWithCI((q - 0.5) / 2, Z95 * math.sqrt(var / total) / 2, total)


def estimate_correlations(cfg: SimConfig, distances) -> list[EstimateWithCI]:
    """Estimates of ``C_p(n) = (P{x_0 = x_n} - 1/2) / 2`` for several ``n`` at once."""
    distances = np.asarray(list(distances), dtype=int)
    if distances.max() + 1 > cfg.prefix_length:
        raise RangeError(f"distance {distances.max()} needs prefix length > {cfg.prefix_length}")
    counts = _blocked(cfg, lambda x: (x[:, [0]] == x[:, distances]).sum(axis=0).astype(np.int64))
    return [_estimate(int(c), cfg.samples) for c in counts]


def estimate_correlation(p, n: int, cfg: SimConfig) -> EstimateWithCI:
    if n + 1 > cfg.prefix_length:
        raise RangeError(f"distance {n} needs prefix length > {cfg.prefix_length}")
    if check_probability(p, closed=True) != check_probability(cfg.p, closed=True):
        raise ValueError(f"p={p} differs from the configured p={cfg.p}")
    return estimate_correlations(cfg, [n])[0]


def convergence_scan(p, ell: int, t_max: int, cfg: SimConfig) -> np.ndarray:
    """Total-variation distance to the stationary order-``ell`` marginal after ``t`` steps.

    Returns an array indexed by ``t = 0..t_max``. Sample ``i`` reuses the
    same draws for every ``t`` (a single trajectory is recorded per sample).
    """
    if ell > 8:
        raise RangeError(f"order {ell} above 8")
    size = ell + 1
    run = SimConfig(p, size, t_max, cfg.samples, cfg.seed)
    mu = stationary(build_transition(ell, float(check_probability(p))))
    weights = 1 << np.arange(size - 1, -1, -1)
    thr = run.threshold()
    hist = np.zeros((t_max + 1, 1 << size), dtype=np.int64)
    cols = np.arange(size)
    for s in range(0, run.samples, BLOCK):
        c = min(BLOCK, run.samples - s)
        x = np.ones((c, size), dtype=np.uint8)
        raw = _draws(run, s, c).reshape(c, t_max, size) if t_max else None
        for t in range(t_max + 1):
            hist[t] += np.bincount(x.astype(np.int64) @ weights, minlength=1 << size)
            if t == t_max:
                break
            mod = raw[:, t, :] < thr
            emitted = (2 - mod).astype(np.int64)
            flat = np.repeat((x ^ mod).ravel(), emitted.ravel())
            starts = np.concatenate([[0], np.cumsum(emitted.sum(axis=1))[:-1]])
            x = flat[starts[:, None] + cols]
    emp = hist / run.samples
    return 0.5 * np.abs(emp - mu.weights[None, :]).sum(axis=1)


@dataclass(frozen=True)
class SampleComplexity:
    p: Fraction
    n: np.ndarray
    correlation: np.ndarray
    required_samples: np.ndarray
    budget: int
    crossover: int | None  # first n needing more than `budget` samples

    @property
    def final(self) -> float:
        return float(self.required_samples[-1])


def sample_complexity_demo(p, target_decades: int = 2, budget: int = 10**6, precision: int = 256) -> SampleComplexity:
    """Samples needed for the 95% half-width to equal ``|C_p(n)|``.

    With ``q = 1/2 + 2 C`` the half-width is ``0.98 sqrt(q(1-q)/N)``, so
    ``N(n) = 0.98^2 q(1-q) / C_p(n)^2`` for ``n = 1 .. 10^target_decades``.
    """
    from .scaling.exponent import beta

    beta(p)  # refuse the singular points
    n_hi = 10**target_decades
    s = correlation_series(p, max(n_hi, 2), precision=precision)
    ns = np.arange(1, n_hi + 1)
    c = np.array([float(s[n]) for n in ns])
    q = 0.5 + 2 * c
    need = (Z95 / 2) ** 2 * q * (1 - q) / c**2
    over = np.nonzero(need > budget)[0]
    return SampleComplexity(s.p, ns, c, need, budget, int(ns[over[0]]) if len(over) else None)
