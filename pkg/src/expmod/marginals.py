"""Finite marginal Markov chains of the expansion-modification dynamics.

The length-(l+1) prefix of ``s(x)`` depends only on a prefix of ``x``, so its
distribution evolves as a Markov chain on ``{0,1}^(l+1)`` with matrix ``M_l``.
States are indexed lexicographically (``Word.bits``); distributions are row
vectors and evolve as ``mu -> mu @ M``.

Two arithmetic modes are supported throughout. Float mode stores ``M_l`` as a
``scipy.sparse`` CSR matrix. Rational mode (``p`` given as a ``Fraction``)
stores each row as a ``{target: Fraction}`` dict and solves for the stationary
vector exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from ._numbers import check_probability
from .errors import ConvergenceError, DimensionError, NotCertifiedError, RangeError, ResourceLimitError
from .words import Word

__all__ = [
    "ELL_MAX",
    "TransitionMatrix",
    "MarginalDistribution",
    "substitution_leaves",
    "build_transition",
    "stationary",
    "primitivity_certificate",
    "compatibility_residual",
    "correlation_from_marginal",
    "evolve_tv",
]

ELL_MAX = 12


@dataclass(frozen=True)
class Leaf:
    """Minimal substitution prefix producing at least ``size`` output symbols.

    ``sources[j]`` is the input position feeding output ``j`` and ``flips[j]``
    says whether it is negated on the way.
    """

    word: str
    sources: tuple[int, ...]
    flips: tuple[int, ...]

    @property
    def consumed(self) -> int:
        return len(self.word)

    def weight(self, p):
        m = self.word.count("m")
        return p**m * (1 - p) ** (len(self.word) - m)


@lru_cache(maxsize=None)
def substitution_leaves(size: int) -> tuple[Leaf, ...]:
    """All substitution prefixes that first reach ``size`` output symbols.

    Branches stop as soon as ``size`` outputs exist, so the leaves partition
    the substitution space and their weights sum to one.
    """
    leaves = []

    def grow(word, sources, flips):
        if len(sources) >= size:
            leaves.append(Leaf(word, tuple(sources[:size]), tuple(flips[:size])))
            return
        i = len(word)
        grow(word + "e", sources + [i, i], flips + [0, 0])
        grow(word + "m", sources + [i], flips + [1])

    grow("", [], [])
    return tuple(leaves)


def _leaf_targets(leaf: Leaf, size: int, n_inputs: int) -> np.ndarray:
    """Target index of the output prefix for every input word of length ``n_inputs``."""
    b = np.arange(1 << n_inputs, dtype=np.int64)
    target = np.zeros_like(b)
    for j, (src, flip) in enumerate(zip(leaf.sources, leaf.flips)):
        bit = ((b >> (n_inputs - 1 - src)) & 1) ^ flip
        target |= bit << (size - 1 - j)
    return target


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix ``M_l`` on words of length ``ell + 1``.

    Exactly one of ``matrix`` (float CSR) and ``rows`` (rational dicts) is set.
    """

    ell: int
    p: object
    matrix: sp.csr_matrix | None = None
    rows: tuple[dict, ...] | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return 1 << (self.ell + 1)

    @property
    def exact(self) -> bool:
        return self.rows is not None

    def entry(self, source: int, target: int):
        if self.exact:
            return self.rows[source].get(target, Fraction(0))
        return float(self.matrix[source, target])

    def dense(self) -> np.ndarray:
        if self.exact:
            out = np.full((self.size, self.size), Fraction(0), dtype=object)
            for b, row in enumerate(self.rows):
                for a, w in row.items():
                    out[b, a] = w
            return out
        return self.matrix.toarray()

    def support(self) -> np.ndarray:
        """Boolean pattern of strictly positive entries."""
        if self.exact:
            out = np.zeros((self.size, self.size), dtype=bool)
            for b, row in enumerate(self.rows):
                for a, w in row.items():
                    out[b, a] = w > 0
            return out
        return self.matrix.toarray() > 0

    def row_sums(self):
        if self.exact:
            return [sum(row.values(), Fraction(0)) for row in self.rows]
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def left_multiply(self, mu):
        """Return ``mu @ M``."""
        if not self.exact:
            return np.asarray(mu, dtype=float) @ self.matrix
        out = [Fraction(0)] * self.size
        for b, row in enumerate(self.rows):
            mb = mu[b]
            if mb:
                for a, w in row.items():
                    out[a] += mb * w
        return np.array(out, dtype=object)


@dataclass(frozen=True)
class MarginalDistribution:
    """Probability vector on ``{0,1}^(ell+1)`` indexed by ``Word.bits``."""

    ell: int
    weights: np.ndarray

    def __post_init__(self):
        if len(self.weights) != 1 << (self.ell + 1):
            raise DimensionError(
                f"{len(self.weights)} weights for marginal order {self.ell}"
            )

    @property
    def exact(self) -> bool:
        return self.weights.dtype == object

    def __getitem__(self, word) -> object:
        if isinstance(word, str):
            word = Word.from_str(word)
        if isinstance(word, Word):
            if len(word) != self.ell + 1:
                raise DimensionError(f"word {word} has wrong length for order {self.ell}")
            word = word.bits
        return self.weights[word]

    @classmethod
    def point_mass(cls, word: Word, exact: bool = False) -> "MarginalDistribution":
        size = 1 << len(word)
        if exact:
            w = np.full(size, Fraction(0), dtype=object)
            w[word.bits] = Fraction(1)
        else:
            w = np.zeros(size)
            w[word.bits] = 1.0
        return cls(len(word) - 1, w)

    @classmethod
    def uniform(cls, ell: int, exact: bool = False) -> "MarginalDistribution":
        size = 1 << (ell + 1)
        if exact:
            return cls(ell, np.full(size, Fraction(1, size), dtype=object))
        return cls(ell, np.full(size, 1.0 / size))

    def marginalize_last(self) -> np.ndarray:
        """Weights of the order ``ell - 1`` marginal (sum over the last symbol)."""
        return self.weights.reshape(-1, 2).sum(axis=1)


def build_transition(ell: int, p, *, ell_max: int = ELL_MAX, exact: bool | None = None) -> TransitionMatrix:
    """Marginal transition matrix ``M_l`` for mutation probability ``p``.

    ``M[b, a]`` is the probability that the first ``ell + 1`` symbols of
    ``s(b...)`` spell ``a``. Rational mode is used when ``p`` is a Fraction
    (or ``exact=True``).
    """
    if ell < 0:
        raise RangeError(f"marginal order {ell} is negative")
    if ell > ell_max:
        raise ResourceLimitError(f"marginal order {ell} exceeds ell_max={ell_max}")
    if exact is None:
        exact = isinstance(p, Fraction)
    p_exact = check_probability(p)
    size = ell + 1
    n = 1 << size
    leaves = substitution_leaves(size)

    if exact:
        rows = [dict() for _ in range(n)]
        for leaf in leaves:
            w = leaf.weight(p_exact)
            for b, a in enumerate(_leaf_targets(leaf, size, size).tolist()):
                rows[b][a] = rows[b].get(a, Fraction(0)) + w
        return TransitionMatrix(ell, p_exact, rows=tuple(rows))

    pf = float(p_exact)
    sources = np.arange(n, dtype=np.int64)
    r, c, d = [], [], []
    for leaf in leaves:
        r.append(sources)
        c.append(_leaf_targets(leaf, size, size))
        d.append(np.full(n, leaf.weight(pf)))
    mat = sp.coo_matrix(
        (np.concatenate(d), (np.concatenate(r), np.concatenate(c))), shape=(n, n)
    ).tocsr()
    mat.sum_duplicates()
    return TransitionMatrix(ell, pf, matrix=mat)


def _solve_small(a: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Exact Gauss-Jordan elimination for the tiny orbit systems."""
    n = len(rhs)
    m = [row[:] + [v] for row, v in zip(a, rhs)]
    for col in range(n):
        piv = next(r for r in range(col, n) if m[r][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        m[col] = [x * inv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


@lru_cache(maxsize=64)
def _exact_stationary_levels(ell: int, p: Fraction) -> tuple[np.ndarray, ...]:
    # Stationary vectors of orders 0..ell, each solved exactly from the lower
    # orders. A leaf consuming r < l+1 input symbols only sees the order r-1
    # marginal of the (stationary) input; the two leaves m^l e and m^(l+1)
    # consume everything and couple mu_l(a) to mu_l(a ^ F) and mu_l(a ^ G),
    # with F = 1...1 and G = 1...10. Each orbit {a, a^F, a^G, a^F^G} is solved
    # as a small linear system.
    # order 0 is fixed by the flip symmetry alone
    levels: list[np.ndarray] = [np.array([Fraction(1, 2)] * 2, dtype=object)]
    for level in range(1, ell + 1):
        size = level + 1
        n = 1 << size
        known = [Fraction(0)] * n
        for leaf in substitution_leaves(size):
            r = leaf.consumed
            if r == size:
                continue
            w = leaf.weight(p)
            lower = levels[r - 1]
            targets = _leaf_targets(leaf, size, r).tolist()
            for b, a in enumerate(targets):
                known[a] += w * lower[b]
        full = (1 << size) - 1
        partial = full ^ 1
        c_all = p ** (level + 1)
        c_last = p**level * (1 - p)
        mu = [None] * n
        for a in range(n):
            if mu[a] is not None:
                continue
            orbit = sorted({a, a ^ full, a ^ partial, a ^ full ^ partial})
            pos = {x: i for i, x in enumerate(orbit)}
            mat = [[Fraction(0)] * len(orbit) for _ in orbit]
            for x in orbit:
                i = pos[x]
                mat[i][i] += 1
                mat[i][pos[x ^ full]] -= c_all
                mat[i][pos[x ^ partial]] -= c_last
            sol = _solve_small(mat, [known[x] for x in orbit])
            for x, v in zip(orbit, sol):
                mu[x] = v
        levels.append(np.array(mu, dtype=object))
    return tuple(levels)


def stationary(
    M: TransitionMatrix,
    tol: float = 1e-14,
    max_iter: int = 1_000_000,
    *,
    start: np.ndarray | None = None,
) -> MarginalDistribution:
    """Stationary probability vector of ``M``.

    Float mode runs power iteration ``mu <- mu @ M`` from the uniform vector
    until ``||mu M - mu||_1 <= tol``. Rational mode solves exactly and checks
    the fixed-point equation ``mu M = mu`` with exact arithmetic before
    returning.
    """
    if M.exact:
        mu = _exact_stationary_levels(M.ell, M.p)[M.ell]
        if any(x != y for x, y in zip(M.left_multiply(mu), mu)):
            raise ConvergenceError("exact stationary vector failed the fixed-point check")
        return MarginalDistribution(M.ell, mu.copy())

    mu = np.full(M.size, 1.0 / M.size) if start is None else np.asarray(start, dtype=float)
    mat_t = M.matrix.T.tocsr()
    for _ in range(max_iter):
        nxt = mat_t @ mu
        nxt /= nxt.sum()
        if np.abs(nxt - mu).sum() <= tol:
            return MarginalDistribution(M.ell, nxt)
        mu = nxt
    raise ConvergenceError(f"power iteration did not reach tol={tol} in {max_iter} steps")


def primitivity_certificate(M: TransitionMatrix, cap: int | None = None) -> int:
    """Least ``n`` with ``M^n`` entrywise positive.

    Works on the support pattern with boolean products, so no underflow can
    fake a zero. The default cap is Wielandt's bound ``(N-1)^2 + 1``.
    """
    support = M.support()
    size = support.shape[0]
    if cap is None:
        cap = (size - 1) ** 2 + 1
    step = support.astype(np.float64)
    power = support.copy()
    for n in range(1, cap + 1):
        if power.all():
            return n
        power = (power.astype(np.float64) @ step) > 0
    raise NotCertifiedError(f"no strictly positive power up to n={cap}")


def compatibility_residual(mu_hi: MarginalDistribution, mu_lo: MarginalDistribution):
    """``max_a |sum_x mu_hi(a x) - mu_lo(a)|``."""
    if mu_hi.ell != mu_lo.ell + 1:
        raise DimensionError(
            f"orders {mu_hi.ell} and {mu_lo.ell} do not differ by exactly one"
        )
    diff = mu_hi.marginalize_last() - mu_lo.weights
    return max(abs(x) for x in diff)


def correlation_from_marginal(mu: MarginalDistribution, n: int):
    """Two-site correlation ``mu{x_0 = x_n = 1} - 1/4`` read off a marginal."""
    if not 0 <= n <= mu.ell:
        raise RangeError(f"distance {n} outside [0, {mu.ell}]")
    size = mu.ell + 1
    idx = np.arange(1 << size)
    mask = ((idx >> (size - 1)) & 1).astype(bool) & ((idx >> (size - 1 - n)) & 1).astype(bool)
    quarter = Fraction(1, 4) if mu.exact else 0.25
    return mu.weights[mask].sum() - quarter


def evolve_tv(M: TransitionMatrix, start: MarginalDistribution, target: MarginalDistribution, t_max: int) -> np.ndarray:
    """Total-variation distances ``||start M^t - target||`` for ``t = 0..t_max``."""
    out = np.empty(t_max + 1)
    mu = np.asarray(start.weights, dtype=float)
    ref = np.asarray(target.weights, dtype=float)
    mat_t = M.matrix.T.tocsr() if not M.exact else None
    for t in range(t_max + 1):
        out[t] = 0.5 * np.abs(mu - ref).sum()
        mu = mat_t @ mu if mat_t is not None else np.asarray(M.left_multiply(mu), dtype=float)
    return out


def stationary_correlations(ell: int, p, **kwargs) -> list:
    """``C(n)`` for ``n = 0..ell`` from the order-``ell`` stationary vector."""
    mu = stationary(build_transition(ell, p), **kwargs)
    return [correlation_from_marginal(mu, n) for n in range(ell + 1)]
