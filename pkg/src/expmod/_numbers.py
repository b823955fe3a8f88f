"""Parsing and conversion helpers for probabilities and real-number output."""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import gmpy2

MPFR = type(gmpy2.mpfr(0))


def as_fraction(p) -> Fraction:
    """Exact rational reading of ``p``.

    Floats are read through their shortest repr, so ``0.1`` becomes ``1/10``
    rather than the binary double nearest to it.
    """
    if isinstance(p, Fraction):
        return p
    if isinstance(p, Rational):
        return Fraction(p)
    if isinstance(p, str):
        return Fraction(p.strip())
    if isinstance(p, float):
        return Fraction(repr(p))
    if isinstance(p, MPFR):
        num, den = gmpy2.mpq(p).as_integer_ratio()
        return Fraction(int(num), int(den))
    return Fraction(p)


def check_probability(p, *, closed: bool = False) -> Fraction:
    """Return ``p`` as a Fraction, raising ``ValueError`` outside (0,1).

    With ``closed=True`` the endpoints 0 and 1 are admitted.
    """
    x = as_fraction(p)
    if closed:
        if not 0 <= x <= 1:
            raise ValueError(f"probability {p} outside [0, 1]")
    elif not 0 < x < 1:
        raise ValueError(f"mutation probability {p} outside (0, 1)")
    return x


def to_mpfr(p, precision: int):
    """``p`` correctly rounded to an mpfr of ``precision`` bits."""
    x = as_fraction(p)
    with gmpy2.context(precision=precision):
        return gmpy2.mpfr(gmpy2.mpq(x.numerator, x.denominator))


def format_real(x, digits: int = 17) -> str:
    """Round-trip-safe text for floats, mpfr values and Fractions.

    Fractions print as ``num/den``; everything else in scientific notation
    with ``digits`` significant digits.
    """
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, MPFR):
        if x == 0:
            return "0"
        mant, exp, _ = gmpy2.digits(x, 10, digits)
        sign = ""
        if mant.startswith("-"):
            sign, mant = "-", mant[1:]
        e = exp - 1
        return f"{sign}{mant[0]}.{mant[1:]}e{'-' if e < 0 else '+'}{abs(e):02d}"
    x = float(x)
    if x == 0:
        return "0"
    return f"{x:.{digits - 1}e}"
