"""Binary words, substitution words and the expansion-modification maps.

A :class:`Word` is packed into a single integer with ``x_0`` as the most
significant bit, so ``word.bits`` doubles as the lexicographic index used by
the marginal transition matrices.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DimensionError, LengthMismatchError

__all__ = [
    "Word",
    "SubstitutionSymbol",
    "SubstitutionWord",
    "E",
    "M",
    "apply_local",
    "apply_global",
    "reachability_witness",
    "replay",
]


@dataclass(frozen=True)
class Word:
    """Finite binary word stored as packed bits (``x_0`` is the high bit)."""

    bits: int
    length: int

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("negative word length")
        if self.bits < 0 or self.bits >> self.length:
            raise ValueError(f"bits {self.bits} do not fit in length {self.length}")

    @classmethod
    def from_symbols(cls, symbols: Iterable[int]) -> "Word":
        bits = 0
        length = 0
        for x in symbols:
            if x not in (0, 1):
                raise ValueError(f"symbol {x!r} is not 0 or 1")
            bits = (bits << 1) | int(x)
            length += 1
        return cls(bits, length)

    @classmethod
    def from_str(cls, text: str) -> "Word":
        return cls.from_symbols(int(c) for c in text)

    @classmethod
    def zeros(cls, length: int) -> "Word":
        return cls(0, length)

    @classmethod
    def ones(cls, length: int) -> "Word":
        return cls((1 << length) - 1, length)

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i: int) -> int:
        if i < 0:
            i += self.length
        if not 0 <= i < self.length:
            raise IndexError(i)
        return (self.bits >> (self.length - 1 - i)) & 1

    def __iter__(self):
        for i in range(self.length):
            yield (self.bits >> (self.length - 1 - i)) & 1

    def __add__(self, other: "Word") -> "Word":
        return Word((self.bits << other.length) | other.bits, self.length + other.length)

    def __str__(self) -> str:
        return "".join(map(str, self))

    def __repr__(self) -> str:
        return f"Word('{self}')"

    def flip(self) -> "Word":
        return Word(self.bits ^ ((1 << self.length) - 1), self.length)

    def prefix(self, k: int) -> "Word":
        if not 0 <= k <= self.length:
            raise IndexError(k)
        return Word(self.bits >> (self.length - k), k)

    def is_prefix_of(self, other: "Word") -> bool:
        if self.length > other.length:
            return False
        return other.bits >> (other.length - self.length) == self.bits


class SubstitutionSymbol(enum.Enum):
    """Local substitution: expansion ``x -> xx`` or modification ``x -> 1-x``."""

    EXPANSION = "e"
    MODIFICATION = "m"

    @property
    def output_length(self) -> int:
        return 2 if self is SubstitutionSymbol.EXPANSION else 1


E = SubstitutionSymbol.EXPANSION
M = SubstitutionSymbol.MODIFICATION


@dataclass(frozen=True)
class SubstitutionWord:
    """Finite sequence over {e, m}, written as a string such as ``"emm"``."""

    symbols: str

    def __post_init__(self):
        if set(self.symbols) - {"e", "m"}:
            raise ValueError(f"substitution word {self.symbols!r} has symbols outside {{e, m}}")

    @classmethod
    def of(cls, symbols: Sequence[SubstitutionSymbol]) -> "SubstitutionWord":
        return cls("".join(s.value for s in symbols))

    def __len__(self) -> int:
        return len(self.symbols)

    def __getitem__(self, i: int) -> SubstitutionSymbol:
        return SubstitutionSymbol(self.symbols[i])

    def __iter__(self):
        return (SubstitutionSymbol(c) for c in self.symbols)

    def __add__(self, other: "SubstitutionWord") -> "SubstitutionWord":
        return SubstitutionWord(self.symbols + other.symbols)

    def __str__(self) -> str:
        return self.symbols

    def expansions(self, upto: int | None = None) -> int:
        return self.symbols[:upto].count("e")

    def output_length(self, input_length: int) -> int:
        if input_length > len(self):
            raise LengthMismatchError(
                f"substitution word of length {len(self)} cannot act on {input_length} symbols"
            )
        return input_length + self.expansions(input_length)


def apply_local(s: SubstitutionSymbol, x: int) -> Word:
    if x not in (0, 1):
        raise ValueError(f"symbol {x!r} is not 0 or 1")
    if s is E:
        return Word(3 * x, 2)
    return Word(1 - x, 1)


def apply_global(s: SubstitutionWord, w: Word) -> Word:
    """Apply ``s_i`` to ``w_i`` for every position of ``w`` and concatenate.

    Extra entries of ``s`` beyond ``len(w)`` are ignored.
    """
    if len(s) < len(w):
        raise LengthMismatchError(
            f"substitution word of length {len(s)} is shorter than word of length {len(w)}"
        )
    bits = 0
    length = 0
    for c, x in zip(s.symbols, w):
        if c == "e":
            bits = (bits << 2) | (3 * x)
            length += 2
        else:
            bits = (bits << 1) | (1 - x)
            length += 1
    return Word(bits, length)


def replay(words: Sequence[SubstitutionWord], a: Word) -> Word:
    for s in words:
        a = apply_global(s, a)
    return a


def _witness_from_zeros(c: Word) -> list[str]:
    # Core words (possibly shorter than the current word) taking 0^|c| to a
    # word with prefix c. Leading symbol is handled by m's and the tail by the
    # inductive hypothesis; see reachability_witness for the padding step.
    if c.length == 1:
        return ["e"] if c[0] == 0 else ["m"]
    tail = Word(c.bits & ((1 << (c.length - 1)) - 1), c.length - 1)
    rest = _witness_from_zeros(tail)
    k = len(rest) - 1
    lifted = ["m" + s for s in rest]
    if (k % 2 == 0) == (c[0] == 1):
        return lifted
    # one extra flip of the leading symbol while the tail stays all-zero
    return ["m" + "e" * (c.length - 1)] + lifted


def reachability_witness(a: Word, b: Word) -> list[SubstitutionWord]:
    """Substitution words whose successive application to ``a`` has prefix ``b``.

    Follows the two-stage construction: drive ``a`` to a word starting with
    ``0^(l+1)`` by repeated expansion of the leading zero, then build ``b``
    from ``0^(l+1)`` by induction on its length. Each returned word is padded
    with ``m`` (which never lengthens the word) to cover the current word, so
    ``replay(witness, a)`` works without truncation.
    """
    if len(a) != len(b):
        raise DimensionError(f"words of lengths {len(a)} and {len(b)} differ")
    if len(a) == 0:
        raise DimensionError("words must be non-empty")
    size = len(a)
    core: list[str] = []
    if a.bits != 0:
        core.append("e" * size if a[0] == 0 else "m" + "e" * (size - 1))
        core.extend(["e" * size] * (math.ceil(math.log2(size)) + 1))
    core.extend(_witness_from_zeros(b))

    witness = []
    current = a
    for s in core:
        # words never shrink, so core words always fit the current word
        padded = SubstitutionWord(s + "m" * (len(current) - len(s)))
        witness.append(padded)
        current = apply_global(padded, current)
    return witness
