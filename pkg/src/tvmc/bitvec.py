"""Three-valued bits and bit vectors.

Each bit is '0' (definitely zero), '1' (definitely one) or 'X' (either).
A vector of width w therefore stands for a nonempty set of concrete
w-bit words: every 'X' ranges over {0, 1} independently, so a vector
with k unknown bits stands for 2**k words.

A vector is stored as two integers: ``ones`` has a bit set where the
bit is definitely 1, ``unknowns`` where it is unknown.  The two masks
are disjoint and fit in ``width`` bits.  Bit 0 is the least significant
bit; the textual form is written most-significant-first, e.g.
``TBitVec.from_string("0X1")`` has bit 0 = '1', bit 1 = 'X', bit 2 = '0'.

All operations are pure and return new values.  The abstract
transformers (``invert``, ``and_``, ``add``, ``cmp_ult``, ...) are sound
(they cover every concrete result of the corresponding concrete
operation), monotone in the covering order, and exact when all
arguments are concrete.  Addition and subtraction use the closed-form
carry-propagation trick on the two masks rather than a per-bit adder
chain.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import ContractViolation


class TBit(enum.Enum):
    ZERO = "0"
    ONE = "1"
    UNKNOWN = "X"

    def __str__(self):
        return self.value

    @staticmethod
    def of(value: bool) -> "TBit":
        return TBit.ONE if value else TBit.ZERO

    def to_bool(self):
        """The definite truth value, or None when unknown."""
        if self is TBit.UNKNOWN:
            return None
        return self is TBit.ONE

    def negate(self) -> "TBit":
        if self is TBit.UNKNOWN:
            return TBit.UNKNOWN
        return TBit.ZERO if self is TBit.ONE else TBit.ONE

    def and_(self, other: "TBit") -> "TBit":
        if self is TBit.ZERO or other is TBit.ZERO:
            return TBit.ZERO
        if self is TBit.ONE and other is TBit.ONE:
            return TBit.ONE
        return TBit.UNKNOWN

    def or_(self, other: "TBit") -> "TBit":
        if self is TBit.ONE or other is TBit.ONE:
            return TBit.ONE
        if self is TBit.ZERO and other is TBit.ZERO:
            return TBit.ZERO
        return TBit.UNKNOWN

    def concretizations(self):
        """The set of concrete bits this bit stands for; never empty."""
        if self is TBit.UNKNOWN:
            return (0, 1)
        return (1,) if self is TBit.ONE else (0,)


def _check_same_width(a: "TBitVec", b: "TBitVec"):
    if a.width != b.width:
        raise ContractViolation(f"width mismatch: {a.width} vs {b.width}")


@dataclass(frozen=True, slots=True)
class TBitVec:
    """Fixed-width vector of three-valued bits."""

    width: int
    ones: int
    unknowns: int

    def __post_init__(self):
        if self.width < 1:
            raise ContractViolation(f"width must be positive, got {self.width}")
        mask = (1 << self.width) - 1
        if self.ones & ~mask or self.unknowns & ~mask:
            raise ContractViolation("bit masks exceed the declared width")
        if self.ones & self.unknowns:
            raise ContractViolation("a bit cannot be both one and unknown")

    # -- construction ------------------------------------------------

    @staticmethod
    def from_int(value: int, width: int) -> "TBitVec":
        if not 0 <= value < (1 << width):
            raise ContractViolation(f"{value} does not fit in {width} bits")
        return TBitVec(width, value, 0)

    @staticmethod
    def from_string(text: str) -> "TBitVec":
        """Parse the most-significant-first rendering, e.g. "0X1"."""
        if not text or any(c not in "01X" for c in text):
            raise ContractViolation(f"not a three-valued bit string: {text!r}")
        ones = unknowns = 0
        for c in text:
            ones <<= 1
            unknowns <<= 1
            if c == "1":
                ones |= 1
            elif c == "X":
                unknowns |= 1
        return TBitVec(len(text), ones, unknowns)

    @staticmethod
    def top(width: int) -> "TBitVec":
        """The all-unknown vector covering every concrete word."""
        return TBitVec(width, 0, (1 << width) - 1)

    # -- inspection --------------------------------------------------

    def __str__(self):
        out = []
        for k in reversed(range(self.width)):
            if self.unknowns >> k & 1:
                out.append("X")
            else:
                out.append("1" if self.ones >> k & 1 else "0")
        return "".join(out)

    def __repr__(self):
        return f'TBitVec.from_string("{self}")'

    @property
    def mask(self) -> int:
        return (1 << self.width) - 1

    @property
    def zeros(self) -> int:
        return self.mask & ~self.ones & ~self.unknowns

    @property
    def is_concrete(self) -> bool:
        return self.unknowns == 0

    def to_int(self) -> int:
        if self.unknowns:
            raise ContractViolation(f"{self} has unknown bits")
        return self.ones

    def bit(self, k: int) -> TBit:
        if not 0 <= k < self.width:
            raise ContractViolation(f"bit {k} out of range for width {self.width}")
        if self.unknowns >> k & 1:
            return TBit.UNKNOWN
        return TBit.ONE if self.ones >> k & 1 else TBit.ZERO

    def count_unknown(self) -> int:
        return self.unknowns.bit_count()

    def concretization_size(self) -> int:
        return 1 << self.count_unknown()

    def contains(self, value: int) -> bool:
        """Is the concrete word ``value`` covered by this vector?"""
        if not 0 <= value < (1 << self.width):
            raise ContractViolation(f"{value} does not fit in {self.width} bits")
        return (value ^ self.ones) & ~self.unknowns == 0

    def covers(self, other: "TBitVec") -> bool:
        """True iff every word of ``other`` is also a word of ``self``."""
        _check_same_width(self, other)
        if other.unknowns & ~self.unknowns:
            return False
        return (self.ones ^ other.ones) & ~self.unknowns == 0

    def bounds(self) -> tuple[int, int]:
        """Smallest and largest covered word, read as unsigned."""
        return self.ones, self.ones | self.unknowns

    def with_bit(self, k: int, bit: TBit) -> "TBitVec":
        if not 0 <= k < self.width:
            raise ContractViolation(f"bit {k} out of range for width {self.width}")
        pos = 1 << k
        ones = self.ones & ~pos
        unknowns = self.unknowns & ~pos
        if bit is TBit.ONE:
            ones |= pos
        elif bit is TBit.UNKNOWN:
            unknowns |= pos
        return TBitVec(self.width, ones, unknowns)

    # -- bitwise transformers ----------------------------------------

    def invert(self) -> "TBitVec":
        return TBitVec(self.width, self.zeros, self.unknowns)

    def and_(self, other: "TBitVec") -> "TBitVec":
        _check_same_width(self, other)
        ones = self.ones & other.ones
        zeros = self.zeros | other.zeros
        return TBitVec(self.width, ones, self.mask & ~ones & ~zeros)

    def or_(self, other: "TBitVec") -> "TBitVec":
        _check_same_width(self, other)
        ones = self.ones | other.ones
        zeros = self.zeros & other.zeros
        return TBitVec(self.width, ones, self.mask & ~ones & ~zeros)

    def xor(self, other: "TBitVec") -> "TBitVec":
        _check_same_width(self, other)
        unknowns = self.unknowns | other.unknowns
        return TBitVec(self.width, (self.ones ^ other.ones) & ~unknowns, unknowns)

    # -- arithmetic transformers -------------------------------------

    def add(self, other: "TBitVec") -> "TBitVec":
        _check_same_width(self, other)
        low_sum = self.ones + other.ones
        high_sum = low_sum + self.unknowns + other.unknowns
        # carries that differ between the all-zeros and all-ones choice
        # of the unknown bits make the corresponding result bit unknown
        unknowns = (high_sum ^ low_sum) | self.unknowns | other.unknowns
        unknowns &= self.mask
        return TBitVec(self.width, low_sum & ~unknowns & self.mask, unknowns)

    def sub(self, other: "TBitVec") -> "TBitVec":
        # a - b == a + ~b + 1 in modular arithmetic; reusing the sound,
        # monotone, exact-on-concrete adder keeps those properties
        _check_same_width(self, other)
        one = TBitVec.from_int(1, self.width)
        return self.add(other.invert()).add(one)

    # -- comparison transformers -------------------------------------

    def cmp_eq(self, other: "TBitVec") -> TBit:
        _check_same_width(self, other)
        both_known = ~(self.unknowns | other.unknowns)
        if (self.ones ^ other.ones) & both_known:
            return TBit.ZERO
        if self.unknowns | other.unknowns:
            return TBit.UNKNOWN
        return TBit.ONE

    def cmp_ne(self, other: "TBitVec") -> TBit:
        return self.cmp_eq(other).negate()

    def cmp_ult(self, other: "TBitVec") -> TBit:
        _check_same_width(self, other)
        if self.bounds()[1] < other.bounds()[0]:
            return TBit.ONE
        if self.bounds()[0] >= other.bounds()[1]:
            return TBit.ZERO
        return TBit.UNKNOWN

    def cmp_ule(self, other: "TBitVec") -> TBit:
        _check_same_width(self, other)
        if self.bounds()[1] <= other.bounds()[0]:
            return TBit.ONE
        if self.bounds()[0] > other.bounds()[1]:
            return TBit.ZERO
        return TBit.UNKNOWN

    # -- structural transformers (bit-exact) -------------------------

    def shl(self, amount: int) -> "TBitVec":
        if not 0 <= amount < self.width:
            raise ContractViolation(f"shift by {amount} out of range for width {self.width}")
        return TBitVec(
            self.width, (self.ones << amount) & self.mask, (self.unknowns << amount) & self.mask
        )

    def lshr(self, amount: int) -> "TBitVec":
        if not 0 <= amount < self.width:
            raise ContractViolation(f"shift by {amount} out of range for width {self.width}")
        return TBitVec(self.width, self.ones >> amount, self.unknowns >> amount)

    def slice(self, lo: int, hi: int) -> "TBitVec":
        """Bits lo..hi inclusive, bit lo becoming bit 0 of the result."""
        if not 0 <= lo <= hi < self.width:
            raise ContractViolation(f"slice {lo}..{hi} out of range for width {self.width}")
        mask = (1 << (hi - lo + 1)) - 1
        return TBitVec(hi - lo + 1, (self.ones >> lo) & mask, (self.unknowns >> lo) & mask)

    def concat(self, low: "TBitVec") -> "TBitVec":
        """Self becomes the high bits, ``low`` the low bits."""
        return TBitVec(
            self.width + low.width,
            self.ones << low.width | low.ones,
            self.unknowns << low.width | low.unknowns,
        )

    def zext(self, width: int) -> "TBitVec":
        if width < self.width:
            raise ContractViolation(f"cannot zero-extend width {self.width} to {width}")
        return TBitVec(width, self.ones, self.unknowns)

    # -- lattice operations ------------------------------------------

    def join(self, other: "TBitVec") -> "TBitVec":
        """Least upper bound in the covering order: bits that agree and
        are known stay, everything else becomes unknown."""
        _check_same_width(self, other)
        ones = self.ones & other.ones
        zeros = self.zeros & other.zeros
        return TBitVec(self.width, ones, self.mask & ~ones & ~zeros)


def ite(cond: TBit, then: TBitVec, other: TBitVec) -> TBitVec:
    """Multiplexer: an unknown condition joins both branches."""
    _check_same_width(then, other)
    if cond is TBit.ONE:
        return then
    if cond is TBit.ZERO:
        return other
    return then.join(other)
