"""Exact fixed-point arithmetic on the unit interval.

A point is an unsigned 128-bit integer ``frac`` read as ``frac / 2^128`` in
[0, 1).  Multiplying by an integer and reducing mod 1 is then an exact
modular product, so fractional parts <n*x> carry no accumulated
argument-reduction error even for n around 10^9; rounding enters only in
the final conversion to double.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

FRACTION_BITS = 128
MODULUS = 1 << FRACTION_BITS

_INV_2_64 = 2.0**-64
_INV_2_128 = 2.0**-128
_LOW32 = np.uint64(0xFFFFFFFF)


@dataclass(frozen=True)
class UnitPoint:
    """A number in [0, 1) at fixed 128-bit resolution."""

    frac: int

    def __post_init__(self):
        if not 0 <= self.frac < MODULUS:
            raise ParameterError(f"frac {self.frac!r} outside [0, 2^128)")

    @classmethod
    def from_float(cls, x: float) -> "UnitPoint":
        """Round the fractional part of a double onto the 128-bit grid.

        Doubles are dyadic, so the embedding is exact apart from the single
        rounding already present in ``x`` itself.
        """
        frac = x - math.floor(x)
        return cls(int(frac * 2.0**FRACTION_BITS) % MODULUS)

    @classmethod
    def from_fraction(cls, num: int, den: int) -> "UnitPoint":
        """Nearest grid point to the rational num/den (exact integer rounding)."""
        if den <= 0:
            raise ParameterError("denominator must be positive")
        num %= den
        return cls(((num << (FRACTION_BITS + 1)) + den) // (2 * den) % MODULUS)

    @classmethod
    def from_stream(cls, stream) -> "UnitPoint":
        return cls(stream.next_unit_frac())

    def to_float(self) -> float:
        return self.frac * _INV_2_128

    def mul(self, n: int) -> "UnitPoint":
        """Exact <n * x> on the 128-bit grid."""
        return UnitPoint((n * self.frac) % MODULUS)

    def times_mod2(self, n: int) -> float:
        """n * x reduced mod 2, as a double in [0, 2).

        sin(pi t) and cos(pi t) have period 2 in t, so this is the exact
        argument reduction for trigonometric evaluation.
        """
        return ((n * self.frac) % (MODULUS * 2)) * _INV_2_128


def frac_mul(x: UnitPoint, n: int) -> UnitPoint:
    """Exact fractional part of ``n * x`` at 128-bit resolution."""
    return x.mul(n)


def _mul_64_128(a: np.ndarray, b: int) -> tuple[np.ndarray, np.ndarray]:
    """(hi, lo) 64-bit words of a * b for a uint64 array and scalar b < 2^64."""
    b0 = np.uint64(b & 0xFFFFFFFF)
    b1 = np.uint64(b >> 32)
    a0 = a & _LOW32
    a1 = a >> np.uint64(32)
    p00 = a0 * b0
    p01 = a0 * b1
    p10 = a1 * b0
    p11 = a1 * b1
    mid = p01 + (p00 >> np.uint64(32))
    mid2 = p10 + (mid & _LOW32)
    hi = p11 + (mid >> np.uint64(32)) + (mid2 >> np.uint64(32))
    lo = (p00 & _LOW32) | (mid2 << np.uint64(32))
    return hi, lo


def frac_mul_array(frac: int, n: np.ndarray) -> np.ndarray:
    """<n * x> for one 128-bit point and a uint64 array of multipliers.

    The 128-bit modular products are carried exactly in 64-bit limbs; each
    result is rounded to double only at the end (error below 2^-64).
    """
    n = np.asarray(n, dtype=np.uint64)
    f_hi = (frac >> 64) & ((1 << 64) - 1)
    f_lo = frac & ((1 << 64) - 1)
    hi, lo = _mul_64_128(n, f_lo)
    top = hi + n * np.uint64(f_hi)  # wraps mod 2^64, i.e. the product mod 2^128
    return top.astype(np.float64) * _INV_2_64 + lo.astype(np.float64) * _INV_2_128
