"""Periodic test functions and closed-form trigonometric block sums.

The test functions are mean-zero and 1-periodic: trigonometric polynomials
without constant term, and interval indicators centered by subtracting the
interval length.  For a cosine polynomial, the sum of its dilates over one
block (an arithmetic progression of ``block_len`` frequencies with step
``level``) collapses to a Dirichlet-kernel ratio times a single cosine; the
square of that block sum splits into a ratio-squared part plus an
oscillating cross term.  Both closed forms are checked against direct
summation in the tests and are guarded near the sine-denominator zeros,
where callers fall back to direct summation.

Arguments reach the trig functions through exact mod-2 reduction of
:class:`~gaplab.fixedpoint.UnitPoint` values whenever the caller supplies
one, so no precision is lost to argument reduction at large frequencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .construction import LevelTable, block_coords, block_values
from .errors import ParameterError, SingularDenominator
from .fixedpoint import UnitPoint, frac_mul

TWO_PI = 2.0 * math.pi
SIN_GUARD = 1e-12  # below this, a sine denominator counts as singular


@dataclass(frozen=True)
class TrigPoly:
    """Trigonometric polynomial without constant term.

    ``cos_coeffs[j-1]`` and ``sin_coeffs[j-1]`` multiply cos(2 pi j x) and
    sin(2 pi j x); a missing sine tuple means an even (cosine-only)
    polynomial.
    """

    cos_coeffs: tuple[float, ...]
    sin_coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "cos_coeffs", tuple(float(a) for a in self.cos_coeffs))
        object.__setattr__(self, "sin_coeffs", tuple(float(b) for b in self.sin_coeffs))
        if not self.cos_coeffs and not self.sin_coeffs:
            raise ParameterError("empty trigonometric polynomial")
        for c in (*self.cos_coeffs, *self.sin_coeffs):
            if not math.isfinite(c):
                raise ParameterError("coefficients must be finite")

    @property
    def degree(self) -> int:
        return max(len(self.cos_coeffs), len(self.sin_coeffs))

    @property
    def is_even(self) -> bool:
        return not any(self.sin_coeffs)

    @property
    def l2_norm(self) -> float:
        """sqrt(sum (a_j^2 + b_j^2) / 2); exact by orthogonality."""
        s = sum(a * a for a in self.cos_coeffs) + sum(b * b for b in self.sin_coeffs)
        return math.sqrt(s / 2.0)

    @property
    def variation_bound(self) -> float:
        """Total variation on [0, 1] is at most 2 pi sum j (|a_j| + |b_j|)."""
        total = 0.0
        for j, a in enumerate(self.cos_coeffs, start=1):
            total += j * abs(a)
        for j, b in enumerate(self.sin_coeffs, start=1):
            total += j * abs(b)
        return TWO_PI * total


@dataclass(frozen=True)
class CenteredIndicator:
    """Indicator of [left, right] composed with the fractional part, minus
    the interval length; mean zero by construction."""

    left: float
    right: float

    def __post_init__(self):
        if not (0.0 <= self.left < self.right <= 1.0):
            raise ParameterError(
                f"need 0 <= left < right <= 1, got [{self.left!r}, {self.right!r}]"
            )

    @property
    def measure(self) -> float:
        return self.right - self.left

    @property
    def l2_norm(self) -> float:
        mu = self.measure
        return math.sqrt(mu * (1.0 - mu))

    @property
    def variation_bound(self) -> float:
        return 2.0


PeriodicFunction = Union[TrigPoly, CenteredIndicator]

COS_ONE = TrigPoly((1.0,))  # cos(2 pi x), the workhorse test function


def dyadic_indicator(cell: int, level: int, length: float) -> CenteredIndicator:
    """Centered indicator of [cell * 2^-level, cell * 2^-level + length]."""
    if level < 1 or not 0 <= cell < 2**level:
        raise ParameterError(f"need 0 <= cell < 2^level, got cell={cell}, level={level}")
    width = 2.0**-level
    if not 0.0 < length <= width:
        raise ParameterError(f"length must be in (0, 2^-level], got {length!r}")
    return CenteredIndicator(cell * width, cell * width + length)


def f_norm(f: PeriodicFunction) -> float:
    return f.l2_norm


def variation_bound(f: PeriodicFunction) -> float:
    return f.variation_bound


def _as_unit(x: Union[UnitPoint, float]) -> UnitPoint:
    return x if isinstance(x, UnitPoint) else UnitPoint.from_float(float(x))


def _mod2(x: Union[UnitPoint, float], n: int) -> float:
    """n * x mod 2, exactly for UnitPoint inputs, via fmod for doubles."""
    if isinstance(x, UnitPoint):
        return x.times_mod2(n)
    return math.fmod(n * x, 2.0)


def eval_periodic(f: PeriodicFunction, y: Union[UnitPoint, float]) -> float:
    """f evaluated at the fractional part of y."""
    if isinstance(f, TrigPoly):
        total = 0.0
        for j, a in enumerate(f.cos_coeffs, start=1):
            if a:
                total += a * math.cos(math.pi * _mod2(y, 2 * j))
        for j, b in enumerate(f.sin_coeffs, start=1):
            if b:
                total += b * math.sin(math.pi * _mod2(y, 2 * j))
        return total
    fr = y.to_float() if isinstance(y, UnitPoint) else y - math.floor(y)
    inside = f.left <= fr <= f.right
    return (1.0 if inside else 0.0) - f.measure


def eval_periodic_array(f: PeriodicFunction, fr: np.ndarray) -> np.ndarray:
    """f over an array of fractional parts already reduced to [0, 1)."""
    fr = np.asarray(fr, dtype=np.float64)
    if isinstance(f, TrigPoly):
        total = np.zeros_like(fr)
        for j, a in enumerate(f.cos_coeffs, start=1):
            if a:
                total += a * np.cos((TWO_PI * j) * fr)
        for j, b in enumerate(f.sin_coeffs, start=1):
            if b:
                total += b * np.sin((TWO_PI * j) * fr)
        return total
    return ((fr >= f.left) & (fr <= f.right)).astype(np.float64) - f.measure


def block_sum_direct(
    poly: TrigPoly,
    index: int,
    block_len: int,
    table: LevelTable,
    x: Union[UnitPoint, float],
) -> float:
    """Sum of poly(v * x) over the members v of one block, term by term."""
    u = _as_unit(x)
    return math.fsum(
        eval_periodic(poly, frac_mul(u, v)) for v in block_values(index, block_len, table)
    )


def _phase_integer(index: int, block_len: int, table: LevelTable) -> tuple[int, int]:
    """(level, A) where A j pi x is the center phase of the collapsed block sum."""
    c = block_coords(index, table)
    a = (
        2 * block_len * table.cum_blocks[c.level - 1]
        + 2 * block_len * c.row * c.level
        + 2 * c.offset
        + (block_len - 1) * c.level
    )
    return c.level, a


def _sin_ratio(level: int, j: int, block_len: int, x: Union[UnitPoint, float]) -> float:
    denom = math.sin(math.pi * _mod2(x, level * j))
    if abs(denom) < SIN_GUARD:
        raise SingularDenominator(
            f"sin(pi * {level * j} * x) = {denom:.3e} under the {SIN_GUARD} guard"
        )
    return math.sin(math.pi * _mod2(x, block_len * level * j)) / denom


def block_sum_closed(
    poly: TrigPoly,
    index: int,
    block_len: int,
    table: LevelTable,
    x: Union[UnitPoint, float],
) -> float:
    """Collapsed form of the block sum for a cosine polynomial.

    Each frequency contributes its Dirichlet-kernel ratio
    sin(block_len pi level j x) / sin(pi level j x) times the cosine at the
    progression's center phase.  Raises :class:`SingularDenominator` inside
    the guard band; with block_len = 1 every ratio is identically 1 and the
    expression reduces to the single member's value.
    """
    if not poly.is_even:
        raise ParameterError("closed form covers cosine-only polynomials")
    level, a = _phase_integer(index, block_len, table)
    total = 0.0
    for j, coeff in enumerate(poly.cos_coeffs, start=1):
        if not coeff:
            continue
        ratio = _sin_ratio(level, j, block_len, x)
        total += coeff * ratio * math.cos(math.pi * _mod2(x, a * j))
    return total


def cross_term(
    poly: TrigPoly,
    index: int,
    block_len: int,
    table: LevelTable,
    x: Union[UnitPoint, float],
) -> float:
    """Oscillating part of the squared block sum.

    The square of the collapsed block sum equals
    sum_j (a_j^2 / 2) ratio_j^2 plus this term, which collects the
    difference-frequency products (j1 != j2) and all sum-frequency
    products, each weighted by both Dirichlet ratios.  The identity is
    algebraically exact; tests verify it to 1e-9.
    """
    if not poly.is_even:
        raise ParameterError("cross term covers cosine-only polynomials")
    level, a = _phase_integer(index, block_len, table)
    coeffs = poly.cos_coeffs
    d = len(coeffs)
    ratios = [
        _sin_ratio(level, j, block_len, x) if coeffs[j - 1] else 0.0 for j in range(1, d + 1)
    ]
    phases = [math.cos(math.pi * _mod2(x, a * m)) for m in range(2 * d + 1)]
    total = 0.0
    for j1 in range(1, d + 1):
        for j2 in range(1, d + 1):
            w = coeffs[j1 - 1] * coeffs[j2 - 1] * 0.5 * ratios[j1 - 1] * ratios[j2 - 1]
            if not w:
                continue
            if j1 != j2:
                total += w * phases[abs(j1 - j2)]
            total += w * phases[j1 + j2]
    return total


def block_sum(
    poly: TrigPoly,
    index: int,
    block_len: int,
    table: LevelTable,
    x: Union[UnitPoint, float],
) -> float:
    """Closed form when it applies, direct summation otherwise."""
    if poly.is_even:
        try:
            return block_sum_closed(poly, index, block_len, table, x)
        except SingularDenominator:
            pass
    return block_sum_direct(poly, index, block_len, table, x)


class CosineSum(NamedTuple):
    value: float
    degenerate: bool  # x was an integer, so the sum is just n_terms


def cosine_sum_closed(n_terms: int, x: Union[UnitPoint, float]) -> CosineSum:
    """sum_{k=1}^{N} cos(2 pi k x) in closed form.

    Equals sin(N pi x) cos((N+1) pi x) / sin(pi x), bounded by
    1/|sin(pi x)| uniformly in N.  An integer x degenerates the formula;
    the exact value N is returned with a flag.
    """
    if n_terms < 0:
        raise ParameterError(f"n_terms must be >= 0, got {n_terms}")
    if isinstance(x, UnitPoint):
        degenerate = x.frac == 0
    else:
        degenerate = float(x) == math.floor(x)
    if degenerate:
        return CosineSum(float(n_terms), True)
    s = math.sin(math.pi * _mod2(x, 1))
    value = math.sin(math.pi * _mod2(x, n_terms)) * math.cos(math.pi * _mod2(x, n_terms + 1)) / s
    return CosineSum(value, False)
