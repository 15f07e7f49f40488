"""Closed-form limit constants and the inverse parameter problem.

A realization with block length L and selection probability p has
normalized-partial-sum limsup constant

    L * sqrt(2 p (1 - p)) / sqrt(L + p)

and exactly half of that for the scaled star-discrepancy.  Solving for p at
a given target reduces to a quadratic; feasibility of a block length is a
discriminant sign, and the maximum over p is attained strictly below 1/2
because of the sqrt(L + p) in the denominator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import ParameterError

_GOLDEN_SECTION = (math.sqrt(5.0) - 1.0) / 2.0
_DISC_CLAMP = 1e-14  # quadratic discriminants this close to zero count as zero


def lil_constant(block_len: int, select_prob: float) -> float:
    """Limsup constant of the normalized partial sums."""
    if block_len < 1:
        raise ParameterError(f"block_len must be >= 1, got {block_len}")
    if not 0.0 <= select_prob <= 1.0:
        raise ParameterError(f"select_prob {select_prob!r} outside [0, 1]")
    p = select_prob
    return block_len * math.sqrt(2.0 * p * (1.0 - p)) / math.sqrt(block_len + p)


def disc_constant(block_len: int, select_prob: float) -> float:
    """Limsup constant of the scaled star-discrepancy; lil_constant / 2."""
    if block_len < 1:
        raise ParameterError(f"block_len must be >= 1, got {block_len}")
    if not 0.0 <= select_prob <= 1.0:
        raise ParameterError(f"select_prob {select_prob!r} outside [0, 1]")
    p = select_prob
    return block_len * math.sqrt(p * (1.0 - p)) / (math.sqrt(2.0) * math.sqrt(block_len + p))


class MaxConstant(NamedTuple):
    select_prob: float
    value: float


def max_constant(block_len: int, tol: float = 1e-12) -> MaxConstant:
    """Argmax and maximum of p -> lil_constant(block_len, p) on (0, 1).

    Golden-section search; the objective is unimodal (its square is a
    ratio of a concave quadratic to a linear term).
    """
    if block_len < 1:
        raise ParameterError(f"block_len must be >= 1, got {block_len}")
    lo, hi = 0.0, 1.0
    c = hi - _GOLDEN_SECTION * (hi - lo)
    d = lo + _GOLDEN_SECTION * (hi - lo)
    fc = lil_constant(block_len, c)
    fd = lil_constant(block_len, d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN_SECTION * (hi - lo)
            fc = lil_constant(block_len, c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN_SECTION * (hi - lo)
            fd = lil_constant(block_len, d)
    p_star = 0.5 * (lo + hi)
    return MaxConstant(p_star, lil_constant(block_len, p_star))


@dataclass(frozen=True)
class ConstantsReport:
    """Resolved parameters with their limit constants and density."""

    block_len: int
    select_prob: float
    lil_constant: float
    disc_constant: float
    density: float
    feasible_max: float  # max over p of the lil constant at this block length

    def as_dict(self) -> dict:
        return {
            "block_len": self.block_len,
            "select_prob": self.select_prob,
            "lil_constant": self.lil_constant,
            "disc_constant": self.disc_constant,
            "density": self.density,
            "feasible_max": self.feasible_max,
        }


def _report(block_len: int, p: float) -> ConstantsReport:
    return ConstantsReport(
        block_len=block_len,
        select_prob=p,
        lil_constant=lil_constant(block_len, p),
        disc_constant=disc_constant(block_len, p),
        density=(block_len + p) / (2.0 * block_len),
        feasible_max=max_constant(block_len).value,
    )


def solve_params(target: float, mode: str = "lil") -> ConstantsReport:
    """Smallest feasible block length and the smaller probability root for a
    target limit constant.

    In "discrepancy" mode the target is doubled first (the discrepancy
    constant is exactly half the sums constant).  With t the working
    target and L the block length, p solves

        2 L^2 p^2 - (2 L^2 - t^2) p + t^2 L = 0,

    whose roots lie in (0, 1) exactly when the discriminant is nonneg and
    t^2 < 2 L^2; the smaller root is returned (both reproduce the target).
    Near-zero discriminants are clamped so boundary targets resolve.
    """
    if mode not in ("lil", "discrepancy", "disc"):
        raise ParameterError(f"mode must be 'lil' or 'discrepancy', got {mode!r}")
    if not math.isfinite(target) or target <= 0.0:
        raise ParameterError(
            f"target must be a finite positive real, got {target!r}; a zero target "
            "needs no randomness: take every positive integer (all gaps 1)"
        )
    t = target if mode == "lil" else 2.0 * target
    t2 = t * t
    block_len = 1
    while True:
        b = 2.0 * block_len * block_len - t2
        disc = b * b - 8.0 * block_len**3 * t2
        if abs(disc) < _DISC_CLAMP:
            disc = 0.0
        if b > 0.0 and disc >= 0.0:
            break
        block_len += 1
        if block_len > 10**7:
            raise ParameterError(f"no feasible block length below 1e7 for target {target!r}")
    # smaller root in the cancellation-free form 2c / (-b + sqrt(disc))
    p = 2.0 * t2 * block_len / (b + math.sqrt(disc))
    return _report(block_len, p)
