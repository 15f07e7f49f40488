"""Streaming partial sums and exact discrepancy statistics.

Partial sums S_N = sum f(v x) over the first N sequence values are
accumulated in one pass with compensated summation and reported at
checkpoints together with the normalized ratio |S_N| / sqrt(N ln ln N)
(defined from N = 16 on, since ln ln N must be positive).

The star-discrepancy of a finite point set is computed exactly from order
statistics in O(N log N); the extremal discrepancy is the sum of the
one-sided parts.  The dyadic pair splits the same supremum into a coarse
statistic over anchored dyadic endpoints and a fine statistic over short
intervals inside the dyadic cells; coarse <= N D* <= coarse + fine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .construction import LevelTable, SeqParams, sequence_chunks
from .errors import ParameterError, RangeError
from .fixedpoint import UnitPoint, frac_mul_array
from .kernels import PeriodicFunction, eval_periodic_array, f_norm, variation_bound

MIN_RATIO_COUNT = 16  # ln ln N > 0 needs N > e^e ~ 15.15
_U64 = np.uint64


def lil_normalizer(count: int) -> float:
    """sqrt(N ln ln N), natural logs; defined for N >= 16."""
    if count < MIN_RATIO_COUNT:
        raise ParameterError(f"normalizer needs N >= {MIN_RATIO_COUNT}, got {count}")
    return math.sqrt(count * math.log(math.log(count)))


def geometric_checkpoints(max_count: int, growth: float = 1.25, first: int = 16) -> list[int]:
    """ceil(first * growth^i), deduplicated, capped and closed at max_count."""
    if max_count < first:
        raise ParameterError(f"max_count must be >= {first}, got {max_count}")
    if growth <= 1.0:
        raise ParameterError(f"growth must exceed 1, got {growth}")
    cps: list[int] = []
    i = 0
    while True:
        n = math.ceil(first * growth**i)
        if n > max_count:
            break
        if not cps or n > cps[-1]:
            cps.append(n)
        i += 1
    if cps[-1] != max_count:
        cps.append(max_count)
    return cps


class TraceEntry(NamedTuple):
    count: int
    partial_sum: float
    ratio: float


@dataclass
class LilTrace:
    """Checkpointed partial sums of one test function along one stream."""

    checkpoints: list[TraceEntry]
    running_sup: float
    f_norm: float
    truncated: bool = False
    last_values: list[int] = field(default_factory=list)  # stream value at each checkpoint

    def running_sups(self) -> list[float]:
        """Prefix maxima of the checkpoint ratios."""
        out, best = [], 0.0
        for e in self.checkpoints:
            if not math.isnan(e.ratio):
                best = max(best, e.ratio)
            out.append(best)
        return out


def _kahan_add(total: float, comp: float, value: float) -> tuple[float, float]:
    y = value - comp
    t = total + y
    return t, (t - total) - y


@dataclass
class TraceState:
    """Exportable accumulator state; resuming replays bit-identically as
    long as the same chunk boundaries are fed afterwards."""

    position: int
    cp_index: int
    sums: list[float]
    comps: list[float]
    segments: list[float]
    sups: list[float]
    entries: list[list[TraceEntry]]
    last_values: list[int]
    last_element: int


class TraceAccumulator:
    """One-pass checkpointed summation of several test functions over a
    shared stream of uint64 chunks.

    The summation order is pinned down: each chunk's overlap with the
    current inter-checkpoint segment is reduced by ``np.sum``, the pieces
    add left to right into the segment, and one Kahan update folds each
    completed segment into the running compensated total.
    """

    def __init__(
        self,
        functions: Sequence[PeriodicFunction],
        x: UnitPoint | float,
        checkpoints: Sequence[int],
    ):
        if not functions:
            raise ParameterError("need at least one test function")
        cps = list(checkpoints)
        if not cps or any(b <= a for a, b in zip(cps, cps[1:])) or cps[0] < 1:
            raise ParameterError("checkpoints must be strictly increasing positive integers")
        self.functions = list(functions)
        self.x = x if isinstance(x, UnitPoint) else UnitPoint.from_float(float(x))
        self.checkpoints = cps
        k = len(self.functions)
        self._state = TraceState(
            position=0,
            cp_index=0,
            sums=[0.0] * k,
            comps=[0.0] * k,
            segments=[0.0] * k,
            sups=[0.0] * k,
            entries=[[] for _ in range(k)],
            last_values=[],
            last_element=0,
        )

    @classmethod
    def resume(
        cls,
        functions: Sequence[PeriodicFunction],
        x: UnitPoint | float,
        checkpoints: Sequence[int],
        state: TraceState,
    ) -> "TraceAccumulator":
        acc = cls(functions, x, checkpoints)
        acc._state = replace(
            state,
            sums=list(state.sums),
            comps=list(state.comps),
            segments=list(state.segments),
            sups=list(state.sups),
            entries=[list(e) for e in state.entries],
            last_values=list(state.last_values),
        )
        return acc

    def export_state(self) -> TraceState:
        s = self._state
        return replace(
            s,
            sums=list(s.sums),
            comps=list(s.comps),
            segments=list(s.segments),
            sups=list(s.sups),
            entries=[list(e) for e in s.entries],
            last_values=list(s.last_values),
        )

    @property
    def done(self) -> bool:
        return self._state.cp_index >= len(self.checkpoints)

    def feed(self, chunk: np.ndarray) -> bool:
        """Consume one chunk; returns False once every checkpoint is recorded."""
        st = self._state
        if self.done:
            return False
        chunk = np.asarray(chunk, dtype=np.uint64)
        fr = frac_mul_array(self.x.frac, chunk)
        values = [eval_periodic_array(f, fr) for f in self.functions]
        size = chunk.size
        start = 0
        while st.cp_index < len(self.checkpoints):
            cp = self.checkpoints[st.cp_index]
            if cp > st.position + size:
                break
            end = cp - st.position
            self._record(values, chunk, start, end, cp)
            start = end
            st.cp_index += 1
        if start < size and st.cp_index < len(self.checkpoints):
            for i in range(len(self.functions)):
                st.segments[i] += float(np.sum(values[i][start:size]))
        if size:
            st.last_element = int(chunk[-1])
        st.position += size
        return not self.done

    def _record(self, values, chunk, start, end, cp):
        st = self._state
        for i in range(len(self.functions)):
            st.segments[i] += float(np.sum(values[i][start:end]))
            st.sums[i], st.comps[i] = _kahan_add(st.sums[i], st.comps[i], st.segments[i])
            st.segments[i] = 0.0
            if cp >= MIN_RATIO_COUNT:
                ratio = abs(st.sums[i]) / lil_normalizer(cp)
                st.sups[i] = max(st.sups[i], ratio)
            else:
                ratio = math.nan
            st.entries[i].append(TraceEntry(cp, st.sums[i], ratio))
        st.last_values.append(int(chunk[end - 1]) if end > 0 else st.last_element)

    def finish(self) -> list[LilTrace]:
        st = self._state
        truncated = not self.done
        return [
            LilTrace(
                checkpoints=list(st.entries[i]),
                running_sup=st.sups[i],
                f_norm=f_norm(f),
                truncated=truncated,
                last_values=list(st.last_values),
            )
            for i, f in enumerate(self.functions)
        ]


def trace_many(
    functions: Sequence[PeriodicFunction],
    chunks: Iterable[np.ndarray],
    x: UnitPoint | float,
    checkpoints: Sequence[int],
) -> list[LilTrace]:
    """Trace several functions over one pass of a shared chunk stream."""
    acc = TraceAccumulator(functions, x, checkpoints)
    for chunk in chunks:
        if not acc.feed(chunk):
            break
    return acc.finish()


def trace_partial_sums(
    f: PeriodicFunction,
    chunks: Iterable[np.ndarray],
    x: UnitPoint | float,
    checkpoints: Sequence[int],
) -> LilTrace:
    """Single-function convenience wrapper around :func:`trace_many`."""
    return trace_many([f], chunks, x, checkpoints)[0]


def integer_chunks(limit: int, chunk: int = 1 << 20) -> Iterable[np.ndarray]:
    """The stream 1, 2, ..., limit in uint64 chunks (the trivial sequence)."""
    if limit < 0:
        raise ParameterError(f"limit must be >= 0, got {limit}")
    for lo in range(1, limit + 1, chunk):
        yield np.arange(lo, min(lo + chunk, limit + 1), dtype=np.uint64)


def _checked_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 1 or pts.size == 0:
        raise ParameterError("need a nonempty one-dimensional point set")
    if np.any(pts < 0.0) or np.any(pts > 1.0) or not np.all(np.isfinite(pts)):
        raise ParameterError("points must lie in the unit interval")
    return np.sort(pts, kind="stable")


def star_discrepancy(points) -> float:
    """Exact sup over anchored intervals [0, a] of |empirical - a|.

    With sorted points the supremum is max_i of
    (i/N - y_(i)) and (y_(i) - (i-1)/N); always in [1/(2N), 1], the lower
    bound attained only by the centered grid.
    """
    ys = _checked_points(points)
    n = ys.size
    up = np.arange(1, n + 1, dtype=np.float64) / n
    down = np.arange(0, n, dtype=np.float64) / n
    return float(max((up - ys).max(), (ys - down).max()))


def extremal_discrepancy(points) -> float:
    """Exact sup over all subintervals [a, b]: the sum of the one-sided
    star parts (surplus and deficit optimize independently)."""
    ys = _checked_points(points)
    n = ys.size
    up = np.arange(1, n + 1, dtype=np.float64) / n
    down = np.arange(0, n, dtype=np.float64) / n
    return float((up - ys).max() + (ys - down).max())


class DyadicDiscrepancies(NamedTuple):
    coarse: float  # anchored dyadic endpoints [0, s 2^-L], count scale
    fine: float  # short intervals inside dyadic cells, count scale


def dyadic_discrepancies(points, level: int) -> DyadicDiscrepancies:
    """Count-scale discrepancy pair at dyadic resolution 2^-level.

    coarse = max over 0 < s < 2^level of |#{y <= s 2^-level} - N s 2^-level|;
    fine = max over cells of the sup over subintervals [s 2^-level,
    s 2^-level + a], a <= 2^-level, of the centered counting function.
    Splitting an anchored interval at the dyadic point below its endpoint
    gives coarse <= N D* <= coarse + fine (up to points exactly on the
    grid, which random inputs avoid).
    """
    if not 1 <= level <= 20:
        raise ParameterError(f"level must be in [1, 20], got {level}")
    ys = _checked_points(points)
    n = ys.size
    cells = 1 << level
    width = 2.0**-level

    bounds = np.arange(1, cells, dtype=np.float64) * width
    counts_le = np.searchsorted(ys, bounds, side="right")
    coarse = float(np.abs(counts_le - n * bounds).max()) if bounds.size else 0.0

    cell_id = np.minimum((ys * cells).astype(np.int64), cells - 1)
    per_cell = np.bincount(cell_id, minlength=cells)
    before = np.concatenate(([0], np.cumsum(per_cell)))[cell_id]
    rank = np.arange(1, n + 1, dtype=np.float64) - before
    rel = ys - cell_id * width
    at_point = np.abs(rank - n * rel)
    below_point = np.abs(rank - 1.0 - n * rel)
    cell_end = np.abs(per_cell - n * width)
    fine = float(max(at_point.max(), below_point.max(), cell_end.max()))
    return DyadicDiscrepancies(coarse, fine)


class KoksmaCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def koksma_check(f: PeriodicFunction, points) -> KoksmaCheck:
    """|mean of f over the points| against variation(f) * D*.

    The test functions are mean zero, so the left side is already the
    deviation of the empirical mean from the integral.
    """
    pts = np.asarray(points, dtype=np.float64)
    lhs = abs(float(np.mean(eval_periodic_array(f, pts))))
    rhs = variation_bound(f) * star_discrepancy(pts)
    return KoksmaCheck(lhs, rhs, lhs <= rhs + 1e-12)


def littlewood_signs(
    params: SeqParams, table: LevelTable | None, limit: int
) -> np.ndarray:
    """Signs +1 on the values of the bounded-gap sequence, -1 elsewhere.

    Satisfies the exact identity
    sum_{k<=N} a_k cos(2 pi k x)
        = 2 sum_{v<=N} cos(2 pi v x) - sum_{k<=N} cos(2 pi k x),
    the first sum on the right running over the sequence values v.
    """
    if limit < 1:
        raise ParameterError(f"limit must be >= 1, got {limit}")
    if params.limit and limit > params.limit:
        raise RangeError(f"limit {limit} exceeds params.limit {params.limit}")
    signs = np.full(limit, -1, dtype=np.int8)
    for chunk in sequence_chunks(params, limit, table):
        signs[chunk.astype(np.int64) - 1] = 1
    return signs
