"""Blocked random construction of bounded-gap integer sequences.

The positive integers are tiled by levels.  Level ``r`` assigns to each of
its block indices an arithmetic progression of ``block_len`` terms with
step ``r``; the ``r`` blocks of one row interlace so that every row tiles a
run of ``block_len * r`` consecutive integers, and completed levels tile an
initial segment exactly.  The number of rows per level is fixed by a
two-sided recursion against ``r^r``, which makes the cumulative block count
of level ``r`` the integer just at or above ``r^r``.

A Bernoulli(``select_prob``) draw per block index decides whether the
block's members join the *selected* stream.  Doubling the selected values
and merging them with all odd numbers yields a strictly increasing sequence
whose consecutive gaps are always 1 or 2, whatever the draws do.  Because
the blocks tile the integers, a p-fraction of all integers is selected in
the limit, so the merged sequence has limiting counting density
(1 + p) / 2 regardless of the block length.

All tables use exact Python integers (entries stay below 2^128 for levels
up to 22); the streaming generators work in unsigned 64-bit numpy chunks
and are pure functions of their parameters, so identical seeds reproduce
identical streams on any chunking or thread layout.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ParameterError, RangeError
from .rng import MASK64, bernoulli_draws, bernoulli_threshold, raw_draw

MAX_LEVEL = 22  # 22^22 < 2^98, so every table entry fits comfortably in 128 bits
VALUE_LIMIT = 1 << 63  # streams stay inside cheap unsigned 64-bit arithmetic
_CHUNK_DRAWS = 1 << 19  # block draws per batch; bounds chunk memory, not results

_U64 = np.uint64


@dataclass(frozen=True)
class LevelTable:
    """Rows per level and cumulative block counts.

    ``rows[r]`` is the number of rows of level ``r`` (index 0 is a
    sentinel); ``cum_blocks[r]`` is the total number of blocks up to and
    including level ``r``, with ``cum_blocks[0] = 0`` by convention.
    """

    rows: tuple[int, ...]
    cum_blocks: tuple[int, ...]

    @property
    def max_level(self) -> int:
        return len(self.rows) - 1

    @property
    def max_index(self) -> int:
        """Largest block index the table can decompose."""
        return self.cum_blocks[-1]

    def level_of(self, index: int) -> int:
        if not 1 <= index <= self.max_index:
            raise RangeError(f"block index {index} outside [1, {self.max_index}]")
        return bisect_left(self.cum_blocks, index)


def build_level_table(max_level: int = MAX_LEVEL) -> LevelTable:
    """Build the level table by the defining two-sided recursion.

    ``rows[r]`` is the unique integer with
    ``cum_blocks[r] - r < r^r <= cum_blocks[r]``, i.e. the ceiling of
    ``(r^r - cum_blocks[r-1]) / r``.  Exact integer arithmetic throughout.
    """
    if not 1 <= max_level <= MAX_LEVEL:
        raise ParameterError(f"max_level must be in [1, {MAX_LEVEL}], got {max_level}")
    rows = [0]
    cum = [0]
    for r in range(1, max_level + 1):
        power = r**r
        count = -(-(power - cum[r - 1]) // r)
        rows.append(count)
        cum.append(cum[r - 1] + r * count)
        assert cum[r] - r < power <= cum[r]
    return LevelTable(tuple(rows), tuple(cum))


_DEFAULT_TABLE: LevelTable | None = None


def default_table() -> LevelTable:
    """The full 22-level table, built once per process."""
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = build_level_table(MAX_LEVEL)
    return _DEFAULT_TABLE


@dataclass(frozen=True)
class BlockCoords:
    """Position of a block index: level, row within level, offset in 1..level."""

    level: int
    row: int
    offset: int

    def to_index(self, table: LevelTable) -> int:
        return table.cum_blocks[self.level - 1] + self.row * self.level + self.offset


def block_coords(index: int, table: LevelTable) -> BlockCoords:
    """Decompose a block index; the level is found by binary search."""
    level = table.level_of(index)
    within = index - table.cum_blocks[level - 1] - 1
    return BlockCoords(level, within // level, within % level + 1)


def block_values(index: int, block_len: int, table: LevelTable) -> list[int]:
    """The members of one block: an arithmetic progression of step ``level``."""
    if block_len < 1:
        raise ParameterError(f"block_len must be >= 1, got {block_len}")
    c = block_coords(index, table)
    first = block_len * table.cum_blocks[c.level - 1] + block_len * c.row * c.level + c.offset
    return [first + j * c.level for j in range(block_len)]


def partition_defect(num_blocks: int, block_len: int, table: LevelTable) -> int:
    """Size of the symmetric difference between the union of the first
    ``num_blocks`` blocks and ``{1, ..., block_len * num_blocks}``.

    Completed rows tile exactly, so only the partial row at the boundary
    contributes; the count comes out of the row geometry without
    materializing any set.  It is zero exactly at row boundaries and is
    bounded by ``block_len * level``.
    """
    c = block_coords(num_blocks, table)
    lam, r, rho = block_len, c.level, c.offset
    if lam < 1:
        raise ParameterError(f"block_len must be >= 1, got {lam}")
    overshoot = sum(min(rho, max(0, j * r - (lam - 1) * rho)) for j in range(lam))
    return 2 * overshoot


@dataclass(frozen=True)
class SeqParams:
    """Everything defining one realization: block length, selection
    probability, seed, and the largest value to emit."""

    block_len: int
    select_prob: float
    seed: int = 0
    limit: int = 0

    def __post_init__(self):
        if self.block_len < 1:
            raise ParameterError(f"block_len must be >= 1, got {self.block_len}")
        if not 0.0 <= self.select_prob <= 1.0:
            raise ParameterError(f"select_prob {self.select_prob!r} outside [0, 1]")
        if not 0 <= self.limit < VALUE_LIMIT:
            raise ParameterError(f"limit must be in [0, 2^63), got {self.limit}")
        object.__setattr__(self, "seed", self.seed & MASK64)


class SelectionStream:
    """Bernoulli selection draws, one per block index.

    Draw ``k`` is a pure function of (seed, k); an instance only adds a
    cursor for sequential use.  Single consumer per instance; independent
    instances (distinct seeds) may run concurrently.
    """

    def __init__(self, params: SeqParams):
        self.params = params
        self.threshold = bernoulli_threshold(params.select_prob)
        self._cursor = 0

    def draw(self, index: int) -> bool:
        if index < 1:
            raise ParameterError(f"block index must be >= 1, got {index}")
        if self.threshold >= 1 << 64:
            return True
        if self.threshold <= 0:
            return False
        return raw_draw(self.params.seed, index) < self.threshold

    def draws(self, first_index: int, count: int) -> np.ndarray:
        if first_index < 1 or count < 0:
            raise ParameterError("need first_index >= 1 and count >= 0")
        return bernoulli_draws(self.params.seed, first_index, count, self.threshold)

    def __iter__(self) -> Iterator[bool]:
        return self

    def __next__(self) -> bool:
        self._cursor += 1
        return self.draw(self._cursor)


def _check_limit(limit: int, block_len: int, table: LevelTable) -> None:
    if not 0 <= limit < VALUE_LIMIT:
        raise ParameterError(f"limit must be in [0, 2^63), got {limit}")
    if limit > block_len * table.max_index:
        raise RangeError(
            f"limit {limit} exceeds the {table.max_level}-level table coverage "
            f"({block_len * table.max_index})"
        )


def selected_chunks(
    params: SeqParams, limit: int | None = None, table: LevelTable | None = None
) -> Iterator[np.ndarray]:
    """Yield the selected integers up to ``limit`` as increasing uint64 chunks.

    Levels are walked in order and rows in batches; within a batch the
    members of the selected blocks are sorted, which is globally correct
    because each row occupies its own run of consecutive integers.  Chunk
    boundaries depend only on the parameters, never on the draws.
    """
    if limit is None:
        limit = params.limit
    table = table or default_table()
    lam = params.block_len
    _check_limit(limit, lam, table)
    threshold = bernoulli_threshold(params.select_prob)
    for level in range(1, table.max_level + 1):
        start = lam * table.cum_blocks[level - 1]  # values of this level sit above start
        if start >= limit:
            return
        span = lam * level
        need_rows = min(table.rows[level], -(-(limit - start) // span))
        first_block = table.cum_blocks[level - 1] + 1
        rows_per_batch = max(1, _CHUNK_DRAWS // level)
        steps = np.arange(lam, dtype=np.uint64) * _U64(level)
        for row0 in range(0, need_rows, rows_per_batch):
            nrows = min(rows_per_batch, need_rows - row0)
            sel = bernoulli_draws(
                params.seed, first_block + row0 * level, nrows * level, threshold
            )
            idx = np.nonzero(sel)[0]
            if idx.size == 0:
                continue
            idx = idx.astype(np.uint64)
            row_in_batch = idx // _U64(level)
            offset = idx - row_in_batch * _U64(level) + _U64(1)
            first_vals = _U64(start + row0 * span) + row_in_batch * _U64(span) + offset
            flat = (first_vals[:, None] + steps[None, :]).ravel()
            flat.sort()
            if int(flat[-1]) > limit:
                flat = flat[flat <= _U64(limit)]
            if flat.size:
                yield flat


def sequence_chunks(
    params: SeqParams, limit: int | None = None, table: LevelTable | None = None
) -> Iterator[np.ndarray]:
    """The bounded-gap sequence up to ``limit``: odd numbers merged with the
    doubled selected values, as increasing uint64 chunks.

    The odds are a regular grid, so the merge positions come from counting
    rather than comparison; no sort is needed.
    """
    if limit is None:
        limit = params.limit
    covered = 0  # even; everything <= covered has been emitted
    for m in selected_chunks(params, limit // 2, table):
        evens = m * _U64(2)
        hi = int(evens[-1])
        yield _merge_odds(evens, covered, hi)
        covered = hi
    if covered < limit:
        tail = np.arange(covered + 1, limit + 1, 2, dtype=np.uint64)
        if tail.size:
            yield tail


def _merge_odds(evens: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """Merge sorted even values in (lo, hi] with all odd numbers there."""
    n_odd = (hi - lo) >> 1
    total = evens.size + n_odd
    out = np.empty(total, dtype=np.uint64)
    pos = np.arange(evens.size, dtype=np.uint64) + ((evens - _U64(lo)) >> _U64(1))
    out[pos] = evens
    mask = np.ones(total, dtype=bool)
    mask[pos] = False
    out[mask] = np.arange(lo + 1, hi, 2, dtype=np.uint64)
    return out


def iter_selected(
    params: SeqParams, limit: int | None = None, table: LevelTable | None = None
) -> Iterator[int]:
    """Scalar view of :func:`selected_chunks`."""
    for chunk in selected_chunks(params, limit, table):
        yield from chunk.tolist()


def iter_sequence(
    params: SeqParams, limit: int | None = None, table: LevelTable | None = None
) -> Iterator[int]:
    """Scalar view of :func:`sequence_chunks`."""
    for chunk in sequence_chunks(params, limit, table):
        yield from chunk.tolist()


def selection_count(params: SeqParams, num_blocks: int) -> int:
    """How many of the first ``num_blocks`` block draws succeed."""
    if num_blocks < 0:
        raise ParameterError(f"num_blocks must be >= 0, got {num_blocks}")
    threshold = bernoulli_threshold(params.select_prob)
    total = 0
    for first in range(1, num_blocks + 1, _CHUNK_DRAWS):
        count = min(_CHUNK_DRAWS, num_blocks - first + 1)
        total += int(np.count_nonzero(bernoulli_draws(params.seed, first, count, threshold)))
    return total


def gap_counts(
    params: SeqParams, limit: int | None = None, table: LevelTable | None = None
) -> dict[int, int]:
    """Histogram of consecutive gaps of the bounded-gap sequence."""
    counts: dict[int, int] = {}
    prev = None
    for chunk in sequence_chunks(params, limit, table):
        if prev is None:
            diffs = np.diff(chunk)
        else:
            diffs = np.diff(np.concatenate(([prev], chunk)))
        prev = _U64(chunk[-1])
        values, freq = np.unique(diffs, return_counts=True)
        for v, c in zip(values.tolist(), freq.tolist()):
            counts[int(v)] = counts.get(int(v), 0) + int(c)
    return counts


def level_partition_mismatches(
    level: int, block_len: int, table: LevelTable, batch_rows: int | None = None
) -> int:
    """Exhaustive partition check for one level.

    Rebuilds every block of the level from its coordinates, sorts the union,
    and counts positions that disagree with the run of consecutive integers
    the level must tile.  Zero means the partition is exact.
    """
    if not 1 <= level <= table.max_level:
        raise RangeError(f"level {level} outside [1, {table.max_level}]")
    if block_len < 1:
        raise ParameterError(f"block_len must be >= 1, got {block_len}")
    lam = block_len
    base_value = lam * table.cum_blocks[level - 1]
    span = lam * level
    if batch_rows is None:
        batch_rows = max(1, _CHUNK_DRAWS // level)
    steps = np.arange(lam, dtype=np.uint64) * _U64(level)
    mismatches = 0
    for row0 in range(0, table.rows[level], batch_rows):
        nrows = min(batch_rows, table.rows[level] - row0)
        within = np.arange(row0 * level, (row0 + nrows) * level, dtype=np.uint64)
        row = within // _U64(level)
        offset = within - row * _U64(level) + _U64(1)
        first_vals = _U64(base_value) + row * _U64(span) + offset
        flat = (first_vals[:, None] + steps[None, :]).ravel()
        flat.sort()
        lo = base_value + row0 * span
        expected = np.arange(lo + 1, lo + nrows * span + 1, dtype=np.uint64)
        mismatches += int(np.count_nonzero(flat != expected))
    return mismatches
