"""Multi-trajectory experiments: ratio ensembles, variance validation,
density checks.

A trajectory is one (evaluation point, sequence seed) pair.  Points and
seeds come from counter-derived substreams of a master seed, and the
aggregation is an ordered reduction over the trajectory list, so a report
is a pure function of its configuration whatever the worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .construction import (
    LevelTable,
    SeqParams,
    block_values,
    default_table,
    sequence_chunks,
)
from .errors import ParameterError, ResourceCapError
from .fixedpoint import UnitPoint, frac_mul_array
from .kernels import PeriodicFunction, TrigPoly, eval_periodic_array, f_norm
from .parameters import ConstantsReport, disc_constant, lil_constant, max_constant
from .rng import (
    GOLDEN,
    Stream,
    bernoulli_threshold,
    derive_seed,
    derive_seed_array,
    mix64_array,
)
from .statistics import MIN_RATIO_COUNT, LilTrace, trace_many

DEFAULT_MAX_ELEMENTS = 10**9
MAX_ELEMENTS_ENV = "GAPLAB_MAX_ELEMENTS"

_X_DOMAIN = 1  # substream counter domains under the master seed
_SEED_DOMAIN = 2

QUANTILE_LEVELS = (0.05, 0.25, 0.50, 0.75, 0.95)


def element_cap(override: int | None = None) -> int:
    """Configured ceiling on total streamed elements per invocation."""
    if override is not None:
        return int(override)
    env = os.environ.get(MAX_ELEMENTS_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ParameterError(f"{MAX_ELEMENTS_ENV}={env!r} is not an integer") from exc
    return DEFAULT_MAX_ELEMENTS


@dataclass(frozen=True)
class ExperimentConfig:
    """A resolved experiment: parameters, test functions, ensemble shape."""

    params: SeqParams  # seed field unused; trajectory seeds derive from master_seed
    functions: tuple[PeriodicFunction, ...]
    checkpoints: tuple[int, ...]
    num_x: int = 1
    num_seeds: int = 1
    master_seed: int = 0
    limit: int | None = None  # largest sequence value; default params.limit
    max_elements: int | None = None

    def __post_init__(self):
        if self.num_x < 1 or self.num_seeds < 1:
            raise ParameterError("num_x and num_seeds must be >= 1")
        if not self.functions:
            raise ParameterError("need at least one test function")
        cps = self.checkpoints
        if not cps or any(b <= a for a, b in zip(cps, cps[1:])):
            raise ParameterError("checkpoints must be strictly increasing")
        if cps[0] < MIN_RATIO_COUNT:
            raise ParameterError(f"first checkpoint must be >= {MIN_RATIO_COUNT}")

    @property
    def value_limit(self) -> int:
        return self.params.limit if self.limit is None else self.limit

    @property
    def trajectories(self) -> int:
        return self.num_x * self.num_seeds


@dataclass
class McReport:
    """Aggregated ensemble results, a pure function of the configuration."""

    constants: ConstantsReport
    checkpoints: list[int]
    function_norms: list[float]
    # per function: trajectories x checkpoints running sups, and final ratios
    sup_quantiles: list[np.ndarray]  # each (len(checkpoints), len(QUANTILE_LEVELS))
    final_ratios: list[list[float]]
    densities: list[float]  # per trajectory, count/value at the last checkpoint
    truncated: bool
    variance: "VarianceCheck | None" = None
    x_fracs: list[int] = field(default_factory=list)
    seq_seeds: list[int] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "constants": self.constants.as_dict(),
            "checkpoints": list(self.checkpoints),
            "function_norms": list(self.function_norms),
            "quantile_levels": list(QUANTILE_LEVELS),
            "sup_quantiles": [q.tolist() for q in self.sup_quantiles],
            "final_ratios": [list(r) for r in self.final_ratios],
            "densities": list(self.densities),
            "truncated": self.truncated,
            "variance": None if self.variance is None else self.variance.as_dict(),
            "x_fracs": [format(x, "032x") for x in self.x_fracs],
            "seq_seeds": list(self.seq_seeds),
        }


def _trajectory_inputs(config: ExperimentConfig) -> list[tuple[int, int]]:
    """(x_frac, sequence_seed) per trajectory, x-major, counter-derived."""
    xs = []
    for i in range(config.num_x):
        stream = Stream(derive_seed(config.master_seed, _X_DOMAIN, i))
        xs.append(stream.next_unit_frac())
    seeds = [derive_seed(config.master_seed, _SEED_DOMAIN, j) for j in range(config.num_seeds)]
    return [(x, s) for x in xs for s in seeds]


def _run_trajectory(
    config: ExperimentConfig, table: LevelTable, x_frac: int, seq_seed: int
) -> tuple[list[LilTrace], float]:
    params = replace(config.params, seed=seq_seed)
    chunks = sequence_chunks(params, config.value_limit, table)
    traces = trace_many(config.functions, chunks, UnitPoint(x_frac), config.checkpoints)
    t0 = traces[0]
    if t0.checkpoints and t0.last_values:
        density = t0.checkpoints[-1].count / t0.last_values[-1]
    else:
        density = math.nan
    return traces, density


def run_lil_experiment(
    config: ExperimentConfig, table: LevelTable | None = None, threads: int = 1
) -> McReport:
    """Run the full ensemble and aggregate running-sup quantiles.

    Refuses up front if trajectories x last checkpoint exceeds the element
    cap.  Trajectories are independent pure tasks; the thread count only
    changes wall time, never the report.
    """
    table = table or default_table()
    estimate = config.trajectories * config.checkpoints[-1]
    cap = element_cap(config.max_elements)
    if estimate > cap:
        raise ResourceCapError(estimate, cap)

    inputs = _trajectory_inputs(config)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(lambda xs: _run_trajectory(config, table, xs[0], xs[1]), inputs)
            )
    else:
        results = [_run_trajectory(config, table, x, s) for x, s in inputs]

    n_cp = len(config.checkpoints)
    sup_quantiles = []
    final_ratios = []
    for fi in range(len(config.functions)):
        sups = np.empty((len(inputs), n_cp), dtype=np.float64)
        finals = []
        for ti, (traces, _) in enumerate(results):
            rs = traces[fi].running_sups()
            rs.extend([rs[-1] if rs else math.nan] * (n_cp - len(rs)))  # truncated tails
            sups[ti] = rs
            finals.append(
                traces[fi].checkpoints[-1].ratio if traces[fi].checkpoints else math.nan
            )
        sup_quantiles.append(np.quantile(sups, QUANTILE_LEVELS, axis=0).T)
        final_ratios.append(finals)

    p = config.params.select_prob
    lam = config.params.block_len
    constants = ConstantsReport(
        block_len=lam,
        select_prob=p,
        lil_constant=lil_constant(lam, p),
        disc_constant=disc_constant(lam, p),
        density=(lam + p) / (2.0 * lam),
        feasible_max=max_constant(lam).value,
    )
    return McReport(
        constants=constants,
        checkpoints=list(config.checkpoints),
        function_norms=[f_norm(f) for f in config.functions],
        sup_quantiles=sup_quantiles,
        final_ratios=final_ratios,
        densities=[d for _, d in results],
        truncated=any(t.truncated for traces, _ in results for t in traces),
        x_fracs=[x for x, _ in inputs],
        seq_seeds=[s for _, s in inputs],
    )


@dataclass(frozen=True)
class VarianceCheck:
    empirical: float
    predicted: float
    rel_err: float  # nan when the prediction is degenerate
    degenerate: bool

    def as_dict(self) -> dict:
        return {
            "empirical": self.empirical,
            "predicted": self.predicted,
            "rel_err": self.rel_err,
            "degenerate": self.degenerate,
        }


def variance_validation(
    poly: TrigPoly,
    block_len: int,
    select_prob: float,
    x: UnitPoint | float,
    num_blocks: int,
    num_realizations: int,
    seed: int = 0,
    table: LevelTable | None = None,
) -> VarianceCheck:
    """Sample variance of the selected block sums against the exact
    prediction p (1 - p) times the sum of squared block sums.

    Selection draws are independent across blocks within a realization and
    across realizations (one derived substream per realization), so the
    prediction is an identity, not an asymptotic; the empirical variance
    fluctuates at the sqrt(2 / R) relative scale.
    """
    table = table or default_table()
    if num_blocks < 1 or num_blocks > table.max_index:
        raise ParameterError(f"num_blocks must be in [1, {table.max_index}]")
    if num_realizations < 100:
        raise ParameterError("need at least 100 realizations")
    if not 0.0 <= select_prob <= 1.0:
        raise ParameterError(f"select_prob {select_prob!r} outside [0, 1]")
    u = x if isinstance(x, UnitPoint) else UnitPoint.from_float(float(x))

    members = np.array(
        [block_values(k, block_len, table) for k in range(1, num_blocks + 1)],
        dtype=np.uint64,
    )
    fr = frac_mul_array(u.frac, members.ravel())
    block_sums = eval_periodic_array(poly, fr).reshape(num_blocks, block_len).sum(axis=1)

    threshold = bernoulli_threshold(select_prob)
    seeds = derive_seed_array(seed, np.arange(num_realizations, dtype=np.uint64))
    ks = np.arange(1, num_blocks + 1, dtype=np.uint64)
    words = mix64_array(seeds[:, None] + ks[None, :] * np.uint64(GOLDEN))
    if threshold >= 1 << 64:
        picks = np.ones(words.shape, dtype=np.float64)
    elif threshold <= 0:
        picks = np.zeros(words.shape, dtype=np.float64)
    else:
        picks = (words < np.uint64(threshold)).astype(np.float64)
    totals = picks @ block_sums

    empirical = float(np.var(totals, ddof=1))
    predicted = select_prob * (1.0 - select_prob) * float(np.sum(block_sums**2))
    if predicted < 1e-12:
        rel = 0.0 if empirical < 1e-12 else math.nan
        return VarianceCheck(empirical, predicted, rel, True)
    return VarianceCheck(empirical, predicted, abs(empirical - predicted) / predicted, False)


@dataclass(frozen=True)
class DensityCheck:
    """Count of sequence values up to a bound against the expected density."""

    count: int
    expected: float
    deviation: float

    def as_dict(self) -> dict:
        return {"count": self.count, "expected": self.expected, "deviation": self.deviation}


def density_check(
    params: SeqParams, table: LevelTable | None = None, limit: int | None = None
) -> DensityCheck:
    """One stream pass counting values <= limit against the reference
    count limit (block_len + p) / (2 block_len).

    The partition property makes the observed density converge to
    (1 + p) / 2, which sits above the reference whenever block_len > 1;
    the deviation field reports the gap against the reference as given.
    """
    table = table or default_table()
    value_limit = params.limit if limit is None else limit
    if value_limit < 1:
        raise ParameterError(f"limit must be >= 1, got {value_limit}")
    count = sum(c.size for c in sequence_chunks(params, value_limit, table))
    lam, p = params.block_len, params.select_prob
    expected = value_limit * (lam + p) / (2.0 * lam)
    return DensityCheck(int(count), expected, (count - expected) / value_limit)
