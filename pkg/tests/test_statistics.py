import math

import numpy as np
import pytest

from gaplab import (
    COS_ONE,
    CenteredIndicator,
    ParameterError,
    SeqParams,
    UnitPoint,
    cosine_sum_closed,
    dyadic_discrepancies,
    extremal_discrepancy,
    frac_mul_array,
    geometric_checkpoints,
    integer_chunks,
    koksma_check,
    lil_normalizer,
    littlewood_signs,
    sequence_chunks,
    star_discrepancy,
    trace_many,
    trace_partial_sums,
)
from gaplab.statistics import TraceAccumulator
from gaplab.rng import Stream


# ---------------------------------------------------------------------------
# brute-force oracles

def star_brute(pts):
    """Sup over anchored intervals evaluated at every candidate endpoint,
    counting by direct comparison (O(N^2))."""
    pts = np.asarray(pts, dtype=np.float64)
    n = pts.size
    cands = np.concatenate([pts, np.arange(n + 1) / n, [0.0, 1.0]])
    le = (pts[None, :] <= cands[:, None]).sum(axis=1)
    lt = (pts[None, :] < cands[:, None]).sum(axis=1)
    return float(max(np.abs(le / n - cands).max(), np.abs(lt / n - cands).max()))


def ext_brute(pts):
    """Sup over all subintervals via closed spans between points (surplus)
    and open spans (deficit), plus the anchored end gaps."""
    ys = np.sort(np.asarray(pts, dtype=np.float64))
    n = ys.size
    i = np.arange(n)
    ii, jj = np.meshgrid(i, i, indexing="ij")
    upper = jj >= ii
    surplus = np.where(upper, (jj - ii + 1) / n - (ys[jj] - ys[ii]), -np.inf)
    deficit = np.where(jj > ii, (ys[jj] - ys[ii]) - (jj - ii - 1) / n, -np.inf)
    edge = max((ys - i / n).max(), ((1 - ys) - (n - 1 - i) / n).max())
    return float(max(surplus.max(), deficit.max(), edge, 0.0))


# ---------------------------------------------------------------------------
# star and extremal discrepancy

def test_star_examples():
    assert star_discrepancy([0.0]) == 1.0
    assert star_discrepancy([0.25, 0.75]) == 0.25


def test_star_centered_grids():
    for n in range(1, 65):
        grid = [(2 * i - 1) / (2 * n) for i in range(1, n + 1)]
        assert abs(star_discrepancy(grid) - 1 / (2 * n)) < 1e-15


def test_star_matches_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(60):
        pts = rng.random(int(rng.integers(1, 200)))
        assert abs(star_discrepancy(pts) - star_brute(pts)) < 1e-12


def test_star_scale_bounds():
    rng = np.random.default_rng(8)
    for _ in range(40):
        pts = rng.random(int(rng.integers(1, 100)))
        d = star_discrepancy(pts)
        assert 1 / (2 * pts.size) <= d <= 1.0


def test_star_lower_bound_strict_off_grid():
    n = 16
    grid = np.array([(2 * i - 1) / (2 * n) for i in range(1, n + 1)])
    bumped = grid.copy()
    bumped[3] += 1e-3
    assert star_discrepancy(bumped) > 1 / (2 * n) + 1e-4


def test_extremal_examples():
    assert extremal_discrepancy([0.5]) == 1.0
    assert extremal_discrepancy([0.25, 0.75]) == 0.5


def test_extremal_matches_brute_force():
    rng = np.random.default_rng(9)
    for _ in range(60):
        pts = rng.random(int(rng.integers(1, 150)))
        assert abs(extremal_discrepancy(pts) - ext_brute(pts)) < 1e-12


def test_extremal_between_one_and_two_stars():
    rng = np.random.default_rng(10)
    for _ in range(40):
        pts = rng.random(int(rng.integers(1, 100)))
        ds, de = star_discrepancy(pts), extremal_discrepancy(pts)
        assert ds - 1e-15 <= de <= 2 * ds + 1e-15


def test_discrepancy_input_validation():
    for func in (star_discrepancy, extremal_discrepancy):
        with pytest.raises(ParameterError):
            func([])
        with pytest.raises(ParameterError):
            func([0.5, 1.5])


# ---------------------------------------------------------------------------
# dyadic pair

def test_dyadic_examples():
    coarse, fine = dyadic_discrepancies([0.25, 0.75], 1)
    assert coarse == 0.0
    assert fine == 0.5
    coarse1, fine1 = dyadic_discrepancies([0.0], 1)
    assert fine1 == 1.0


def test_dyadic_sandwich_random_sets():
    rng = np.random.default_rng(11)
    for _ in range(300):
        pts = rng.random(int(rng.integers(1, 250)))
        level = int(rng.integers(1, 8))
        coarse, fine = dyadic_discrepancies(pts, level)
        nd = pts.size * star_discrepancy(pts)
        assert coarse <= nd + 1e-9
        assert nd <= coarse + fine + 1e-9


def test_dyadic_level_validation():
    with pytest.raises(ParameterError):
        dyadic_discrepancies([0.5], 0)
    with pytest.raises(ParameterError):
        dyadic_discrepancies([0.5], 21)


# ---------------------------------------------------------------------------
# Koksma bound

def test_koksma_indicator_any_points():
    rng = np.random.default_rng(12)
    f = CenteredIndicator(0.0, 0.5)
    for _ in range(200):
        pts = rng.random(int(rng.integers(1, 300)))
        assert koksma_check(f, pts).holds


def test_koksma_cosine_random_sets():
    rng = np.random.default_rng(13)
    for _ in range(200):
        pts = rng.random(int(rng.integers(1, 300)))
        assert koksma_check(COS_ONE, pts).holds


def test_koksma_centered_grid_tight():
    n = 64
    grid = np.array([(2 * i - 1) / (2 * n) for i in range(1, n + 1)])
    res = koksma_check(COS_ONE, grid)
    assert res.lhs < 1e-12
    assert res.rhs == pytest.approx(2 * math.pi / (2 * n), abs=1e-12)
    assert res.holds


# ---------------------------------------------------------------------------
# traces

def test_geometric_checkpoints_shape():
    cps = geometric_checkpoints(10**4)
    assert cps[0] == 16
    assert cps[-1] == 10**4
    assert all(b > a for a, b in zip(cps, cps[1:]))
    with pytest.raises(ParameterError):
        geometric_checkpoints(4)
    with pytest.raises(ParameterError):
        geometric_checkpoints(100, growth=1.0)


def test_lil_normalizer():
    assert lil_normalizer(10**6) == pytest.approx(
        math.sqrt(10**6 * math.log(math.log(10**6))), rel=1e-15
    )
    with pytest.raises(ParameterError):
        lil_normalizer(15)


def test_trace_identity_stream_matches_closed_form():
    x = UnitPoint.from_fraction(1, 10)
    n = 10**5
    tr = trace_partial_sums(COS_ONE, integer_chunks(n), x, geometric_checkpoints(n))
    assert abs(tr.checkpoints[-1].partial_sum - cosine_sum_closed(n, x).value) < 1e-6
    assert not tr.truncated
    assert tr.f_norm == pytest.approx(math.sqrt(0.5), abs=1e-15)


def test_trace_degenerate_x_zero():
    # f(0) = 1 for the cosine, so S_N = N and the ratio grows
    n = 4096
    tr = trace_partial_sums(COS_ONE, integer_chunks(n), UnitPoint(0), [16, 256, n])
    assert [e.partial_sum for e in tr.checkpoints] == [16.0, 256.0, float(n)]
    assert tr.checkpoints[-1].ratio == pytest.approx(n / lil_normalizer(n), rel=1e-12)


def test_trace_odd_stream_per_term_oracle():
    params = SeqParams(1, 0.0, 0, 2 * 10**4)  # odds only
    x = UnitPoint.from_fraction(29, 1009)
    f = CenteredIndicator(0.0, 0.5)
    cps = [16, 100, 5000, 10**4]
    tr = trace_partial_sums(f, sequence_chunks(params), x, cps)
    odds = np.arange(1, 2 * 10**4, 2, dtype=np.uint64)
    for entry in tr.checkpoints:
        vals = frac_mul_array(x.frac, odds[: entry.count])
        oracle = math.fsum(((vals >= 0.0) & (vals <= 0.5)) - 0.5)
        assert abs(entry.partial_sum - oracle) < 1e-9


def test_trace_multiple_functions_single_pass():
    fs = [COS_ONE, CenteredIndicator(0.0, 0.5)]
    x = UnitPoint.from_fraction(3, 7919)
    traces = trace_many(fs, integer_chunks(3000), x, [16, 3000])
    singles = [
        trace_partial_sums(f, integer_chunks(3000), x, [16, 3000]) for f in fs
    ]
    for a, b in zip(traces, singles):
        assert a.checkpoints == b.checkpoints


def test_trace_resume_is_bit_identical():
    x = UnitPoint.from_fraction(7, 10**6 + 3)
    cps = [16, 1000, 4096, 9000, 20000]
    chunks = [
        np.arange(lo, min(lo + 1500, 20001), dtype=np.uint64) for lo in range(1, 20001, 1500)
    ]
    one = TraceAccumulator([COS_ONE], x, cps)
    for c in chunks:
        one.feed(c)
    whole = one.finish()[0]

    first = TraceAccumulator([COS_ONE], x, cps)
    for c in chunks[:5]:
        first.feed(c)
    resumed = TraceAccumulator.resume([COS_ONE], x, cps, first.export_state())
    for c in chunks[5:]:
        resumed.feed(c)
    again = resumed.finish()[0]
    assert whole.checkpoints == again.checkpoints
    assert whole.running_sup == again.running_sup


def test_trace_truncation_flag():
    tr = trace_partial_sums(COS_ONE, integer_chunks(100), 0.3, [16, 50, 500])
    assert tr.truncated
    assert [e.count for e in tr.checkpoints] == [16, 50]


def test_trace_checkpoint_validation():
    with pytest.raises(ParameterError):
        trace_partial_sums(COS_ONE, integer_chunks(10), 0.3, [10, 10])
    with pytest.raises(ParameterError):
        trace_partial_sums(COS_ONE, integer_chunks(10), 0.3, [])


def test_trace_last_values_track_stream():
    params = SeqParams(1, 0.0, 0, 1000)  # odds: value at count N is 2N - 1
    tr = trace_partial_sums(COS_ONE, sequence_chunks(params), 0.3, [16, 100, 500])
    assert tr.last_values == [31, 199, 999]


def test_running_sups_monotone():
    tr = trace_partial_sums(
        COS_ONE, integer_chunks(10**4), UnitPoint.from_fraction(5, 64 + 1),
        geometric_checkpoints(10**4),
    )
    sups = tr.running_sups()
    assert all(b >= a for a, b in zip(sups, sups[1:]))
    assert sups[-1] == tr.running_sup


# ---------------------------------------------------------------------------
# sign sequences

def test_littlewood_signs_trivial_patterns():
    all_plus = littlewood_signs(SeqParams(1, 1.0, 0, 50), None, 50)
    assert np.all(all_plus == 1)
    odds_only = littlewood_signs(SeqParams(1, 0.0, 0, 10), None, 10)
    assert odds_only.tolist() == [1, -1, 1, -1, 1, -1, 1, -1, 1, -1]


def test_littlewood_sign_sum_identity():
    n = 10**4
    params = SeqParams(3, 0.2348887848522908, 31, n)
    signs = littlewood_signs(params, None, n).astype(np.float64)
    seq = np.concatenate(list(sequence_chunks(params, n)))
    ks = np.arange(1, n + 1, dtype=np.uint64)
    rng = Stream(123)
    for _ in range(10):
        x = UnitPoint.from_stream(rng)
        all_cos = np.cos(2 * np.pi * frac_mul_array(x.frac, ks))
        lhs = float(np.sum(signs * all_cos))
        rhs = 2.0 * float(np.sum(np.cos(2 * np.pi * frac_mul_array(x.frac, seq)))) - float(
            np.sum(all_cos)
        )
        assert abs(lhs - rhs) < 1e-8
