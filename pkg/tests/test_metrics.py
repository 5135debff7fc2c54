"""Tests for GAP, gap curves, and run aggregation."""

import math
import statistics

import numpy as np
import pytest

from switchbo.metrics import (DegenerateProblemError, EvalRecord, Trace,
                              aggregate, gap, gap_curve)


def make_trace(init_ys, opt_rows, switch_cost=8.0):
    """opt_rows: list of (y, step_cost) tuples."""
    records = []
    best = -math.inf
    for i, y in enumerate(init_ys):
        best = max(best, y)
        records.append(EvalRecord(t=i, phase="init", point=np.zeros(2), y=y,
                                  step_cost=0.0, cum_cost=0.0, is_switch=False,
                                  degraded=False, best_so_far=best))
    cum = 0.0
    for j, (y, cost) in enumerate(opt_rows):
        best = max(best, y)
        cum += cost
        records.append(EvalRecord(t=len(init_ys) + j, phase="opt",
                                  point=np.zeros(2), y=y, step_cost=cost,
                                  cum_cost=cum, is_switch=cost != 1.0,
                                  degraded=False, best_so_far=best))
    return Trace(records=records, switch_cost=switch_cost)


def test_gap_no_improvement_is_zero():
    trace = make_trace([1.0, 2.0], [(1.5, 1.0), (2.0, 8.0)])
    assert gap(trace, y_star=10.0) == 0.0


def test_gap_full_improvement_is_one():
    trace = make_trace([0.0], [(10.0, 8.0)])
    assert gap(trace, y_star=10.0) == 1.0


def test_gap_interior_arithmetic():
    trace = make_trace([0.0], [(7.0, 1.0)])
    assert gap(trace, y_star=10.0) == pytest.approx(0.7)


def test_gap_degenerate_initialization():
    trace = make_trace([10.0], [(9.0, 1.0)])
    assert gap(trace, y_star=10.0) == 1.0  # equality within tolerance
    with pytest.raises(DegenerateProblemError):
        gap(trace, y_star=9.0)


def test_gap_affine_invariance():
    rng = np.random.default_rng(0)
    for _ in range(20):
        init = list(rng.normal(size=3))
        opt = [(float(v), float(rng.choice([1.0, 8.0]))) for v in rng.normal(size=5)]
        y_star = max([*init] + [y for y, _ in opt]) + float(rng.uniform(0.1, 2.0))
        base = gap(make_trace(init, opt), y_star)
        a, b = float(rng.uniform(0.5, 3.0)), float(rng.normal())
        scaled = gap(make_trace([a * v + b for v in init],
                                [(a * y + b, c) for y, c in opt]),
                     a * y_star + b)
        assert scaled == pytest.approx(base, abs=1e-12)


def test_gap_curve_hand_built():
    # costs 1, 8, 9 cumulative with improving y
    trace = make_trace([0.0], [(2.0, 1.0), (5.0, 7.0), (9.0, 1.0)])
    curve = gap_curve(trace, y_star=10.0, cost_grid=[0.0, 0.5, 1.0, 7.9, 8.0, 9.0, 50.0])
    assert curve == [(0.0, 0.0), (0.5, 0.0), (1.0, 0.2), (7.9, 0.2),
                     (8.0, 0.5), (9.0, 0.9), (50.0, 0.9)]


def test_gap_curve_below_first_cost_is_zero():
    trace = make_trace([1.0], [(5.0, 8.0)])
    curve = gap_curve(trace, y_star=9.0, cost_grid=[0.5])
    assert curve == [(0.5, 0.0)]


def test_gap_curve_at_final_cost_matches_gap():
    trace = make_trace([0.0, 1.0], [(3.0, 8.0), (2.0, 1.0), (6.0, 8.0)])
    y_star = 8.0
    curve = gap_curve(trace, y_star, cost_grid=[17.0, 100.0])
    assert curve[-1][1] == pytest.approx(gap(trace, y_star))


def test_gap_curve_monotone_nondecreasing():
    rng = np.random.default_rng(1)
    for _ in range(10):
        opt = [(float(y), float(rng.choice([1.0, 4.0]))) for y in rng.normal(size=8)]
        trace = make_trace(list(rng.normal(size=2)), opt)
        y_star = trace.best_y + 0.5
        values = [g for _, g in gap_curve(trace, y_star, cost_grid=np.linspace(0, 20, 41))]
        assert all(b >= a for a, b in zip(values, values[1:]))


def test_gap_curve_rejects_unsorted_grid():
    trace = make_trace([0.0], [(1.0, 1.0)])
    with pytest.raises(ValueError):
        gap_curve(trace, 2.0, cost_grid=[3.0, 1.0])


def test_aggregate_identical_values():
    mean, half, median = aggregate([0.4, 0.4, 0.4])
    assert mean == pytest.approx(0.4, abs=1e-12)
    assert half == pytest.approx(0.0, abs=1e-12)
    assert median == 0.4


def test_aggregate_two_values():
    mean, _, median = aggregate([0.0, 1.0])
    assert mean == 0.5 and median == 0.5


def test_aggregate_matches_independent_recomputation():
    rng = np.random.default_rng(2)
    values = list(rng.uniform(size=20))
    mean, half, median = aggregate(values)
    # independent arithmetic via the statistics module
    assert mean == pytest.approx(statistics.fmean(values), abs=1e-12)
    assert median == pytest.approx(statistics.median(values), abs=1e-12)
    sem = statistics.stdev(values) / math.sqrt(len(values))
    t_mult = 2.093024054408263  # t_{0.975, 19}
    assert half == pytest.approx(t_mult * sem, rel=1e-9)


def test_aggregate_single_value_has_nan_ci():
    mean, half, median = aggregate([0.3])
    assert mean == 0.3 and median == 0.3 and math.isnan(half)


def test_aggregate_empty_is_error():
    with pytest.raises(ValueError):
        aggregate([])


def test_trace_counters():
    trace = make_trace([0.0], [(1.0, 8.0), (2.0, 1.0), (3.0, 8.0)])
    assert trace.n_switches == 2
    assert trace.n_reuses == 1
    assert trace.final_cost == 17.0
    assert trace.y0 == 0.0
    assert trace.best_y == 3.0
