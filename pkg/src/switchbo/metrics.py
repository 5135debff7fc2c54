"""Run traces, the GAP measure, and cost-indexed performance curves.

GAP = (y_i - y_0) / (y_star - y_0) under maximization, where y_0 is the
best value among the initialization rows and y_i the best observed value
of the whole run. GAP is 1 exactly when the optimum was attained and 0
when the run never improved on its initialization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import t as student_t


class DegenerateProblemError(ValueError):
    """Raised when the initialization already beats the known optimum."""


@dataclass(frozen=True)
class EvalRecord:
    """One evaluation: the point, its value, and its cost-accounting state."""

    t: int
    phase: str              # "init" or "opt"
    point: np.ndarray
    y: float
    step_cost: float
    cum_cost: float
    is_switch: bool
    degraded: bool
    best_so_far: float


@dataclass
class Trace:
    """Ordered evaluation records of a single run plus its metadata."""

    records: list[EvalRecord] = field(default_factory=list)
    problem_name: str = ""
    d: int = 0
    costly_indices: tuple[int, ...] = ()
    switch_cost: float = 1.0
    policy: str = ""
    policy_params: str = ""
    budget: float = 0.0
    y_star: float = math.nan
    n_costly_fallbacks: int = 0
    shared_y0: float | None = None

    @property
    def init_records(self) -> list[EvalRecord]:
        return [r for r in self.records if r.phase == "init"]

    @property
    def opt_records(self) -> list[EvalRecord]:
        return [r for r in self.records if r.phase == "opt"]

    @property
    def y0(self) -> float:
        init = self.init_records
        if not init:
            raise ValueError("trace has no initialization rows")
        return max(r.y for r in init)

    @property
    def best_y(self) -> float:
        return max(r.y for r in self.records)

    @property
    def final_cost(self) -> float:
        return self.records[-1].cum_cost if self.records else 0.0

    @property
    def n_switches(self) -> int:
        return sum(1 for r in self.opt_records if r.is_switch)

    @property
    def n_reuses(self) -> int:
        return sum(1 for r in self.opt_records if not r.is_switch)


@dataclass(frozen=True)
class GapSummary:
    gap: float
    y0: float
    y_star: float
    final_cost: float
    n_switches: int
    n_reuses: int
    degenerate: bool = False


def gap(trace: Trace, y_star: float) -> float:
    """Normalized improvement from the initialization toward the optimum."""
    if not trace.records:
        raise ValueError("empty trace")
    y0 = trace.y0
    denom = y_star - y0
    if denom <= 0:
        if denom >= -1e-12:
            # Initialization already at the optimum (within float fuzz).
            return 1.0
        raise DegenerateProblemError(
            f"initialization best {y0} exceeds y_star {y_star}")
    value = (trace.best_y - y0) / denom
    return float(min(max(value, 0.0), 1.0))


def summarize_trace(trace: Trace, y_star: float) -> GapSummary:
    y0 = trace.y0
    degenerate = y_star - y0 <= 0
    return GapSummary(gap=gap(trace, y_star), y0=y0, y_star=y_star,
                      final_cost=trace.final_cost, n_switches=trace.n_switches,
                      n_reuses=trace.n_reuses, degenerate=degenerate)


def gap_curve(trace: Trace, y_star: float, cost_grid) -> list[tuple[float, float]]:
    """GAP as a right-continuous step function of cumulative cost.

    The value at cost c uses the best observation among all rows with
    cumulative cost <= c; initialization rows sit at cost 0.
    """
    grid = list(cost_grid)
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("cost_grid must be sorted ascending")
    y0 = trace.y0
    denom = y_star - y0
    costs = [r.cum_cost for r in trace.records]
    bests = [r.best_so_far for r in trace.records]
    out = []
    j = -1
    for c in grid:
        while j + 1 < len(costs) and costs[j + 1] <= c:
            j += 1
        best = bests[j] if j >= 0 else y0
        g = 1.0 if denom <= 0 else min(max((best - y0) / denom, 0.0), 1.0)
        out.append((float(c), float(g)))
    return out


def aggregate(values) -> tuple[float, float, float]:
    """Mean, 95% CI half-width (t distribution, n-1 dof), and median.

    The half-width is NaN for a single value; an empty input is an error.
    """
    vals = np.asarray(list(values), dtype=float)
    if vals.size == 0:
        raise ValueError("aggregate needs at least one value")
    mean = float(np.mean(vals))
    median = float(np.median(vals))
    if vals.size < 2:
        return mean, math.nan, median
    sem = float(np.std(vals, ddof=1)) / math.sqrt(vals.size)
    half = float(student_t.ppf(0.975, vals.size - 1)) * sem
    return mean, half, median
