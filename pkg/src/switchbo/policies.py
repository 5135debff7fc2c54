"""Sequential policies for optimization under switching costs.

Five strategies share one step skeleton (fit GP, maximize EI, evaluate,
charge the ledger): plain BO that ignores the cost, probabilistic setup
reuse, periodic switching, a nested two-level search over the costly
subspace, and cost-cooled EI-per-unit-cost selection.

A switch step optimizes EI over the full box; a reuse step pins the costly
coordinates to the current setup and optimizes over the cheap subspace
only. When a wanted switch is unaffordable the step degrades to a reuse
(flagged in the trace); when not even a reuse fits the budget the run
ends.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .acquisition import (AcquisitionQuery, CoolingState, cost_cooled,
                          expected_improvement, gamma, optimize_acquisition)
from .cost import BudgetLedger, CostModel, is_switch
from .gp import Dataset, GPModel, KernelParams, fit, posterior
from .metrics import EvalRecord, Trace
from .problems import Problem, initial_design

# Harness hyperparameter grids: 21 reuse probabilities and 5 switch periods.
P_GRID = tuple(round(0.05 * i, 2) for i in range(21))
K_GRID = (1, 2, 3, 5, 10)


@dataclass(frozen=True)
class VanillaBO:
    """Classic BO; every step searches the full space regardless of cost."""


@dataclass(frozen=True)
class PReuse:
    """Reuse the current setup independently with probability ``p`` each step."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {self.p}")


@dataclass(frozen=True)
class Periodic:
    """Switch every ``k``-th step, reuse the setup otherwise."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class Nested:
    """Outer GP over the costly subspace picks a setup every ``k`` steps;
    an inner GP optimizes the cheap coordinates under that setup.

    ``k`` also governs the blocked initialization (``n_setups`` setups,
    each evaluated ``k`` times).
    """

    n_setups: int = 3
    k: int = 1

    def __post_init__(self):
        if self.n_setups < 2:
            raise ValueError(f"n_setups must be >= 2, got {self.n_setups}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class EipuCool:
    """Pick between a reuse and a switch candidate by cost-cooled EI."""


PolicyConfig = VanillaBO | PReuse | Periodic | Nested | EipuCool


def policy_kind(policy: PolicyConfig) -> str:
    return {VanillaBO: "vanilla", PReuse: "preuse", Periodic: "periodic",
            Nested: "nested", EipuCool: "eipu"}[type(policy)]


def policy_params_str(policy: PolicyConfig) -> str:
    if isinstance(policy, PReuse):
        return f"p={policy.p:g}"
    if isinstance(policy, Periodic):
        return f"k={policy.k}"
    if isinstance(policy, Nested):
        return f"n={policy.n_setups};k={policy.k}"
    return ""


def policy_label(policy: PolicyConfig) -> str:
    params = policy_params_str(policy)
    kind = policy_kind(policy)
    return f"{kind}({params})" if params else kind


@dataclass
class RunState:
    """Mutable per-run state; confined to a single worker."""

    problem: Problem
    cost_model: CostModel
    ledger: BudgetLedger
    rng: np.random.Generator
    data: Dataset
    records: list[EvalRecord] = field(default_factory=list)
    steps: int = 0              # post-initialization evaluations taken
    fit_restarts: int = 8
    nested_setup: np.ndarray | None = None
    n_costly_fallbacks: int = 0
    last_params: "KernelParams | None" = None

    @property
    def best_so_far(self) -> float:
        return self.records[-1].best_so_far if self.records else -math.inf


def _refit_restarts(n: int, base: int) -> int:
    """Cold-restart budget for the per-step refit.

    Consecutive refits differ by one observation and warm-start from the
    previous optimum, so the full multi-start sweep only pays off while the
    dataset is small."""
    if n <= 50:
        return base
    if n <= 150:
        return max(base // 2, 2)
    return 2


def _fit_full(state: RunState) -> GPModel:
    restarts = _refit_restarts(state.data.n, state.fit_restarts)
    model = fit(state.data, rng=state.rng, restarts=restarts,
                warm_start=state.last_params)
    state.last_params = model.params
    return model


def _pinned_query(state: RunState, model: GPModel, setup: np.ndarray) -> AcquisitionQuery:
    pins = {idx: float(setup[j]) for j, idx in enumerate(state.problem.costly_indices)}
    return AcquisitionQuery(model=model, incumbent=model.incumbent,
                            bounds=state.problem.bounds, pinned=pins)


def _full_query(state: RunState, model: GPModel) -> AcquisitionQuery:
    return AcquisitionQuery(model=model, incumbent=model.incumbent,
                            bounds=state.problem.bounds)


def _ei_at(model: GPModel, x: np.ndarray) -> float:
    mean, var = posterior(model, x)
    return float(expected_improvement(mean, math.sqrt(var), model.incumbent))


def _commit(state: RunState, x: np.ndarray, degraded: bool) -> EvalRecord:
    """Evaluate ``x``, charge the ledger per the cost function, and record."""
    xc = state.problem.costly_part(x)
    switched = is_switch(state.ledger.current_setup, xc,
                         state.cost_model.equality_tolerance)
    cost = state.cost_model.c_switch if switched else 1.0
    y = float(state.problem.evaluate(x))
    accepted = state.ledger.charge(cost, switched=switched)
    if not accepted:
        raise RuntimeError("internal error: affordability must be checked before commit")
    state.ledger.current_setup = np.asarray(xc, dtype=float).copy()
    state.data = state.data.append(x, y)
    rec = EvalRecord(t=len(state.records), phase="opt", point=np.asarray(x, dtype=float),
                     y=y, step_cost=cost, cum_cost=state.ledger.spent,
                     is_switch=switched, degraded=degraded,
                     best_so_far=max(state.best_so_far, y))
    state.records.append(rec)
    state.steps += 1
    return rec


def _reuse_step(state: RunState, model: GPModel, degraded: bool = False) -> EvalRecord:
    x = optimize_acquisition(_pinned_query(state, model, state.ledger.current_setup),
                             state.rng)
    return _commit(state, x, degraded)


def _switch_step(state: RunState, model: GPModel) -> EvalRecord:
    """Full-space step; degrades to a reuse when the switch is unaffordable."""
    x = optimize_acquisition(_full_query(state, model), state.rng)
    xc = state.problem.costly_part(x)
    if (is_switch(state.ledger.current_setup, xc, state.cost_model.equality_tolerance)
            and not state.ledger.can_afford(state.cost_model.c_switch)):
        return _reuse_step(state, model, degraded=True)
    return _commit(state, x, degraded=False)


def step_vanilla(state: RunState) -> EvalRecord | None:
    """One cost-ignorant BO step."""
    if not state.ledger.can_afford(1.0):
        return None
    model = _fit_full(state)
    return _switch_step(state, model)


def preuse_wants_reuse(rng: np.random.Generator, p: float) -> bool:
    """The probabilistic-reuse coin flip: one uniform draw per step."""
    return float(rng.uniform()) < p


def periodic_wants_switch(steps: int, k: int) -> bool:
    """Periodic schedule: switch on every step index divisible by ``k``."""
    return steps % k == 0


def step_preuse(state: RunState, p: float) -> EvalRecord | None:
    """One probabilistic-reuse step: reuse with probability ``p``."""
    if not state.ledger.can_afford(1.0):
        return None
    reuse = preuse_wants_reuse(state.rng, p)
    model = _fit_full(state)
    if reuse:
        return _reuse_step(state, model)
    return _switch_step(state, model)


def step_periodic(state: RunState, k: int) -> EvalRecord | None:
    """One periodic-switching step: switch when the step index is a
    multiple of ``k``."""
    if not state.ledger.can_afford(1.0):
        return None
    model = _fit_full(state)
    if periodic_wants_switch(state.steps, k):
        return _switch_step(state, model)
    return _reuse_step(state, model)


def costly_group_max(data: Dataset, costly_indices: tuple[int, ...]
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Distinct costly sub-vectors seen so far and the best value each
    achieved; the training set for the outer costly-subspace GP."""
    Xc = data.X[:, list(costly_indices)]
    setups, inverse = np.unique(Xc, axis=0, return_inverse=True)
    maxima = np.full(setups.shape[0], -np.inf)
    np.maximum.at(maxima, inverse, data.y)
    return setups, maxima


def _nested_reselect(state: RunState, k: int) -> None:
    """Pick the next setup by maximizing EI of the costly-subspace GP,
    falling back to a uniform draw when fewer than 2 setups exist."""
    costly = list(state.problem.costly_indices)
    sub_bounds = state.problem.bounds[costly]
    setups, maxima = costly_group_max(state.data, state.problem.costly_indices)
    if setups.shape[0] < 2:
        lo, hi = sub_bounds[:, 0], sub_bounds[:, 1]
        state.nested_setup = lo + state.rng.uniform(size=len(costly)) * (hi - lo)
        state.n_costly_fallbacks += 1
        return
    ds = Dataset(X=setups, y=maxima, bounds=sub_bounds)
    model_c = fit(ds, rng=state.rng, restarts=state.fit_restarts)
    query = AcquisitionQuery(model=model_c, incumbent=float(np.max(maxima)),
                             bounds=sub_bounds)
    state.nested_setup = optimize_acquisition(query, state.rng)


def step_nested(state: RunState, n_setups: int, k: int) -> EvalRecord | None:
    """One nested step: refresh the setup via the outer GP every ``k``
    steps, then optimize the cheap coordinates under the pinned setup.

    The blocked initialization has ``n_setups * k`` points, so the refresh
    fires on the first post-initialization step.
    """
    if not state.ledger.can_afford(1.0):
        return None
    if state.nested_setup is None:
        state.nested_setup = state.ledger.current_setup.copy()
    degraded = False
    if periodic_wants_switch(state.steps, k):
        if state.ledger.can_afford(state.cost_model.c_switch):
            _nested_reselect(state, k)
        else:
            degraded = True  # keep the current setup; switch unaffordable
    model = _fit_full(state)
    x = optimize_acquisition(_pinned_query(state, model, state.nested_setup), state.rng)
    return _commit(state, x, degraded)


def eipu_choose(ei_reuse: float, ei_switch: float, switch_cost: float,
                gamma_value: float) -> str:
    """Cost-cooled selection between the two candidates; ties favor the
    cheaper reuse."""
    score_r = cost_cooled(ei_reuse, 1.0, gamma_value)
    score_s = cost_cooled(ei_switch, switch_cost, gamma_value)
    return "switch" if score_s > score_r else "reuse"


def step_eipu(state: RunState) -> EvalRecord | None:
    """One cost-cooled EI-per-unit-cost step: optimize the acquisition
    twice (pinned and free), discount each by cost^gamma, take the winner."""
    if not state.ledger.can_afford(1.0):
        return None
    model = _fit_full(state)
    g = gamma(CoolingState(total=state.ledger.total, spent=state.ledger.spent))

    x_reuse = optimize_acquisition(
        _pinned_query(state, model, state.ledger.current_setup), state.rng)
    ei_reuse = _ei_at(model, x_reuse)
    x_switch = optimize_acquisition(_full_query(state, model), state.rng)
    ei_switch = _ei_at(model, x_switch)
    switched = is_switch(state.ledger.current_setup,
                         state.problem.costly_part(x_switch),
                         state.cost_model.equality_tolerance)
    cost_switch = state.cost_model.c_switch if switched else 1.0

    choice = eipu_choose(ei_reuse, ei_switch, cost_switch, g)
    if choice == "switch":
        if state.ledger.can_afford(cost_switch):
            return _commit(state, x_switch, degraded=False)
        return _commit(state, x_reuse, degraded=True)
    return _commit(state, x_reuse, degraded=False)


def _step(state: RunState, policy: PolicyConfig) -> EvalRecord | None:
    if isinstance(policy, VanillaBO):
        return step_vanilla(state)
    if isinstance(policy, PReuse):
        return step_preuse(state, policy.p)
    if isinstance(policy, Periodic):
        return step_periodic(state, policy.k)
    if isinstance(policy, Nested):
        return step_nested(state, policy.n_setups, policy.k)
    if isinstance(policy, EipuCool):
        return step_eipu(state)
    raise TypeError(f"unknown policy {policy!r}")


def run_policy(problem: Problem, policy: PolicyConfig, c_switch: float,
               seed: int | None = None, *, rng: np.random.Generator | None = None,
               n_multiplier: int = 10, init: Dataset | None = None,
               equality_tolerance: float = 0.0, fit_restarts: int = 8,
               shared_y0: float | None = None) -> Trace:
    """Run one policy to budget exhaustion and return the full trace.

    The budget is ``B = n_multiplier * d * c_switch`` cost units, available
    once the initialization (never charged) is in place. ``init`` supplies a
    shared design for GAP comparability; nested policies always build their
    own blocked design, so any ``init`` passed for them is ignored.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    cost_model = CostModel(c_switch=c_switch, equality_tolerance=equality_tolerance)
    budget = float(n_multiplier * problem.d) * c_switch

    if isinstance(policy, Nested) or init is None:
        init = initial_design(problem, policy_kind(policy), rng,
                              n_setups=getattr(policy, "n_setups", 3),
                              per_setup=getattr(policy, "k", 1))
    ledger = BudgetLedger(total=budget, c_switch=c_switch,
                          current_setup=problem.costly_part(init.X[-1]))
    state = RunState(problem=problem, cost_model=cost_model, ledger=ledger,
                     rng=rng, data=init, fit_restarts=fit_restarts)
    best = -math.inf
    for i in range(init.n):
        best = max(best, float(init.y[i]))
        state.records.append(EvalRecord(
            t=i, phase="init", point=init.X[i].copy(), y=float(init.y[i]),
            step_cost=0.0, cum_cost=0.0, is_switch=False, degraded=False,
            best_so_far=best))

    max_steps = int(math.ceil(budget)) + 5
    while state.steps < max_steps:
        if _step(state, policy) is None:
            break

    return Trace(records=state.records, problem_name=problem.name, d=problem.d,
                 costly_indices=problem.costly_indices, switch_cost=c_switch,
                 policy=policy_kind(policy), policy_params=policy_params_str(policy),
                 budget=budget, y_star=problem.y_star,
                 n_costly_fallbacks=state.n_costly_fallbacks, shared_y0=shared_y0)
