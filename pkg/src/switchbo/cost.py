"""Switching-cost model and budget accounting.

An evaluation that keeps the previous setup (the values of the costly
coordinates) costs one unit; an evaluation that changes any costly
coordinate costs ``c_switch`` units. A run's budget is expressed in these
cost units and tracked by a :class:`BudgetLedger`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class CostModel:
    """Relative cost of changing the costly coordinates.

    ``c_switch`` is the multiplier applied to an evaluation whose costly
    coordinates differ from the previous evaluation's; ``c_switch = 1``
    recovers plain fixed-cost optimization. ``equality_tolerance`` is the
    absolute per-coordinate tolerance used to decide whether a setup
    changed (0 means exact comparison; policies that reuse a setup copy
    the costly vector verbatim, so exact equality is well defined).
    """

    c_switch: float
    equality_tolerance: float = 0.0

    def __post_init__(self):
        if self.c_switch < 1.0:
            raise ValueError(f"c_switch must be >= 1, got {self.c_switch}")
        if self.equality_tolerance < 0.0:
            raise ValueError("equality_tolerance must be nonnegative")


def is_switch(prev_costly, next_costly, tol: float = 0.0) -> bool:
    """True iff any costly coordinate moved by more than ``tol``.

    Zero-length vectors (no costly dimensions) never switch.
    """
    prev = np.asarray(prev_costly, dtype=float)
    nxt = np.asarray(next_costly, dtype=float)
    if prev.shape != nxt.shape:
        raise ValueError(f"costly vectors differ in length: {prev.shape} vs {nxt.shape}")
    if prev.size == 0:
        return False
    return bool(np.max(np.abs(prev - nxt)) > tol)


def step_cost(prev_costly, next_costly, model: CostModel) -> float:
    """Cost of evaluating with ``next_costly`` after ``prev_costly``."""
    if is_switch(prev_costly, next_costly, model.equality_tolerance):
        return model.c_switch
    return 1.0


@dataclass
class BudgetLedger:
    """Tracks spend against a total budget in cost units.

    Maintains the identity ``spent == n_switches * c_switch + n_reuses``
    and never lets an accepted charge push ``spent`` past ``total``.
    ``current_setup`` is the costly-coordinate vector of the most recent
    evaluation (seeded from the last initialization point).
    """

    total: float
    c_switch: float
    current_setup: np.ndarray = field(default_factory=lambda: np.empty(0))
    spent: float = 0.0
    n_switches: int = 0
    n_reuses: int = 0

    def __post_init__(self):
        if self.total <= 0:
            raise ValueError("budget must be positive")
        self.current_setup = np.asarray(self.current_setup, dtype=float).copy()

    def can_afford(self, cost: float) -> bool:
        return self.spent + cost <= self.total

    def charge(self, cost: float, switched: bool | None = None) -> bool:
        """Charge ``cost`` units; returns False (no mutation) when the budget
        cannot absorb it.

        ``switched`` says which counter to bump; when omitted it is inferred
        from the cost (ambiguous only at ``c_switch == 1``, where callers
        that care should pass it explicitly).
        """
        if not self.can_afford(cost):
            return False
        if switched is None:
            switched = cost != 1.0
        self.spent += cost
        if switched:
            self.n_switches += 1
        else:
            self.n_reuses += 1
        return True

    @property
    def remaining(self) -> float:
        return self.total - self.spent
