"""Switching-cost-aware Bayesian optimization toolkit and benchmark harness."""

from .acquisition import (AcquisitionQuery, CoolingState, cost_cooled,
                          expected_improvement, gamma, optimize_acquisition)
from .cost import BudgetLedger, CostModel, is_switch, step_cost
from .gp import (Dataset, GPModel, KernelParams, build_model, fit,
                 log_marginal_likelihood, matern52_ard, posterior)
from .metrics import GapSummary, Trace, aggregate, gap, gap_curve, summarize_trace
from .policies import (EipuCool, Nested, Periodic, PolicyConfig, PReuse,
                       VanillaBO, run_policy)
from .problems import Problem, initial_design, make_configuration

__version__ = "0.1.0"
