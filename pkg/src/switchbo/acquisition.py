"""Expected improvement, cost cooling, and the multi-start acquisition search.

The optimizer draws scrambled Sobol raw samples over the free subspace
(costly coordinates may be pinned to fixed values), ranks them by EI, and
refines the best few with bounded quasi-Newton steps driven by batched
central-difference gradients. Everything is deterministic given the rng.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import ndtr
from scipy.stats import qmc

from .gp import GPModel, posterior

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

N_RAW_SAMPLES = 2048
N_RESTARTS = 10
REFINE_MAXITER = 200
FD_STEP = 1e-6           # central-difference step in normalized coordinates
SIGMA_FLOOR = 1e-12


def expected_improvement(mean, std, incumbent):
    """Closed-form EI under maximization; zero-variance inputs degrade to
    max(mean - incumbent, 0)."""
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    improve = mean - incumbent
    tiny = std < SIGMA_FLOOR
    safe_std = np.where(tiny, 1.0, std)
    z = improve / safe_std
    pdf = INV_SQRT_2PI * np.exp(-0.5 * z * z)
    ei = np.where(tiny, np.maximum(improve, 0.0), improve * ndtr(z) + safe_std * pdf)
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


@dataclass(frozen=True)
class CoolingState:
    """Budget position used by the cost-cooled discount."""

    total: float
    spent: float

    def __post_init__(self):
        if self.total <= 0:
            raise ValueError("total budget must be positive")
        if self.spent < 0:
            raise ValueError("spent budget must be nonnegative")


def gamma(state: CoolingState) -> float:
    """Decay exponent (B - B_t) / B, clamped to [0, 1]."""
    return min(max((state.total - state.spent) / state.total, 0.0), 1.0)


def cost_cooled(ei: float, cost: float, gamma_value: float) -> float:
    """EI discounted by cost^gamma; the identity at unit cost or gamma 0."""
    return ei / cost ** gamma_value


@dataclass(frozen=True)
class AcquisitionQuery:
    """One acquisition maximization: model, incumbent, box, optional pins.

    ``pinned`` maps dimension index to a fixed value; pinned coordinates
    are carried through bit-identical and excluded from the search space.
    """

    model: GPModel
    incumbent: float
    bounds: np.ndarray  # (d, 2)
    pinned: dict[int, float] | None = None


def _ei_at(model: GPModel, incumbent: float, X: np.ndarray) -> np.ndarray:
    mean, var = posterior(model, X)
    return expected_improvement(mean, np.sqrt(var), incumbent)


def optimize_acquisition(query: AcquisitionQuery, rng: np.random.Generator,
                         n_raw: int = N_RAW_SAMPLES,
                         n_restarts: int = N_RESTARTS) -> np.ndarray:
    """Maximize EI over the query box and return the best point found.

    Raw Sobol samples cover the free subspace, the ``n_restarts`` highest-EI
    samples get a bounded L-BFGS-B refinement, and ties between refined
    candidates break toward the earlier raw rank.
    """
    bounds = np.asarray(query.bounds, dtype=float)
    d = bounds.shape[0]
    pinned = dict(query.pinned or {})
    free = [i for i in range(d) if i not in pinned]
    if not free:
        raise ValueError("acquisition needs at least one free dimension")
    if any(not 0 <= i < d for i in pinned):
        raise ValueError("pinned index out of range")

    lo = bounds[free, 0]
    width = bounds[free, 1] - lo
    pin_idx = list(pinned.keys())
    pin_vals = np.array([pinned[i] for i in pin_idx])

    def assemble(Z: np.ndarray) -> np.ndarray:
        """Unit-cube free coordinates -> full points in original units."""
        pts = np.empty((Z.shape[0], d))
        pts[:, free] = lo + np.clip(Z, 0.0, 1.0) * width
        if pin_idx:
            pts[:, pin_idx] = pin_vals
        return pts

    sampler = qmc.Sobol(d=len(free), scramble=True, seed=int(rng.integers(2 ** 63)))
    m = max(1, int(math.ceil(math.log2(n_raw))))
    Z_raw = sampler.random_base2(m)[:n_raw]
    ei_raw = _ei_at(query.model, query.incumbent, assemble(Z_raw))
    order = np.argsort(-ei_raw, kind="stable")[:n_restarts]

    def neg_ei_and_grad(z: np.ndarray) -> tuple[float, np.ndarray]:
        f = len(free)
        stencil = np.tile(z, (2 * f + 1, 1))
        for j in range(f):
            stencil[2 * j + 1, j] += FD_STEP
            stencil[2 * j + 2, j] -= FD_STEP
        ei = _ei_at(query.model, query.incumbent, assemble(stencil))
        grad = (ei[1::2] - ei[2::2]) / (2.0 * FD_STEP)
        return -float(ei[0]), -grad

    best_z = Z_raw[order[0]]
    best_ei = -np.inf
    for idx in order:
        res = minimize(neg_ei_and_grad, Z_raw[idx], jac=True, method="L-BFGS-B",
                       bounds=[(0.0, 1.0)] * len(free),
                       options={"maxiter": REFINE_MAXITER})
        z = np.clip(res.x, 0.0, 1.0)
        if not np.all(np.isfinite(z)):
            z = Z_raw[idx]
        ei_val = float(_ei_at(query.model, query.incumbent, assemble(z[None, :]))[0])
        if ei_val > best_ei:
            best_ei = ei_val
            best_z = z
    return assemble(best_z[None, :])[0]
