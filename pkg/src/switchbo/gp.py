"""Gaussian process regression with a Matern 5/2 ARD kernel.

Inputs are normalized to the unit hypercube using the dataset's domain
bounds and targets are standardized to zero mean / unit variance before
fitting, so kernel hyperparameters live in normalized space. Fitting
maximizes the log marginal likelihood with a multi-start L-BFGS-B search
in log-parameter space using analytic gradients.

A fitted :class:`GPModel` is immutable and safe to query from multiple
threads; fitting itself is single-threaded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.linalg.lapack import dpotri
from scipy.optimize import minimize

SQRT5 = math.sqrt(5.0)
LOG2PI = math.log(2.0 * math.pi)

JITTER_START = 1e-8
JITTER_MAX = 1e-4

# L-BFGS-B box for the hyperparameter search, in normalized input /
# standardized target space.
LENGTHSCALE_BOUNDS = (1e-3, 1e3)
SIGNAL_BOUNDS = (1e-4, 1e4)
NOISE_BOUNDS = (1e-8, 1e-1)


class InsufficientDataError(ValueError):
    """Raised when fitting is attempted with fewer than 2 distinct points."""


class FactorizationError(RuntimeError):
    """Raised when the covariance stays non-positive-definite after jitter
    escalation."""


@dataclass(frozen=True)
class KernelParams:
    """ARD Matern 5/2 hyperparameters: one lengthscale per input dimension."""

    lengthscales: np.ndarray
    signal_variance: float
    noise_variance: float

    def __post_init__(self):
        object.__setattr__(self, "lengthscales",
                           np.atleast_1d(np.asarray(self.lengthscales, dtype=float)))
        if np.any(self.lengthscales <= 0):
            raise ValueError("lengthscales must be strictly positive")
        if self.signal_variance <= 0:
            raise ValueError("signal_variance must be strictly positive")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be nonnegative")


@dataclass(frozen=True)
class Dataset:
    """Training data plus the box bounds used for input normalization."""

    X: np.ndarray       # (n, d)
    y: np.ndarray       # (n,)
    bounds: np.ndarray  # (d, 2)

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        bounds = np.asarray(self.bounds, dtype=float)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "bounds", bounds)
        if X.shape[0] < 1:
            raise ValueError("dataset needs at least one point")
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y row counts differ")
        if bounds.shape != (X.shape[1], 2):
            raise ValueError(f"bounds shape {bounds.shape} does not match d={X.shape[1]}")
        if np.any(bounds[:, 1] <= bounds[:, 0]):
            raise ValueError("each bound must satisfy lo < hi")
        width = bounds[:, 1] - bounds[:, 0]
        eps = 1e-9 * width
        if np.any(X < bounds[:, 0] - eps) or np.any(X > bounds[:, 1] + eps):
            raise ValueError("dataset contains points outside the domain bounds")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def normalized(self) -> np.ndarray:
        lo = self.bounds[:, 0]
        width = self.bounds[:, 1] - self.bounds[:, 0]
        return (self.X - lo) / width

    def append(self, x: np.ndarray, y_val: float) -> "Dataset":
        return Dataset(X=np.vstack([self.X, np.asarray(x, dtype=float)]),
                       y=np.append(self.y, y_val), bounds=self.bounds)


def matern52_ard(a, b, params: KernelParams) -> float:
    """Covariance between two points: sf2 * (1 + r*sqrt5 + 5r^2/3) * exp(-r*sqrt5)
    with r^2 the lengthscale-weighted squared distance."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape or a.shape != params.lengthscales.shape:
        raise ValueError(
            f"dimension mismatch: a {a.shape}, b {b.shape}, "
            f"lengthscales {params.lengthscales.shape}")
    r2 = float(np.sum(((a - b) / params.lengthscales) ** 2))
    r = math.sqrt(r2)
    return params.signal_variance * (1.0 + SQRT5 * r + 5.0 * r2 / 3.0) * math.exp(-SQRT5 * r)


def _cross_r2(A: np.ndarray, B: np.ndarray, lengthscales: np.ndarray) -> np.ndarray:
    """Lengthscale-weighted squared distances between row sets, (n, m)."""
    As = A / lengthscales
    Bs = B / lengthscales
    r2 = (np.sum(As * As, axis=1)[:, None] + np.sum(Bs * Bs, axis=1)[None, :]
          - 2.0 * As @ Bs.T)
    return np.maximum(r2, 0.0)


def _kernel_from_r2(r2: np.ndarray, signal_variance: float) -> np.ndarray:
    r = np.sqrt(r2)
    return signal_variance * (1.0 + SQRT5 * r + (5.0 / 3.0) * r2) * np.exp(-SQRT5 * r)


def _standardize(y: np.ndarray) -> tuple[np.ndarray, float, float]:
    mean = float(np.mean(y))
    std = float(np.std(y))
    if std < 1e-12:
        return np.zeros_like(y), mean, 1.0
    return (y - mean) / std, mean, std


@dataclass(frozen=True)
class GPModel:
    """A fitted GP: factored covariance plus standardization constants.

    ``chol`` is the lower Cholesky factor of K + (noise + jitter) I built on
    normalized inputs / standardized targets, and ``alpha`` solves that
    system against the standardized targets.
    """

    dataset: Dataset
    params: KernelParams
    chol: np.ndarray
    alpha: np.ndarray
    target_mean: float
    target_std: float
    jitter: float
    x_norm: np.ndarray

    @property
    def incumbent(self) -> float:
        return float(np.max(self.dataset.y))

    @property
    def prior_variance(self) -> float:
        """Far-field predictive variance on the original target scale."""
        return ((self.params.signal_variance + self.params.noise_variance)
                * self.target_std ** 2)


def _factorize(K: np.ndarray, noise: float) -> tuple[np.ndarray, float]:
    """Cholesky of K + (noise + jitter) I, escalating jitter x10 on failure."""
    n = K.shape[0]
    jitter = JITTER_START
    while jitter <= JITTER_MAX:
        try:
            L = cholesky(K + (noise + jitter) * np.eye(n), lower=True, check_finite=False)
            return L, jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise FactorizationError(
        f"covariance not positive definite after jitter escalation to {JITTER_MAX:g}")


def log_marginal_likelihood(dataset: Dataset, params: KernelParams) -> float:
    """LML of the standardized targets under the kernel, including the
    factorization jitter on the diagonal."""
    if dataset.d != params.lengthscales.shape[0]:
        raise ValueError("params dimensionality does not match dataset")
    Xn = dataset.normalized()
    y_std, _, _ = _standardize(dataset.y)
    K = _kernel_from_r2(_cross_r2(Xn, Xn, params.lengthscales), params.signal_variance)
    L, _ = _factorize(K, params.noise_variance)
    alpha = cho_solve((L, True), y_std, check_finite=False)
    n = dataset.n
    return float(-0.5 * y_std @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * LOG2PI)


def _nll_and_grad(theta: np.ndarray, sqdiffs: np.ndarray, y_std: np.ndarray,
                  jitter: float) -> tuple[float, np.ndarray]:
    """Negative LML and its gradient w.r.t. log-parameters.

    ``theta`` is (log l_1..l_d, log sf2, log sn2); ``sqdiffs`` holds the
    per-dimension squared coordinate differences, shape (d, n, n).
    """
    d = sqdiffs.shape[0]
    n = y_std.shape[0]
    ell2 = np.exp(2.0 * theta[:d])
    sf2 = math.exp(theta[d])
    sn2 = math.exp(theta[d + 1])
    diag_shift = sn2 + jitter

    r2 = np.tensordot(1.0 / ell2, sqdiffs, axes=1)
    r = np.sqrt(np.maximum(r2, 0.0))
    E = np.exp(-SQRT5 * r)
    K = sf2 * (1.0 + SQRT5 * r + (5.0 / 3.0) * r2) * E
    K.flat[:: n + 1] += diag_shift  # K is now K_y; recover tr(W K) below
    try:
        L = cholesky(K, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return 1e25, np.zeros_like(theta)

    alpha = cho_solve((L, True), y_std, check_finite=False)
    nll = 0.5 * y_std @ alpha + np.sum(np.log(np.diag(L))) + 0.5 * n * LOG2PI

    Kinv, info = dpotri(L, lower=1)  # in n^3/3, lower triangle only
    if info != 0:
        return 1e25, np.zeros_like(theta)
    Kinv = Kinv + Kinv.T
    Kinv.flat[:: n + 1] *= 0.5
    W = np.outer(alpha, alpha)
    W -= Kinv

    grad = np.empty_like(theta)
    # dK/ds * ds/dlog(l_i), with s = r^2: dK/ds = -(5/6) sf2 (1 + sqrt5 r) E
    C = (5.0 / 3.0) * sf2 * (1.0 + SQRT5 * r) * E
    C *= W
    for i in range(d):
        grad[i] = 0.5 * np.sum(C * sqdiffs[i]) / ell2[i]
    tr_w = np.trace(W)
    grad[d] = 0.5 * (np.sum(W * K) - diag_shift * tr_w)
    grad[d + 1] = 0.5 * sn2 * tr_w
    return float(nll), -grad


def build_model(dataset: Dataset, params: KernelParams) -> GPModel:
    """Construct a queryable model at fixed hyperparameters."""
    if dataset.d != params.lengthscales.shape[0]:
        raise ValueError("params dimensionality does not match dataset")
    Xn = dataset.normalized()
    y_std, mean, std = _standardize(dataset.y)
    K = _kernel_from_r2(_cross_r2(Xn, Xn, params.lengthscales), params.signal_variance)
    L, jitter = _factorize(K, params.noise_variance)
    alpha = cho_solve((L, True), y_std, check_finite=False)
    return GPModel(dataset=dataset, params=params, chol=L, alpha=alpha,
                   target_mean=mean, target_std=std, jitter=jitter, x_norm=Xn)


# Restart initializations are drawn from a central sub-range of the search
# box; wide draws mostly start in flat likelihood regions and waste restarts.
_INIT_LENGTHSCALE = (0.05, 2.0)
_INIT_SIGNAL = (0.1, 10.0)
_INIT_NOISE = 1e-6


def fit(dataset: Dataset, rng: np.random.Generator | None = None,
        restarts: int = 8, maxiter: int = 40,
        warm_start: KernelParams | None = None) -> GPModel:
    """Fit hyperparameters by multi-start L-BFGS-B on the log marginal
    likelihood and return the factored model.

    ``warm_start`` adds one extra start at the given parameters (useful when
    refitting after a single new observation). Constant targets
    short-circuit to a fixed small-signal model.
    """
    if dataset.n < 2 or np.unique(dataset.X, axis=0).shape[0] < 2:
        raise InsufficientDataError("fit requires at least 2 distinct points")
    if rng is None:
        rng = np.random.default_rng(0)

    d = dataset.d
    y_std, _, _ = _standardize(dataset.y)
    if np.all(y_std == 0.0):
        # Degenerate targets: nothing to learn, keep a small prior.
        params = KernelParams(lengthscales=np.ones(d), signal_variance=1e-4,
                              noise_variance=_INIT_NOISE)
        return build_model(dataset, params)

    Xn = dataset.normalized()
    diffs = Xn[:, None, :] - Xn[None, :, :]
    sqdiffs = np.ascontiguousarray(np.moveaxis(diffs * diffs, 2, 0))

    lo = np.log([LENGTHSCALE_BOUNDS[0]] * d + [SIGNAL_BOUNDS[0], NOISE_BOUNDS[0]])
    hi = np.log([LENGTHSCALE_BOUNDS[1]] * d + [SIGNAL_BOUNDS[1], NOISE_BOUNDS[1]])
    box = list(zip(lo, hi))

    starts = []
    for _ in range(restarts):
        theta0 = np.empty(d + 2)
        theta0[:d] = rng.uniform(math.log(_INIT_LENGTHSCALE[0]),
                                 math.log(_INIT_LENGTHSCALE[1]), size=d)
        theta0[d] = rng.uniform(math.log(_INIT_SIGNAL[0]), math.log(_INIT_SIGNAL[1]))
        theta0[d + 1] = math.log(_INIT_NOISE)
        starts.append(theta0)
    if warm_start is not None and warm_start.lengthscales.shape[0] == d:
        theta0 = np.concatenate([
            np.log(warm_start.lengthscales),
            [math.log(warm_start.signal_variance),
             math.log(max(warm_start.noise_variance, NOISE_BOUNDS[0]))]])
        starts.append(np.clip(theta0, lo, hi))

    best_theta = None
    best_nll = np.inf
    for theta0 in starts:
        res = minimize(_nll_and_grad, theta0, args=(sqdiffs, y_std, JITTER_START),
                       jac=True, method="L-BFGS-B", bounds=box,
                       options={"maxiter": maxiter, "ftol": 1e-7, "gtol": 1e-4})
        if res.fun < best_nll:
            best_nll = res.fun
            best_theta = res.x
    if best_theta is None or not np.isfinite(best_nll):
        raise FactorizationError("hyperparameter search failed on every restart")

    params = KernelParams(lengthscales=np.exp(best_theta[:d]),
                          signal_variance=math.exp(best_theta[d]),
                          noise_variance=math.exp(best_theta[d + 1]))
    return build_model(dataset, params)


def posterior(model: GPModel, x) -> tuple[float, float] | tuple[np.ndarray, np.ndarray]:
    """Predictive mean and variance on the original target scale.

    Accepts a single point (d,) or a batch (m, d); variance includes the
    fitted noise, so it reverts to signal + noise far from the data.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    Xq = np.atleast_2d(x)
    if Xq.shape[1] != model.dataset.d:
        raise ValueError(f"query has {Xq.shape[1]} dims, expected {model.dataset.d}")
    lo = model.dataset.bounds[:, 0]
    width = model.dataset.bounds[:, 1] - lo
    Xqn = (Xq - lo) / width

    p = model.params
    Ks = _kernel_from_r2(_cross_r2(model.x_norm, Xqn, p.lengthscales), p.signal_variance)
    mean_std = Ks.T @ model.alpha
    v = solve_triangular(model.chol, Ks, lower=True, check_finite=False)
    var_std = (p.signal_variance + p.noise_variance) - np.sum(v * v, axis=0)
    var_std = np.maximum(var_std, 0.0)

    mean = model.target_mean + model.target_std * mean_std
    var = model.target_std ** 2 * var_std
    if single:
        return float(mean[0]), float(var[0])
    return mean, var
