"""Scalable benchmark functions with cheap/costly dimension assignments.

Seven classic test functions (Ackley, Griewank, Levy, Michalewicz,
Rosenbrock, Salomon, Schwefel) in their canonical minimization forms,
negated so that everything downstream maximizes. Domains for Ackley,
Griewank and Salomon are cropped so the optimum is off-center.

Known optima: five of the functions are exactly zero (after negation) at
an analytic point; Michalewicz and Schwefel optima come from a brute-force
oracle whose output is checked into ``data/y_star.txt`` (regenerate with
``switchbo oracle``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .gp import Dataset

# Domain per dimension, [lo, hi], replicated across dimensions.
DOMAINS = {
    "ackley": (-15.0, 30.0),
    "griewank": (-300.0, 600.0),
    "levy": (-10.0, 10.0),
    "michalewicz": (0.0, math.pi),
    "rosenbrock": (-5.0, 10.0),
    "salomon": (-50.0, 100.0),
    "schwefel": (-500.0, 500.0),
}

SCHWEFEL_OFFSET = 418.9829  # per-dimension constant putting the minimum near 0


def ackley(x) -> np.ndarray:
    """Ackley (a=20, b=0.2, c=2*pi); minimum 0 at the origin."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    s1 = np.sqrt(np.sum(x * x, axis=-1) / d)
    s2 = np.mean(np.cos(2.0 * np.pi * x), axis=-1)
    return -20.0 * np.exp(-0.2 * s1) - np.exp(s2) + 20.0 + math.e


def griewank(x) -> np.ndarray:
    """Griewank; minimum 0 at the origin."""
    x = np.asarray(x, dtype=float)
    i = np.arange(1, x.shape[-1] + 1, dtype=float)
    return np.sum(x * x, axis=-1) / 4000.0 - np.prod(np.cos(x / np.sqrt(i)), axis=-1) + 1.0


def levy(x) -> np.ndarray:
    """Levy (with the standard w-substitution); minimum 0 at all-ones."""
    x = np.asarray(x, dtype=float)
    w = 1.0 + (x - 1.0) / 4.0
    head = np.sin(np.pi * w[..., 0]) ** 2
    wi = w[..., :-1]
    mid = np.sum((wi - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * wi + 1.0) ** 2), axis=-1)
    wd = w[..., -1]
    tail = (wd - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * wd) ** 2)
    return head + mid + tail


def michalewicz(x) -> np.ndarray:
    """Michalewicz (m=10); steep multimodal valleys, no closed-form optimum."""
    x = np.asarray(x, dtype=float)
    i = np.arange(1, x.shape[-1] + 1, dtype=float)
    return -np.sum(np.sin(x) * np.sin(i * x * x / np.pi) ** 20, axis=-1)


def rosenbrock(x) -> np.ndarray:
    """Rosenbrock; minimum 0 at all-ones."""
    x = np.asarray(x, dtype=float)
    a = x[..., :-1]
    b = x[..., 1:]
    return np.sum(100.0 * (b - a * a) ** 2 + (1.0 - a) ** 2, axis=-1)


def salomon(x) -> np.ndarray:
    """Salomon; minimum 0 at the origin."""
    x = np.asarray(x, dtype=float)
    norm = np.sqrt(np.sum(x * x, axis=-1))
    return 1.0 - np.cos(2.0 * np.pi * norm) + 0.1 * norm


def schwefel(x) -> np.ndarray:
    """Schwefel with the 418.9829*d offset; minimum near 0 at ~420.9687."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    return SCHWEFEL_OFFSET * d - np.sum(x * np.sin(np.sqrt(np.abs(x))), axis=-1)


FUNCTIONS = {
    "ackley": ackley,
    "griewank": griewank,
    "levy": levy,
    "michalewicz": michalewicz,
    "rosenbrock": rosenbrock,
    "salomon": salomon,
    "schwefel": schwefel,
}

# Analytic optimizer of the minimization form, where one exists.
_X_STAR = {
    "ackley": 0.0,
    "griewank": 0.0,
    "levy": 1.0,
    "rosenbrock": 1.0,
    "salomon": 0.0,
    "schwefel": 420.9687480809796,  # numeric, not analytic; per-dim
}


def load_y_star_table(path=None) -> dict[tuple[str, int], float]:
    """Read the ``function,dimension = y_star`` constants file."""
    if path is None:
        text = resources.files(__package__).joinpath("data/y_star.txt").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    table: dict[tuple[str, int], float] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, value = line.split("=")
        name, dim = key.strip().split(",")
        table[(name.strip(), int(dim))] = float(value)
    return table


_Y_STAR_CACHE: dict[tuple[str, int], float] | None = None


def y_star(name: str, d: int) -> float:
    """Known optimal (maximum) value of the negated function."""
    global _Y_STAR_CACHE
    if _Y_STAR_CACHE is None:
        _Y_STAR_CACHE = load_y_star_table()
    try:
        return _Y_STAR_CACHE[(name, d)]
    except KeyError:
        raise KeyError(f"no y_star constant for ({name}, d={d}); run the oracle tool") from None


@dataclass(frozen=True)
class Problem:
    """A benchmark instance: function, box domain, and the costly index set."""

    name: str
    d: int
    bounds: np.ndarray  # (d, 2)
    costly_indices: tuple[int, ...]
    y_star: float
    x_star: np.ndarray | None = None
    cheap_indices: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "bounds", np.asarray(self.bounds, dtype=float))
        costly = tuple(sorted(self.costly_indices))
        object.__setattr__(self, "costly_indices", costly)
        cheap = tuple(i for i in range(self.d) if i not in costly)
        object.__setattr__(self, "cheap_indices", cheap)
        if not all(0 <= i < self.d for i in costly):
            raise ValueError(f"costly indices {costly} out of range for d={self.d}")

    @property
    def d_costly(self) -> int:
        return len(self.costly_indices)

    @property
    def d_cheap(self) -> int:
        return len(self.cheap_indices)

    def costly_part(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float)[..., list(self.costly_indices)]

    def evaluate(self, x) -> float | np.ndarray:
        """Maximization value of the function; raises on out-of-bounds input."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise ValueError(f"point has {x.shape[-1]} dims, expected {self.d}")
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        if np.any(x < lo) or np.any(x > hi):
            raise ValueError("point outside the problem domain")
        val = -FUNCTIONS[self.name](x)
        if np.max(val) > self.y_star + 1e-9:
            raise RuntimeError(
                f"{self.name}: observed {np.max(val)} above y_star {self.y_star}; "
                "the constants file is stale, rerun the oracle")
        return float(val) if val.ndim == 0 else val


def make_configuration(name: str, d: int, costly_count: int, rng: np.random.Generator) -> Problem:
    """Build a problem with ``costly_count`` costly dimensions drawn uniformly.

    At least one cheap dimension is required, so ``1 <= costly_count <= d-1``.
    """
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}; choose from {sorted(FUNCTIONS)}")
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if not 1 <= costly_count <= d - 1:
        raise ValueError(f"costly_count must be in [1, d-1], got {costly_count} for d={d}")
    lo, hi = DOMAINS[name]
    bounds = np.tile([lo, hi], (d, 1))
    costly = tuple(sorted(rng.choice(d, size=costly_count, replace=False).tolist()))
    xs = _X_STAR.get(name)
    x_star = None if xs is None else np.full(d, xs)
    return Problem(name=name, d=d, bounds=bounds, costly_indices=costly,
                   y_star=y_star(name, d), x_star=x_star)


def uniform_design(problem: Problem, n: int, rng: np.random.Generator) -> Dataset:
    """``n`` uniform points over the full box, evaluated."""
    lo, hi = problem.bounds[:, 0], problem.bounds[:, 1]
    X = lo + rng.uniform(size=(n, problem.d)) * (hi - lo)
    y = np.array([problem.evaluate(x) for x in X])
    return Dataset(X=X, y=y, bounds=problem.bounds)


def nested_design(problem: Problem, n_setups: int, per_setup: int,
                  rng: np.random.Generator, max_points: int = 60) -> Dataset:
    """Initialization for the nested policy: ``n_setups`` distinct costly
    sub-vectors, each evaluated with ``per_setup`` fresh cheap sub-vectors.

    Point ordering groups the setups in blocks, so the last point carries
    the final setup.
    """
    if n_setups < 2:
        raise ValueError("nested initialization needs n_setups >= 2")
    if per_setup < 1:
        raise ValueError("per_setup must be >= 1")
    if n_setups * per_setup > max_points:
        raise ValueError(
            f"nested design of {n_setups * per_setup} points exceeds cap {max_points}")
    lo, hi = problem.bounds[:, 0], problem.bounds[:, 1]
    costly = list(problem.costly_indices)
    cheap = list(problem.cheap_indices)
    setups = lo[costly] + rng.uniform(size=(n_setups, len(costly))) * (hi[costly] - lo[costly])
    X = np.empty((n_setups * per_setup, problem.d))
    row = 0
    for s in range(n_setups):
        for _ in range(per_setup):
            X[row, cheap] = lo[cheap] + rng.uniform(size=len(cheap)) * (hi[cheap] - lo[cheap])
            X[row, costly] = setups[s]
            row += 1
    y = np.array([problem.evaluate(x) for x in X])
    return Dataset(X=X, y=y, bounds=problem.bounds)


def initial_design(problem: Problem, policy_kind: str, rng: np.random.Generator,
                   n_setups: int = 3, per_setup: int = 1, n_init: int | None = None,
                   max_points: int = 60) -> Dataset:
    """Initialization dataset for a run.

    Nested policies get the blocked setup/cheap design; everything else gets
    ``n_init`` (default ``3*d``) uniform points. The caller seeds the budget
    ledger with the costly vector of the last point.
    """
    if policy_kind == "nested":
        return nested_design(problem, n_setups, per_setup, rng, max_points=max_points)
    if n_init is None:
        n_init = 3 * problem.d
    return uniform_design(problem, n_init, rng)
