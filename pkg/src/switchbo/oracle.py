"""Brute-force determination of the best attainable (maximum) values.

Five of the benchmark functions are exactly zero at an analytic point
inside their domain. Michalewicz and Schwefel have no closed form, but
both are sums of one-dimensional terms, so their maxima are found by a
dense per-dimension grid (1e6 points) followed by a bounded scalar
refinement; for d=2 a full two-dimensional grid cross-checks the result.

The output file is read by :mod:`switchbo.problems` at startup.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import minimize_scalar

from . import problems

GRID_1D = 1_000_001
ANALYTIC_ZERO = ("ackley", "griewank", "levy", "rosenbrock", "salomon")


def _max_1d(term, lo: float, hi: float) -> float:
    """Dense-grid maximum of a scalar term, polished by bounded search."""
    x = np.linspace(lo, hi, GRID_1D)
    vals = term(x)
    i = int(np.argmax(vals))
    span = (hi - lo) / (GRID_1D - 1)
    res = minimize_scalar(lambda t: -term(np.asarray(t)),
                          bounds=(max(lo, x[i] - 2 * span), min(hi, x[i] + 2 * span)),
                          method="bounded", options={"xatol": 1e-13})
    return max(float(vals[i]), float(-res.fun))


def michalewicz_max(d: int) -> float:
    """Sum of per-dimension maxima of sin(x) * sin(i x^2 / pi)^20 on [0, pi]."""
    lo, hi = problems.DOMAINS["michalewicz"]
    total = 0.0
    for i in range(1, d + 1):
        total += _max_1d(lambda t, i=i: np.sin(t) * np.sin(i * t * t / np.pi) ** 20, lo, hi)
    return total


def schwefel_max(d: int) -> float:
    """d times the per-dimension maximum of x sin(sqrt|x|), minus the offset."""
    lo, hi = problems.DOMAINS["schwefel"]
    best = _max_1d(lambda t: t * np.sin(np.sqrt(np.abs(t))), lo, hi)
    return d * best - problems.SCHWEFEL_OFFSET * d


def _grid_check_2d(name: str, expected: float, n: int = 1000) -> None:
    """Full 2-d grid sanity check: no grid point may beat the separable
    optimum and the grid best must come close."""
    lo, hi = problems.DOMAINS[name]
    axis = np.linspace(lo, hi, n)
    gx, gy = np.meshgrid(axis, axis)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    vals = -problems.FUNCTIONS[name](pts)
    best = float(np.max(vals))
    if best > expected + 1e-9:
        raise RuntimeError(f"{name} 2-d grid beats the separable optimum: "
                           f"{best} > {expected}")
    if best < expected - 0.05:
        raise RuntimeError(f"{name} 2-d grid missed the optimum: {best} vs {expected}")


def compute_y_star(name: str, d: int) -> float:
    if name in ANALYTIC_ZERO:
        return 0.0
    if name == "michalewicz":
        return michalewicz_max(d)
    if name == "schwefel":
        return schwefel_max(d)
    raise ValueError(f"unknown function {name!r}")


def generate_table(dims=(2, 3, 4), check: bool = True) -> dict[tuple[str, int], float]:
    table = {}
    for name in sorted(problems.FUNCTIONS):
        for d in dims:
            table[(name, d)] = compute_y_star(name, d)
    if check:
        _grid_check_2d("michalewicz", table[("michalewicz", 2)])
        _grid_check_2d("schwefel", table[("schwefel", 2)])
    return table


def write_constants(path, dims=(2, 3, 4), check: bool = True) -> None:
    table = generate_table(dims=dims, check=check)
    lines = ["# Best attainable (maximum) value per function and dimension.",
             "# Regenerate with: switchbo oracle"]
    for (name, d), value in sorted(table.items()):
        lines.append(f"{name},{d} = {value!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
