"""Experiment orchestration: config files, seeded sweeps, CSV outputs.

A sweep is a grid of cells (problem x switch cost x policy x run index).
Every cell derives its rngs from the base seed and its grid coordinates
through ``numpy.random.SeedSequence`` spawn keys, so results never depend
on execution order:

* costly-assignment rng:  spawn key (0, problem_idx, run_idx)
* shared-design rng:      spawn key (1, problem_idx, run_idx)
* policy-run rng:         spawn key (2, problem_idx, cost_idx, policy_idx, run_idx)

The shared initialization design is independent of the policy and the
switch cost, which keeps the GAP baseline y0 identical for all policies
on the same (problem, run). Nested policies build their own blocked
design; the shared design's y0 is recorded alongside for comparability.

Outputs (written atomically, canonically ordered, floats via ``repr``) are
byte-identical for identical (config, seed) regardless of worker count.
"""
from __future__ import annotations

import concurrent.futures
import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import __version__
from .metrics import aggregate, gap as gap_of
from .policies import (EipuCool, Nested, Periodic, PolicyConfig, PReuse,
                       VanillaBO, policy_kind, policy_params_str, run_policy)
from .problems import FUNCTIONS, make_configuration, uniform_design

DEFAULT_SWITCH_COSTS = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)

TRACE_COLUMNS = ["run_id", "policy", "problem", "d", "costly_indices", "switch_cost",
                 "t", "phase", "is_switch", "degraded", "step_cost", "cum_cost",
                 "y", "best_y"]
SUMMARY_COLUMNS = ["run_id", "policy", "problem", "d", "costly_indices", "switch_cost",
                   "policy_params", "y0", "y_star", "best_y", "gap",
                   "n_switches", "n_reuses", "final_cost"]


class ConfigError(ValueError):
    """A config file problem, reported with the offending field path."""


class SchemaError(ValueError):
    """A results file is missing an expected column."""


@dataclass(frozen=True)
class ExperimentConfig:
    problems: tuple[tuple[str, int, int], ...]      # (function, d, costly_count)
    policies: tuple[PolicyConfig, ...]
    switch_costs: tuple[float, ...] = (2.0, 4.0, 8.0, 16.0, 32.0)
    runs_per_cell: int = 20
    base_seed: int = 0
    n_multiplier: int = 10
    output_dir: str = "results"
    fit_restarts: int = 8

    def __post_init__(self):
        if self.runs_per_cell < 1:
            raise ConfigError("runs_per_cell must be >= 1")
        if self.n_multiplier < 1:
            raise ConfigError("n_multiplier must be >= 1")


@dataclass(frozen=True)
class Cell:
    problem_idx: int
    cost_idx: int
    policy_idx: int
    run_idx: int


def _check_keys(obj: dict, allowed: set[str], path: str) -> None:
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")


def _as_list(value) -> list:
    return value if isinstance(value, list) else [value]


def _expand_policy(spec: dict, path: str) -> list[PolicyConfig]:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"{path}: policy entries need a 'kind'")
    kind = spec["kind"]
    if kind == "vanilla":
        _check_keys(spec, {"kind"}, path)
        return [VanillaBO()]
    if kind == "eipu":
        _check_keys(spec, {"kind"}, path)
        return [EipuCool()]
    if kind == "preuse":
        _check_keys(spec, {"kind", "p"}, path)
        if "p" not in spec:
            raise ConfigError(f"{path}.p: required for preuse")
        return [PReuse(p=float(p)) for p in _as_list(spec["p"])]
    if kind == "periodic":
        _check_keys(spec, {"kind", "k"}, path)
        if "k" not in spec:
            raise ConfigError(f"{path}.k: required for periodic")
        return [Periodic(k=int(k)) for k in _as_list(spec["k"])]
    if kind == "nested":
        _check_keys(spec, {"kind", "n", "k"}, path)
        if "k" not in spec:
            raise ConfigError(f"{path}.k: required for nested")
        ns = [int(n) for n in _as_list(spec.get("n", 3))]
        ks = [int(k) for k in _as_list(spec["k"])]
        return [Nested(n_setups=n, k=k) for n in ns for k in ks]
    raise ConfigError(f"{path}.kind: unknown policy kind {kind!r}")


def config_from_dict(raw: dict) -> ExperimentConfig:
    allowed = {"problems", "policies", "switch_costs", "runs_per_cell", "base_seed",
               "n_multiplier", "output_dir", "fit_restarts", "allow_any_switch_cost"}
    _check_keys(raw, allowed, "config")
    for required in ("problems", "policies"):
        if required not in raw:
            raise ConfigError(f"config.{required}: required")

    problems = []
    for i, entry in enumerate(raw["problems"]):
        path = f"config.problems[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{path}: must be an object")
        _check_keys(entry, {"function", "d", "costly"}, path)
        try:
            name, d, costly = entry["function"], int(entry["d"]), int(entry["costly"])
        except KeyError as exc:
            raise ConfigError(f"{path}.{exc.args[0]}: required") from None
        if name not in FUNCTIONS:
            raise ConfigError(f"{path}.function: unknown function {name!r}")
        if not 1 <= costly <= d - 1:
            raise ConfigError(f"{path}.costly: must be in [1, d-1]")
        problems.append((name, d, costly))

    policies: list[PolicyConfig] = []
    for i, spec in enumerate(raw["policies"]):
        policies.extend(_expand_policy(spec, f"config.policies[{i}]"))

    costs = tuple(float(c) for c in raw.get("switch_costs", (2, 4, 8, 16, 32)))
    if not raw.get("allow_any_switch_cost", False):
        bad = [c for c in costs if c not in DEFAULT_SWITCH_COSTS]
        if bad:
            raise ConfigError(
                f"config.switch_costs: {bad} outside the default set "
                f"{sorted(DEFAULT_SWITCH_COSTS)}; set allow_any_switch_cost to override")
    if any(c < 1 for c in costs):
        raise ConfigError("config.switch_costs: values must be >= 1")

    return ExperimentConfig(
        problems=tuple(problems), policies=tuple(policies), switch_costs=costs,
        runs_per_cell=int(raw.get("runs_per_cell", 20)),
        base_seed=int(raw.get("base_seed", 0)),
        n_multiplier=int(raw.get("n_multiplier", 10)),
        output_dir=str(raw.get("output_dir", "results")),
        fit_restarts=int(raw.get("fit_restarts", 8)))


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return config_from_dict(raw)


def enumerate_cells(config: ExperimentConfig) -> list[Cell]:
    """Canonical cell order: problem, then cost, then policy, then run."""
    return [Cell(pi, ci, li, r)
            for pi in range(len(config.problems))
            for ci in range(len(config.switch_costs))
            for li in range(len(config.policies))
            for r in range(config.runs_per_cell)]


def _policy_slug(policy: PolicyConfig) -> str:
    params = policy_params_str(policy).replace("=", "").replace(";", "_")
    kind = policy_kind(policy)
    return f"{kind}_{params}" if params else kind


def _run_id(config: ExperimentConfig, cell: Cell) -> str:
    name, d, costly = config.problems[cell.problem_idx]
    cost = config.switch_costs[cell.cost_idx]
    slug = _policy_slug(config.policies[cell.policy_idx])
    return f"{name}_d{d}_cc{costly}_cs{cost:g}_{slug}_r{cell.run_idx:03d}"


def _rng(base_seed: int, spawn_key: tuple[int, ...]) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=spawn_key))


def run_cell(config: ExperimentConfig, cell: Cell) -> dict:
    """Execute one cell and return its trace and summary rows."""
    name, d, costly_count = config.problems[cell.problem_idx]
    c_switch = config.switch_costs[cell.cost_idx]
    policy = config.policies[cell.policy_idx]

    assign_rng = _rng(config.base_seed, (0, cell.problem_idx, cell.run_idx))
    problem = make_configuration(name, d, costly_count, assign_rng)

    design_rng = _rng(config.base_seed, (1, cell.problem_idx, cell.run_idx))
    shared = uniform_design(problem, 3 * d, design_rng)

    run_rng = _rng(config.base_seed,
                   (2, cell.problem_idx, cell.cost_idx, cell.policy_idx, cell.run_idx))
    nested = isinstance(policy, Nested)
    trace = run_policy(problem, policy, c_switch, rng=run_rng,
                       n_multiplier=config.n_multiplier,
                       init=None if nested else shared,
                       fit_restarts=config.fit_restarts,
                       shared_y0=float(np.max(shared.y)) if nested else None)

    run_id = _run_id(config, cell)
    costly_str = "|".join(str(i) for i in problem.costly_indices)
    trace_rows = []
    for rec in trace.records:
        trace_rows.append([run_id, trace.policy, name, str(d), costly_str,
                           repr(c_switch), str(rec.t), rec.phase,
                           str(int(rec.is_switch)), str(int(rec.degraded)),
                           repr(rec.step_cost), repr(rec.cum_cost),
                           repr(rec.y), repr(rec.best_so_far)])
    summary_row = [run_id, trace.policy, name, str(d), costly_str, repr(c_switch),
                   trace.policy_params, repr(trace.y0), repr(trace.y_star),
                   repr(trace.best_y), repr(gap_of(trace, trace.y_star)),
                   str(trace.n_switches), str(trace.n_reuses), repr(trace.final_cost)]
    meta = {"run_id": run_id, "n_costly_fallbacks": trace.n_costly_fallbacks}
    if trace.shared_y0 is not None:
        meta["shared_y0"] = trace.shared_y0
        meta["own_y0"] = trace.y0
    return {"cell": cell, "trace_rows": trace_rows, "summary_row": summary_row,
            "meta": meta}


def _atomic_write_csv(path: str, header: list[str], rows) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    os.replace(tmp, path)


def _worker(args) -> dict:
    config, cell = args
    return run_cell(config, cell)


def run_sweep(config: ExperimentConfig, jobs: int = 1, out_dir: str | None = None,
              progress=None) -> dict[str, str]:
    """Run every cell and write traces.csv / summary.csv / sweep_meta.json.

    Results are collected per cell and written in canonical order, so the
    files do not depend on ``jobs``. Re-running overwrites atomically.
    """
    out = out_dir or config.output_dir
    os.makedirs(out, exist_ok=True)
    cells = enumerate_cells(config)

    results: list[dict | None] = [None] * len(cells)
    if jobs <= 1:
        for i, cell in enumerate(cells):
            results[i] = run_cell(config, cell)
            if progress:
                progress(i + 1, len(cells))
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_worker, (config, cell)): i
                       for i, cell in enumerate(cells)}
            done = 0
            for fut in concurrent.futures.as_completed(futures):
                results[futures[fut]] = fut.result()
                done += 1
                if progress:
                    progress(done, len(cells))

    trace_rows = []
    summary_rows = []
    run_meta = []
    for res in results:
        assert res is not None
        trace_rows.extend(res["trace_rows"])
        summary_rows.append(res["summary_row"])
        run_meta.append(res["meta"])

    paths = {"traces": os.path.join(out, "traces.csv"),
             "summary": os.path.join(out, "summary.csv"),
             "meta": os.path.join(out, "sweep_meta.json")}
    _atomic_write_csv(paths["traces"], TRACE_COLUMNS, trace_rows)
    _atomic_write_csv(paths["summary"], SUMMARY_COLUMNS, summary_rows)

    meta = {
        "version": __version__,
        "base_seed": config.base_seed,
        "seed_scheme": ("SeedSequence(base_seed, spawn_key=...): assignment (0, problem, run); "
                        "shared design (1, problem, run); "
                        "policy run (2, problem, cost, policy, run)"),
        "n_cells": len(cells),
        "notes": ("nested runs use their own blocked initialization; their summary y0 "
                  "is the blocked design's best, shared_y0 in runs[] is the shared "
                  "design's best"),
        "runs": run_meta,
    }
    tmp = paths["meta"] + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, paths["meta"])
    return paths


def read_summary(results_dir: str) -> list[dict]:
    path = os.path.join(results_dir, "summary.csv")
    if not os.path.exists(path):
        raise SchemaError(f"missing summary file: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in SUMMARY_COLUMNS:
            if col not in header:
                raise SchemaError(f"summary.csv missing column '{col}'")
        return list(reader)


def _group(rows, key_fn) -> dict:
    out: dict = {}
    for row in rows:
        out.setdefault(key_fn(row), []).append(row)
    return out


def _fmt(x: float) -> str:
    return repr(float(x))


def summarize_table2(results_dir: str, out_dir: str | None = None) -> dict[str, str]:
    """Per-(switch cost, problem) comparison of the policy families.

    Tunable families are collapsed to their best configuration by mean
    GAP; the best and second-best family per row are marked. Ties mark
    every tied family; rows order by family name.
    """
    rows = read_summary(results_dir)
    out = out_dir or results_dir
    os.makedirs(out, exist_ok=True)

    by_variant = _group(rows, lambda r: (float(r["switch_cost"]), r["problem"],
                                         r["policy"], r["policy_params"]))
    # Collapse each family to its best-performing parameter choice.
    best_variant: dict[tuple, tuple] = {}
    for (cost, problem, family, params), runs in sorted(by_variant.items()):
        mean, ci, _ = aggregate([float(r["gap"]) for r in runs])
        key = (cost, problem, family)
        cand = (mean, ci, params, len(runs))
        prev = best_variant.get(key)
        if prev is None or cand[0] > prev[0] or (cand[0] == prev[0] and params < prev[2]):
            best_variant[key] = cand

    table_rows = []
    by_cell = _group(list(best_variant.items()), lambda kv: kv[0][:2])
    for (cost, problem), entries in sorted(by_cell.items()):
        entries = sorted(entries, key=lambda kv: kv[0][2])  # family name order
        means = sorted({ent[1][0] for ent in entries}, reverse=True)
        best = means[0]
        second = means[1] if len(means) > 1 else None
        for (c, p, family), (mean, ci, params, n) in entries:
            table_rows.append([_fmt(cost), problem, family, params, str(n),
                               _fmt(mean), _fmt(ci) if not math.isnan(ci) else "",
                               str(int(mean == best)),
                               str(int(second is not None and mean == second))])
    table_path = os.path.join(out, "table2.csv")
    _atomic_write_csv(table_path,
                      ["switch_cost", "problem", "policy", "policy_params", "n_runs",
                       "mean_gap", "ci_halfwidth", "best", "second_best"], table_rows)

    # Mean over problems of each family's best-variant mean, per cost.
    curve: dict[tuple, list[float]] = {}
    for (cost, problem, family), (mean, _, _, _) in best_variant.items():
        curve.setdefault((family, cost), []).append(mean)
    curve_rows = [[family, _fmt(cost), _fmt(sum(v) / len(v))]
                  for (family, cost), v in sorted(curve.items())]
    curve_path = os.path.join(out, "gap_vs_cost.csv")
    _atomic_write_csv(curve_path, ["policy", "cost", "mean_gap"], curve_rows)
    return {"table2": table_path, "gap_vs_cost": curve_path}


def summarize_psweep(results_dir: str, out_dir: str | None = None) -> dict[str, str]:
    """Reuse-probability sweep: mean GAP (+CI) per (p, cost), pooled over
    problems, plus the median best p per cost."""
    rows = [r for r in read_summary(results_dir) if r["policy"] == "preuse"]
    if not rows:
        raise SchemaError("summary.csv has no preuse rows to sweep")
    out = out_dir or results_dir
    os.makedirs(out, exist_ok=True)

    def p_of(row) -> float:
        return float(row["policy_params"].split("=", 1)[1])

    pooled = _group(rows, lambda r: (p_of(r), float(r["switch_cost"])))
    curve_rows = []
    for (p, cost), runs in sorted(pooled.items()):
        mean, ci, _ = aggregate([float(r["gap"]) for r in runs])
        curve_rows.append([_fmt(p), _fmt(cost), _fmt(mean),
                           _fmt(ci) if not math.isnan(ci) else ""])
    curve_path = os.path.join(out, "psweep_curve.csv")
    _atomic_write_csv(curve_path, ["p", "switch_cost", "mean_gap", "ci_halfwidth"],
                      curve_rows)

    # Best p per (problem, costly setting, cost); median across settings.
    per_setting = _group(rows, lambda r: (r["problem"], r["costly_indices"],
                                          float(r["switch_cost"]), p_of(r)))
    best_p: dict[tuple, tuple] = {}
    for (problem, costly, cost, p), runs in sorted(per_setting.items()):
        mean, _, _ = aggregate([float(r["gap"]) for r in runs])
        key = (problem, costly, cost)
        if key not in best_p or mean > best_p[key][0]:
            best_p[key] = (mean, p)
    by_cost = _group(list(best_p.items()), lambda kv: kv[0][2])
    best_rows = []
    for cost, entries in sorted(by_cost.items()):
        _, _, med = aggregate([p for _, (_, p) in entries])
        best_rows.append([_fmt(cost), _fmt(med), str(len(entries))])
    best_path = os.path.join(out, "best_p_by_cost.csv")
    _atomic_write_csv(best_path, ["switch_cost", "median_best_p", "n_settings"],
                      best_rows)
    return {"psweep_curve": curve_path, "best_p_by_cost": best_path}


def summarize(results_dir: str, mode: str, out_dir: str | None = None,
              make_plots: bool = True) -> dict[str, str]:
    """Produce the mode's delimited outputs and, by default, figures."""
    if mode == "table2":
        paths = summarize_table2(results_dir, out_dir)
    elif mode == "psweep":
        paths = summarize_psweep(results_dir, out_dir)
    else:
        raise ValueError(f"unknown summarize mode {mode!r}; use table2 or psweep")
    if make_plots:
        from . import plots
        paths.update(plots.render_summary_figures(mode, paths, out_dir or results_dir))
    return paths
