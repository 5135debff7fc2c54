"""Tests for config handling, the sweep runner, and the summarizers."""

import csv
import json
import os

import pytest

from switchbo import cli, harness
from switchbo.harness import (ConfigError, SchemaError, SUMMARY_COLUMNS,
                              TRACE_COLUMNS, config_from_dict, enumerate_cells,
                              run_sweep, summarize)

TINY = {
    "problems": [{"function": "ackley", "d": 2, "costly": 1}],
    "switch_costs": [2],
    "policies": [{"kind": "vanilla"}, {"kind": "periodic", "k": 2}],
    "runs_per_cell": 3,
    "base_seed": 17,
    "n_multiplier": 2,
}


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_cell_count_and_summary_rows(tmp_path):
    config = config_from_dict({**TINY, "output_dir": str(tmp_path / "out")})
    assert len(enumerate_cells(config)) == 6
    paths = run_sweep(config)
    with open(paths["summary"], newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6
    assert list(rows[0]) == SUMMARY_COLUMNS
    with open(paths["traces"], newline="") as fh:
        header = next(csv.reader(fh))
    assert header == TRACE_COLUMNS


def test_sweep_rerun_is_byte_identical(tmp_path):
    config = config_from_dict({**TINY, "runs_per_cell": 1,
                               "output_dir": str(tmp_path / "out")})
    paths1 = run_sweep(config)
    first = {k: _read(p) for k, p in paths1.items() if p.endswith(".csv")}
    paths2 = run_sweep(config)
    for k, p in paths2.items():
        if p.endswith(".csv"):
            assert _read(p) == first[k]


def test_shared_y0_across_policies(tmp_path):
    config = config_from_dict({**TINY, "output_dir": str(tmp_path / "out"),
                               "switch_costs": [2],
                               "policies": [{"kind": "vanilla"},
                                            {"kind": "preuse", "p": 0.5}]})
    paths = run_sweep(config)
    with open(paths["summary"], newline="") as fh:
        rows = list(csv.DictReader(fh))
    by_run = {}
    for row in rows:
        by_run.setdefault(row["run_id"].rsplit("_", 1)[1], set()).add(row["y0"])
    for run, y0s in by_run.items():
        assert len(y0s) == 1, f"y0 differs across policies for {run}"


def test_dry_run_enumerates_full_psweep():
    config = config_from_dict({
        "problems": [{"function": name, "d": 4, "costly": 1}
                     for name in ("ackley", "griewank", "levy", "michalewicz",
                                  "rosenbrock", "salomon", "schwefel")],
        "switch_costs": [1, 2, 4, 8, 16],
        "policies": [{"kind": "preuse", "p": [round(0.05 * i, 2) for i in range(21)]}],
        "runs_per_cell": 20,
    })
    assert len(enumerate_cells(config)) == 14700


def test_config_unknown_key_paths():
    with pytest.raises(ConfigError, match="config.bogus"):
        config_from_dict({**TINY, "bogus": 1})
    with pytest.raises(ConfigError, match=r"config.problems\[0\].function"):
        config_from_dict({**TINY, "problems": [{"function": "nope", "d": 2, "costly": 1}]})
    with pytest.raises(ConfigError, match=r"config.policies\[0\].p"):
        config_from_dict({**TINY, "policies": [{"kind": "preuse"}]})
    with pytest.raises(ConfigError, match=r"config.policies\[0\].q"):
        config_from_dict({**TINY, "policies": [{"kind": "preuse", "p": 0.5, "q": 1}]})
    with pytest.raises(ConfigError, match="costly"):
        config_from_dict({**TINY, "problems": [{"function": "ackley", "d": 2, "costly": 2}]})


def test_config_switch_cost_guard():
    with pytest.raises(ConfigError, match="switch_costs"):
        config_from_dict({**TINY, "switch_costs": [3]})
    config = config_from_dict({**TINY, "switch_costs": [3],
                               "allow_any_switch_cost": True})
    assert config.switch_costs == (3.0,)


def _write_summary(path, rows):
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, "summary.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerows(rows)


def _synthetic_row(policy, params, problem, cost, gap, run=0):
    rid = f"{problem}_cs{cost}_{policy}_{params}_r{run}"
    return [rid, policy, problem, "2", "0", repr(float(cost)), params,
            "-10.0", "0.0", "-1.0", repr(float(gap)), "1", "1", "10.0"]


def test_summarize_table2_ranking_and_ties(tmp_path):
    res = tmp_path / "res"
    rows = []
    for run in range(2):
        rows.append(_synthetic_row("eipu", "", "ackley", 2, 0.9, run))
        rows.append(_synthetic_row("vanilla", "", "ackley", 2, 0.8, run))
        # tied pair on schwefel
        rows.append(_synthetic_row("eipu", "", "schwefel", 2, 0.7, run))
        rows.append(_synthetic_row("vanilla", "", "schwefel", 2, 0.7, run))
    _write_summary(res, rows)
    out = summarize(str(res), mode="table2", make_plots=False)
    with open(out["table2"], newline="") as fh:
        table = {(r["problem"], r["policy"]): r for r in csv.DictReader(fh)}
    assert table[("ackley", "eipu")]["best"] == "1"
    assert table[("ackley", "eipu")]["second_best"] == "0"
    assert table[("ackley", "vanilla")]["second_best"] == "1"
    assert table[("schwefel", "eipu")]["best"] == "1"
    assert table[("schwefel", "vanilla")]["best"] == "1"


def test_summarize_table2_collapses_families_to_best(tmp_path):
    res = tmp_path / "res"
    rows = []
    for run in range(2):
        rows.append(_synthetic_row("preuse", "p=0.2", "ackley", 2, 0.5, run))
        rows.append(_synthetic_row("preuse", "p=0.8", "ackley", 2, 0.6, run))
        rows.append(_synthetic_row("vanilla", "", "ackley", 2, 0.55, run))
    _write_summary(res, rows)
    out = summarize(str(res), mode="table2", make_plots=False)
    with open(out["table2"], newline="") as fh:
        table = list(csv.DictReader(fh))
    assert len(table) == 2  # one row per family
    preuse = next(r for r in table if r["policy"] == "preuse")
    assert preuse["policy_params"] == "p=0.8"
    assert preuse["best"] == "1"


def test_summarize_psweep_synthetic_gap_equals_p(tmp_path):
    res = tmp_path / "res"
    rows = []
    for problem in ("ackley", "levy"):
        for cost in (2, 8):
            for p in (0.0, 0.5, 1.0):
                for run in range(2):
                    rows.append(_synthetic_row("preuse", f"p={p}", problem,
                                               cost, p, run))
    _write_summary(res, rows)
    out = summarize(str(res), mode="psweep", make_plots=False)
    with open(out["best_p_by_cost"], newline="") as fh:
        best = {float(r["switch_cost"]): float(r["median_best_p"])
                for r in csv.DictReader(fh)}
    assert best == {2.0: 1.0, 8.0: 1.0}
    with open(out["psweep_curve"], newline="") as fh:
        curve = list(csv.DictReader(fh))
    assert {r["p"] for r in curve} == {"0.0", "0.5", "1.0"}
    row = next(r for r in curve if r["p"] == "0.5" and r["switch_cost"] == "2.0")
    assert float(row["mean_gap"]) == pytest.approx(0.5)


def test_summarize_missing_column_schema_error(tmp_path):
    res = tmp_path / "res"
    os.makedirs(res, exist_ok=True)
    with open(res / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([c for c in SUMMARY_COLUMNS if c != "gap"])
    with pytest.raises(SchemaError, match="gap"):
        summarize(str(res), mode="table2", make_plots=False)


def test_summarize_renders_figures(tmp_path):
    res = tmp_path / "res"
    rows = [_synthetic_row("preuse", f"p={p}", "ackley", cost, p, run)
            for p in (0.0, 1.0) for cost in (2, 8) for run in range(2)]
    _write_summary(res, rows)
    out = summarize(str(res), mode="psweep", make_plots=True)
    assert os.path.getsize(out["psweep_curve_png"]) > 0
    assert os.path.getsize(out["best_p_png"]) > 0

    rows = [_synthetic_row(policy, "", "ackley", cost, g, run)
            for policy, g in (("vanilla", 0.5), ("eipu", 0.7))
            for cost in (2, 8) for run in range(2)]
    _write_summary(res, rows)
    out = summarize(str(res), mode="table2", make_plots=True)
    assert os.path.getsize(out["gap_vs_cost_png"]) > 0


def test_cli_dry_run_and_seed_override(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(TINY))
    assert cli.main(["dry-run", str(cfg_path), "--seed", "9"]) == 0
    out = capsys.readouterr().out
    assert "6 cells" in out


def test_cli_oracle_writes_constants(tmp_path):
    target = tmp_path / "y_star.txt"
    assert cli.main(["oracle", "--out", str(target)]) == 0
    text = target.read_text()
    assert "michalewicz,2" in text
    from switchbo.problems import load_y_star_table
    table = load_y_star_table(target)
    assert table[("michalewicz", 2)] == pytest.approx(1.8013, abs=1e-3)
    assert table[("ackley", 3)] == 0.0


def test_cli_summarize(tmp_path):
    res = tmp_path / "res"
    rows = [_synthetic_row("vanilla", "", "ackley", 2, 0.5, run) for run in range(2)]
    _write_summary(res, rows)
    assert cli.main(["summarize", str(res), "--mode", "table2", "--no-plots"]) == 0
    assert (res / "table2.csv").exists()
    assert (res / "gap_vs_cost.csv").exists()
