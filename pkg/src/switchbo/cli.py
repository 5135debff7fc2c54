"""Command-line interface.

Subcommands:

* ``run <config>``        execute a sweep and write CSVs
* ``dry-run <config>``    validate a config and count its cells
* ``summarize <dir>``     aggregate a sweep's summary.csv (+ figures)
* ``oracle``              regenerate the optimum-value constants file
"""
from __future__ import annotations

import argparse
import sys
from importlib import resources

from . import harness


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config's base_seed")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker processes (results identical regardless)")
    parser.add_argument("--out", default=None, help="override the output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="switchbo",
        description="Switching-cost-aware Bayesian optimization benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a sweep from a config file")
    p_run.add_argument("config")
    _add_common(p_run)

    p_dry = sub.add_parser("dry-run", help="validate a config and enumerate cells")
    p_dry.add_argument("config")
    _add_common(p_dry)

    p_sum = sub.add_parser("summarize", help="aggregate a sweep's summary.csv")
    p_sum.add_argument("results_dir")
    p_sum.add_argument("--mode", choices=["table2", "psweep"], required=True)
    p_sum.add_argument("--out", default=None, help="write summaries elsewhere")
    p_sum.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    p_oracle = sub.add_parser("oracle", help="regenerate the y_star constants file")
    p_oracle.add_argument("--out", default=None,
                          help="target path (default: the packaged data file)")
    return parser


def _load(args) -> harness.ExperimentConfig:
    config = harness.load_config(args.config)
    if args.seed is not None:
        config = harness.ExperimentConfig(
            problems=config.problems, policies=config.policies,
            switch_costs=config.switch_costs, runs_per_cell=config.runs_per_cell,
            base_seed=args.seed, n_multiplier=config.n_multiplier,
            output_dir=config.output_dir, fit_restarts=config.fit_restarts)
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "run":
        config = _load(args)
        cells = harness.enumerate_cells(config)
        print(f"running {len(cells)} cells "
              f"({len(config.problems)} problems x {len(config.switch_costs)} costs x "
              f"{len(config.policies)} policies x {config.runs_per_cell} runs)")

        def progress(done, total):
            if done % 10 == 0 or done == total:
                print(f"  {done}/{total} cells", flush=True)

        paths = harness.run_sweep(config, jobs=args.jobs, out_dir=args.out,
                                  progress=progress)
        for kind, path in paths.items():
            print(f"wrote {kind}: {path}")
        return 0

    if args.command == "dry-run":
        config = _load(args)
        cells = harness.enumerate_cells(config)
        print(f"config OK: {len(cells)} cells "
              f"({len(config.problems)} problems x {len(config.switch_costs)} costs x "
              f"{len(config.policies)} policies x {config.runs_per_cell} runs)")
        print(f"output dir: {args.out or config.output_dir}")
        return 0

    if args.command == "summarize":
        paths = harness.summarize(args.results_dir, mode=args.mode,
                                  out_dir=args.out, make_plots=not args.no_plots)
        for kind, path in paths.items():
            print(f"wrote {kind}: {path}")
        return 0

    if args.command == "oracle":
        from . import oracle
        if args.out is None:
            target = resources.files("switchbo").joinpath("data/y_star.txt")
            out_path = str(target)
        else:
            out_path = args.out
        oracle.write_constants(out_path)
        print(f"wrote constants: {out_path}")
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
