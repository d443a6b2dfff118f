"""Batch experiment command-line interface.

Subcommands:

* ``run``      -- run a batch of seeded episodes under one policy
* ``validate`` -- schema-check a config file and exit
* ``sweep``    -- grid over one config key, one batch per value

Exit codes: 0 success, 1 configuration error, 2 runtime failure in at least
one episode.
"""

from __future__ import annotations

import argparse
import os
import sys

from trackgym import __version__
from trackgym.config import RunConfig, apply_overrides, load_config, validate_config
from trackgym.errors import ConfigError
from trackgym.runner import BatchSummary, format_summary_table, run_batch

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML config file (defaults used if omitted)")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a config value (repeatable; beats the file)",
    )
    parser.add_argument("--policy", choices=("random", "static", "coverage"))
    parser.add_argument("--episodes", type=int)
    parser.add_argument("--seed", type=int, help="base seed (episode i uses seed+i)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--workers", type=int, help="parallel episode workers")
    parser.add_argument(
        "--log-states", action="store_true", help="also write track/truth state logs"
    )
    parser.add_argument(
        "--plots", action="store_true", help="render per-metric line charts"
    )


def _build_config(args) -> RunConfig:
    config = load_config(args.config)
    config = apply_overrides(config, args.overrides)
    if args.policy is not None:
        config.run.policy = args.policy
    if args.episodes is not None:
        if args.episodes < 0:
            raise ConfigError("--episodes must be >= 0")
        config.run.episodes = args.episodes
    if args.seed is not None:
        config.run.base_seed = args.seed
    if args.out is not None:
        config.run.out_dir = args.out
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        config.run.workers = args.workers
    if args.log_states:
        config.run.log_states = True
    if args.plots:
        config.run.plots = True
    return config


def _render_plots(out_dir: str) -> None:
    """Mean-over-episodes line chart per metric column, one PNG each."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    import csv
    import glob

    columns: dict[str, list[list[float]]] = {}
    for path in sorted(glob.glob(os.path.join(out_dir, "episode_*.csv"))):
        with open(path) as handle:
            reader = csv.DictReader(handle)
            series: dict[str, list[float]] = {}
            for row in reader:
                for key, value in row.items():
                    if key in ("step",):
                        continue
                    series.setdefault(key, []).append(float(value))
        for key, values in series.items():
            columns.setdefault(key, []).append(values)

    plot_dir = os.path.join(out_dir, "plots")
    os.makedirs(plot_dir, exist_ok=True)
    for key, episodes in columns.items():
        if key == "time":
            continue
        length = min(len(v) for v in episodes)
        stacked = np.array([v[:length] for v in episodes])
        with np.errstate(invalid="ignore"):
            mean = np.nanmean(stacked, axis=0)
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.plot(mean)
        ax.set_xlabel("step")
        ax.set_ylabel(key)
        ax.set_title(f"{key} (mean over {len(episodes)} episodes)")
        fig.tight_layout()
        fig.savefig(os.path.join(plot_dir, f"{key}.png"), dpi=110)
        plt.close(fig)


def _cmd_run(args) -> int:
    config = _build_config(args)
    summary = run_batch(config)
    print(format_summary_table([summary]))
    if config.run.plots and config.run.episodes > 0:
        _render_plots(config.run.out_dir)
    if summary.n_failed:
        print(f"{summary.n_failed} episode(s) failed", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_validate(args) -> int:
    diagnostics = validate_config(args.config_path)
    if diagnostics:
        for line in diagnostics:
            print(f"invalid: {line}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"valid: {args.config_path}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    values = [v for v in args.values.split(",") if v]
    if not values:
        raise ConfigError("--values must list at least one value")
    batches: list[BatchSummary] = []
    failed = False
    for value in values:
        config = _build_config(args)
        config = apply_overrides(config, [f"{args.param}={value}"])
        out = os.path.join(config.run.out_dir, f"{args.param}={value}")
        config.run.out_dir = out
        summary = run_batch(config)
        summary.policy = f"{config.run.policy}[{args.param}={value}]"
        batches.append(summary)
        failed = failed or summary.n_failed > 0
    print(format_summary_table(batches))
    return EXIT_RUNTIME if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trackgym",
        description="Search-and-track sensor management batch experiment runner",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a batch of seeded episodes")
    _add_common(run_p)
    run_p.set_defaults(fn=_cmd_run)

    val_p = sub.add_parser("validate", help="check a config file")
    val_p.add_argument("config_path")
    val_p.set_defaults(fn=_cmd_validate)

    sweep_p = sub.add_parser("sweep", help="grid over one config key")
    _add_common(sweep_p)
    sweep_p.add_argument("--param", required=True, metavar="SECTION.KEY")
    sweep_p.add_argument("--values", required=True, help="comma-separated values")
    sweep_p.set_defaults(fn=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
