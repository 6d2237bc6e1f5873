"""Command-line entry point: ``nocforge run|sweep|dump-topology``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness.config import ConfigError, load_config
from .harness.experiment import run_experiment
from .topology import build_topology

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG = 0, 1, 2


def _run(args) -> int:
    result = run_experiment(args.config, args.out)
    print(result.report_csv(), end="")
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


def _sweep(args) -> int:
    configs = sorted(Path(args.config_dir).glob("*.cfg"))
    if not configs:
        raise ConfigError(None, f"no *.cfg files in {args.config_dir}")
    status = EXIT_OK
    print("config,golden_check,latency_mean,throughput")
    for path in configs:
        result = run_experiment(path, args.out)
        row = dict(result.report)
        print(f"{path.name},{row['golden_check']},{row['latency_mean']},{row['throughput']}")
        if not result.passed:
            status = EXIT_CHECK_FAILED
    return status


def _dump(args) -> int:
    cfg = load_config(args.config)
    print(build_topology(cfg.topology_spec()).dump(), end="")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="nocforge", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one config and write its report")
    p.add_argument("config")
    p.add_argument("--out", help="directory for report/trace files (default: beside the config)")
    p.set_defaults(fn=_run)

    p = sub.add_parser("sweep", help="run every *.cfg in a directory")
    p.add_argument("config_dir")
    p.add_argument("--out")
    p.set_defaults(fn=_sweep)

    p = sub.add_parser("dump-topology", help="print the elaborated netlist of a config")
    p.add_argument("config")
    p.set_defaults(fn=_dump)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
