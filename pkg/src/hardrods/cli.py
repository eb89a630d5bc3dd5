"""Command line driver: ``hardrods <kind> CONFIG`` or ``hardrods run CONFIG``.

Every run writes into its output directory:

* ``summary.json``: checks with estimates, targets, tolerances and pass flags
  (deterministic for a given config),
* ``metadata.json``: timestamps, elapsed time and versions,
* ``config.snapshot.json``: the resolved config, itself a valid input,
* one CSV per detail table.

Exit status: 0 all checks pass, 1 a check failed, 2 config error,
3 runtime error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import DEFAULTS, load, validate
from .errors import ConfigError, HardRodsError
from .experiments import RUNNERS
from .fluctuations import THREADS_ENV, default_threads
from .io import write_csv

log = logging.getLogger("hardrods")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def resolve(cfg: dict, seed=None, threads=None, out_dir=None) -> dict:
    cfg = dict(cfg)
    if seed is not None:
        cfg["seed"] = seed
    if threads is not None:
        cfg["threads"] = threads
    elif "threads" not in cfg:
        cfg["threads"] = default_threads()
    if out_dir is not None:
        cfg["out_dir"] = str(out_dir)
    cfg.setdefault("out_dir", str(Path("results") / cfg["name"]))
    return validate(cfg)


def run(cfg: dict) -> tuple:
    """Run a validated config; returns ``(exit status, summary dict)``."""
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    started = dt.datetime.now(dt.timezone.utc)
    t0 = time.perf_counter()
    result = RUNNERS[cfg["kind"]](cfg)
    elapsed = time.perf_counter() - t0

    snapshots = result.extra.pop("snapshots", None)
    if snapshots and cfg["params"].get("write_grids", False):
        from .macro import write_grid_binary, write_grid_csv

        for k, (t, grid) in enumerate(sorted(snapshots.items())):
            write_grid_csv(out / f"grid_{k}.csv", grid)
            write_grid_binary(out / f"grid_{k}.bin", grid)
    for name, (header, rows) in result.tables.items():
        write_csv(out / f"{name}.csv", header, rows)

    snapshot = {k: v for k, v in cfg.items() if k not in ("out_dir", "threads")}
    summary = {
        "name": cfg["name"],
        "kind": cfg["kind"],
        "seed": cfg["seed"],
        "pass": result.passed,
        "checks": [c.to_dict() for c in result.checks],
        "extra": result.extra,
    }
    write_json(out / "summary.json", summary)
    write_json(out / "config.snapshot.json", snapshot)
    write_json(out / "metadata.json", {
        "started": started.isoformat(),
        "finished": dt.datetime.now(dt.timezone.utc).isoformat(),
        "elapsed_seconds": elapsed,
        "threads": cfg.get("threads", 1),
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
    })
    return (EXIT_PASS if result.passed else EXIT_FAIL), summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hardrods", description="Hard-rod hydrodynamics experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="experiment file (.toml or .json)")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--threads", type=int, default=None,
                        help=f"worker threads (default: ${THREADS_ENV} or 1)")
    common.add_argument("--out-dir", default=None, help="output directory (default results/<name>)")
    common.add_argument("-q", "--quiet", action="store_true", help="only print the final verdict")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run whatever kind the config declares")
    for kind in DEFAULTS:
        sub.add_parser(kind, parents=[common], help=f"run a {kind} experiment")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = load(args.config)
        if args.command != "run" and cfg["kind"] != args.command:
            raise ConfigError(f"{args.config}: field 'kind' is {cfg['kind']!r} but the "
                              f"subcommand is {args.command!r}")
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be a positive integer")
        cfg = resolve(cfg, args.seed, args.threads, args.out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        status, summary = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HardRodsError as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"runtime error: {exc.strerror}: {exc.filename}", file=sys.stderr)
        return EXIT_RUNTIME
    for c in summary["checks"]:
        if not c["pass"] or not args.quiet:
            log.info("%s %s: estimate=%s target=%s tolerance=%s", "PASS" if c["pass"] else "FAIL",
                     c["name"], c["estimate"], c["target"], c["tolerance"])
    verdict = "PASS" if status == EXIT_PASS else "FAIL"
    print(f"{verdict} {cfg['name']} ({cfg['kind']}) -> {os.path.join(cfg['out_dir'], 'summary.json')}")
    return status


if __name__ == "__main__":
    sys.exit(main())
