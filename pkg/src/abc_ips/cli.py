"""``abc-ips <subcommand> --config <path> [--seed N] [--workers K] [--out DIR]``.

Exit codes: 0 success, 2 invalid configuration or arguments, 1 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

from .config import EXPERIMENTS, ConfigError, json_schema, load_config, parse_config
from .experiments import COMMANDS, ResultTable

log = logging.getLogger("abc_ips")


def preset_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("abc_ips.presets").iterdir() if p.name.endswith(".json"))


def _resolve_config(arg: str):
    if arg.startswith("preset:"):
        name = arg.split(":", 1)[1]
        res = resources.files("abc_ips.presets") / f"{name}.json"
        if not res.is_file():
            raise ConfigError([f"unknown preset {name!r}; available: {preset_names()}"])
        return parse_config(res.read_text(), f"preset:{name}")
    return load_config(arg)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="abc-ips", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON config path, or preset:<name>")
        s.add_argument("--seed", type=int, default=None, help="override the config seed")
        s.add_argument("--workers", type=int, default=None, help="default: $ABC_IPS_WORKERS or 1")
        s.add_argument("--out", type=Path, default=None, help="output directory")
    sub.add_parser("schema", help="print the config JSON schema")
    sub.add_parser("presets", help="list bundled presets")
    return p


def _workers(arg, cfg) -> int:
    if arg is not None:
        return arg
    if cfg.workers is not None:
        return cfg.workers
    env = os.environ.get("ABC_IPS_WORKERS")
    if env is None:
        return 1
    try:
        w = int(env)
    except ValueError:
        raise ConfigError([f"ABC_IPS_WORKERS must be an integer, got {env!r}"]) from None
    if w < 1:
        raise ConfigError(["ABC_IPS_WORKERS must be >= 1"])
    return w


def _print_result(result):
    if isinstance(result, ResultTable):
        sys.stdout.write(result.to_csv())
    else:
        print(json.dumps(result, indent=2, default=str))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "schema":
        print(json.dumps(json_schema(), indent=2))
        return 0
    if args.command == "presets":
        print("\n".join(preset_names()))
        return 0
    try:
        cfg = _resolve_config(args.config)
        if cfg.experiment != args.command:
            raise ConfigError([f"config is for experiment {cfg.experiment!r}, not {args.command!r}"])
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(["--seed must be >= 0"])
            cfg = cfg.model_copy(update={"seed": args.seed})
        workers = _workers(args.workers, cfg)
        if workers < 1:
            raise ConfigError(["--workers must be >= 1"])
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"error: {d}", file=sys.stderr)
        return 2
    out = args.out or (Path(cfg.output) if cfg.output else None)
    try:
        result = COMMANDS[args.command](cfg, out, workers)
    except Exception as exc:
        log.debug("run failed", exc_info=True)
        print(f"error: {args.command} failed: {exc}", file=sys.stderr)
        return 1
    _print_result(result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
