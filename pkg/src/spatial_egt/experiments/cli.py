"""Command-line entry point.

::

    spatial-egt run <config> [--seed S] [--out DIR] [--threads T]
    spatial-egt dispersion <config> [--out DIR]
    spatial-egt converge <config> [--seed S] [--out DIR] [--threads T]
    spatial-egt sweep <config> --param section.key=a,b,c [--seed S] [--out DIR] [--threads T]

On success the manifest path is printed and the exit code is 0.  On failure a
one-line JSON error record goes to stderr and the exit code is 2 for invalid
input (config or arguments) and 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

from ..game import ConfigurationError
from . import io
from .config import ConfigError, bundled, load_config
from .runner import run_experiment

EXIT_RUNTIME = 1
EXIT_INPUT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError("<arguments>", message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spatial-egt", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("run", "converge", "sweep", "dispersion"):
        s = sub.add_parser(name)
        s.add_argument("config")
        s.add_argument("--out", default=None)
        if name != "dispersion":
            s.add_argument("--seed", type=int, default=None)
            s.add_argument("--threads", type=int, default=None)
        if name == "sweep":
            s.add_argument("--param", required=True, help="section.key=v1,v2,...")
    return p


def _emit_error(exc: BaseException, code: int) -> int:
    rec = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, ConfigError):
        rec["key"] = exc.key
    print(json.dumps(rec), file=sys.stderr)
    return code


def _resolve(config: str) -> Path:
    """A file path, or else the name of a bundled config."""
    p = Path(config)
    if p.exists():
        return p
    try:
        return bundled(config)
    except FileNotFoundError:
        return p


def _run(args, overrides=None, out=None):
    cfg = load_config(_resolve(args.config), overrides)
    if args.command == "dispersion":
        cfg.kind = "dispersion"
    if args.command == "converge" and cfg.kind != "convergence":
        raise ConfigError("experiment.kind", "converge needs a convergence config")
    return run_experiment(cfg, out or args.out, getattr(args, "seed", None), getattr(args, "threads", None))


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
        if args.command == "sweep":
            key, _, values = args.param.partition("=")
            vals = [v.strip() for v in values.split(",") if v.strip()]
            if not key or not vals:
                raise ConfigError("<arguments>", "--param must look like section.key=a,b,c")
            base = Path(args.out or load_config(_resolve(args.config)).output)
            index = {}
            for v in vals:
                sub = base / f"{key}={v}"
                man = _run(args, {key: v}, sub)
                index[v] = {"manifest": str(sub / "manifest.json"), "summary": man.summary}
            base.mkdir(parents=True, exist_ok=True)
            path = io.write_json(base / "sweep.json", {"param": key, "values": vals, "runs": index})
            print(path)
            return 0
        man = _run(args)
        print(Path(man.out_dir) / "manifest.json")
        return 0
    except (ConfigurationError, FileNotFoundError) as exc:
        return _emit_error(exc, EXIT_INPUT)
    except Exception as exc:  # noqa: BLE001 - every failure becomes an error record
        traceback.print_exc(file=sys.stderr)
        return _emit_error(exc, EXIT_RUNTIME)


if __name__ == "__main__":
    sys.exit(main())
