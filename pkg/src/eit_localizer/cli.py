"""Command line entry point ``eit-localizer``."""

import argparse
import json
import sys

from . import harness
from .config import PRESETS, load_config
from .errors import EITError


def build_parser():
    p = argparse.ArgumentParser(prog="eit-localizer",
                                description="Dark-state addressing scans and checks.")
    p.add_argument("subcommand", choices=harness.SUBCOMMANDS)
    p.add_argument("--preset", choices=sorted(PRESETS),
                   help="named parameter set (default depends on the subcommand)")
    p.add_argument("--config", help="key = value file applied on top of the preset")
    p.add_argument("--jobs", type=int, default=None,
                   help=f"worker processes (default: all cores; {harness.THREADS_ENV} overrides)")
    p.add_argument("--out", default=".", help="output directory")
    return p


def _fail(category, message, code):
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    preset = args.preset or harness.DEFAULT_PRESET.get(args.subcommand, "")
    try:
        jobs = harness.resolve_jobs(args.jobs)
        cfg = load_config(args.config, preset)
        code, summary = harness.run(args.subcommand, cfg, args.out, jobs)
    except EITError as exc:
        return _fail(exc.category, str(exc), 2)
    except (ValueError, ZeroDivisionError) as exc:
        return _fail("invalid-input", str(exc), 2)
    print(harness.to_json(summary), end="")
    return code


if __name__ == "__main__":
    sys.exit(main())
