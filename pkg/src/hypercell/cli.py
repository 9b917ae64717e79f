"""Command line entry point.

    hypercell run --config exp.toml [--seed N] [--workers W]
    hypercell validate --config exp.toml

``run`` writes ``samples.jsonl``, ``estimates.csv``, ``ratefit.json`` and
``manifest.json`` into the configured output directory and exits with status 1
when any registered check fails. Each line of ``samples.jsonl`` holds exactly
the keys origin, seed, stream, slot, fcount, inball_r, functionals, summary,
conditioned_a and dropped. Configuration errors exit with status 2.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .config import load, validate
from .errors import CheckFailed, ConfigError


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hypercell", description="Typical-cell experiments for Poisson hyperplane tessellations.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--n-samples", dest="n_samples", type=int)
    run.add_argument("--output-dir", dest="output_dir")
    val = sub.add_parser("validate", help="report diagnostics for a config")
    val.add_argument("--config", required=True)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load(args.config, check=args.command == "run")
        if args.command == "validate":
            diags = validate(cfg)
            for d in diags:
                print(d)
            return 0
        cfg = cfg.replace(seed=args.seed, workers=args.workers, n_samples=args.n_samples,
                          output_dir=args.output_dir)
        from .runner import run

        manifest = run(cfg)
        for c in manifest["checks"]:
            print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}: {c['detail']}")
        failed = [c["name"] for c in manifest["checks"] if not c["passed"]]
        if failed:
            raise CheckFailed(failed)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CheckFailed as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
