"""Command line entry point: ``cocyclelab <experiment> [options]``.

Exit status is 0 when every verdict passes, 1 when one fails and 2 for
configuration or precondition errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .cocycle import BumpPlacementError
from .config import NAME_TO_CODE, ConfigError, ExperimentConfig
from .experiments import PreconditionError, run_experiment
from .holonomy import HolonomyDivergenceError
from .lyapunov import NoSpectralGap
from .symplectic import TransversalityError

log = logging.getLogger("cocyclelab")

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
PRECONDITION_ERRORS = (
    ConfigError,
    PreconditionError,
    BumpPlacementError,
    NoSpectralGap,
    TransversalityError,
    HolonomyDivergenceError,
)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cocyclelab", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(NAME_TO_CODE), help="experiment to run")
    p.add_argument("--config", type=Path, help="INI file with [model], [cocycle], [experiment]")
    p.add_argument("--seed", type=int, help="override model.seed")
    p.add_argument("--out", type=Path, help="output directory (default: experiment.output)")
    p.add_argument("--n-iter", type=int, help="override experiment.n_iter")
    p.add_argument("--n-samples", type=int, help="override experiment.n_samples")
    p.add_argument("--tol", type=float, help="override experiment.tol (holonomy truncation)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    changes = {"name": NAME_TO_CODE[args.command]}
    for flag, key in (("n_iter", "n_iter"), ("n_samples", "n_samples"), ("tol", "tol")):
        val = getattr(args, flag)
        if val is not None:
            changes[key] = val
    try:
        cfg = cfg.with_experiment(**changes)
        # re-validate the merged settings
        cfg = ExperimentConfig.parse(cfg.dumps())
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        cfg = cfg.with_seed(args.seed)
    return cfg


def write_outputs(rep, out: Path, fmt: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        (out / "report.json").write_text(rep.to_json(), encoding="utf-8")
    else:
        (out / "report.csv").write_text(rep.to_csv(), encoding="utf-8")
    for key in rep.series:
        (out / f"{key}.csv").write_text(rep.series_csv(key), encoding="utf-8")
    timing = {"experiment": rep.name, "wall_time_seconds": rep.wall_time}
    (out / "timing.json").write_text(json.dumps(timing, indent=2) + "\n", encoding="utf-8")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args)
        rep = run_experiment(cfg)
    except PRECONDITION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out = args.out if args.out is not None else Path(cfg.experiment.output)
    write_outputs(rep, out, args.format)
    for name, ok in rep.verdicts.items():
        log.info("%s %s", "PASS" if ok else "FAIL", name)
    print(f"{rep.name} {args.command}: {'pass' if rep.passed else 'fail'} ({out})")
    return EXIT_PASS if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
