"""Command line entry point: ``bipstab run | validate | oracle``."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .errors import BipstabError, ConfigError
from .measure import ParticleMeasure


def _cmd_run(args) -> int:
    from .experiments import ExperimentConfig, run_experiment, write_outputs

    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig.defaults(args.experiment)
    if cfg.experiment != args.experiment:
        raise ConfigError(f"config is for {cfg.experiment!r}, not {args.experiment!r}")
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.validate()
    out = args.out or cfg.out_dir
    if out is None:
        raise ConfigError("an output directory is required (--out)")
    result = run_experiment(cfg)
    write_outputs(result, cfg.to_dict(), out, __version__)
    for name, ok in sorted(result.checks.items()):
        print(f"{'PASS' if ok else 'FAIL'} bound {name}")
    for name, ok in sorted(result.rate_checks.items()):
        print(f"{'PASS' if ok else 'FAIL'} rate {name}")
    return 0 if result.all_bounds_satisfied else 1


def _cmd_validate(args) -> int:
    from .experiments import ExperimentConfig

    cfg = ExperimentConfig.load(args.config)
    print(f"ok: {cfg.experiment}")
    return 0


def _cmd_oracle(args) -> int:
    from .transport import w1_1d_oracle

    if len(args.inputs) != 2:
        raise ConfigError("the oracle needs exactly two --in files")
    measures = []
    for path in args.inputs:
        with open(path) as fh:
            try:
                measures.append(ParticleMeasure.from_csv(fh.read()))
            except (ValueError, IndexError) as exc:
                raise ConfigError(f"{path}: {exc}") from exc
    print(repr(w1_1d_oracle(measures[0], measures[1], args.p)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bipstab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    from .experiments.config import EXPERIMENTS

    run = sub.add_parser("run", help="run a seeded experiment")
    run.add_argument("experiment", choices=EXPERIMENTS)
    run.add_argument("--config", help="JSON config; defaults are used when omitted")
    run.add_argument("--out", help="output directory")
    run.add_argument("--seed", type=int, help="root seed (unsigned 64-bit), overrides the config")
    run.set_defaults(func=_cmd_run)

    val = sub.add_parser("validate", help="check a config file")
    val.add_argument("--config", required=True)
    val.set_defaults(func=_cmd_validate)

    orc = sub.add_parser("oracle", help="standalone reference solvers")
    orc_sub = orc.add_subparsers(dest="oracle", required=True)
    ot1d = orc_sub.add_parser("ot1d", help="W_p between two 1D particle CSV files")
    ot1d.add_argument("--in", dest="inputs", action="append", required=True)
    ot1d.add_argument("-p", type=float, default=1.0)
    ot1d.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BipstabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
