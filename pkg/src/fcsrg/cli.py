"""Command-line entry point.

Verbs: sweep, theory, train-projector, train-denoiser, make-generator,
recover-one, dump-weights-info. Exit codes: 0 success, 1 usage/config error,
2 numeric failure, 3 a theory check failed.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import (ConfigError, DimensionError, NumericError, ParameterError,
                     PreconditionError, SingularMatrixError, WeightFormatError)
from . import experiments


def _add_common(sub):
    sub.add_argument("--config", default=None, help="INI config file")
    sub.add_argument("--seed", type=int, default=None,
                     help="override [experiment] seed")
    sub.add_argument("--out", default=None, help="override output directory")
    sub.add_argument("--override", action="append", default=[],
                     metavar="KEY=VALUE",
                     help="override a config entry, e.g. solver.rho=0.5")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fcsrg",
        description="Compressive sensing recovery with generative priors")
    subs = parser.add_subparsers(dest="command", required=True)
    for verb in ("sweep", "theory", "train-projector", "train-denoiser",
                 "make-generator", "recover-one"):
        _add_common(subs.add_parser(verb))
    dump = subs.add_parser("dump-weights-info")
    dump.add_argument("path", help="weight file to inspect")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "dump-weights-info":
            print(experiments.weights_info(args.path))
            return 0
        cfg = experiments.ExperimentConfig.load(
            args.config, overrides=args.override, seed=args.seed, out=args.out)
        out_dir = cfg.get_str("experiment", "out")
        if args.command == "sweep":
            report = experiments.run_sweep(cfg, out_dir)
            for cell in report.cells:
                s = cell.summary()
                acc = ("" if s["mean_accuracy"] is None
                       else f"  acc={s['mean_accuracy']:.3f}")
                print(f"ratio {s['ratio']:>5g}  {s['solver']:<10s} "
                      f"err={s['mean_error']:.4g}±{s['stderr_error']:.2g}{acc}  "
                      f"t={s['mean_wall_time'] * 1e3:.1f}ms")
            print(f"wrote {out_dir}/sweep.csv")
        elif args.command == "theory":
            results = experiments.run_theory(cfg, out_dir)
            for name, passed in results.items():
                print(f"{name}: {'PASS' if passed else 'FAIL'}")
            print(f"wrote {out_dir}/theory_summary.txt")
            if not all(results.values()):
                return 3
        elif args.command == "recover-one":
            print(json.dumps(experiments.run_recover_one(cfg, out_dir),
                             indent=2, sort_keys=True))
        elif args.command == "train-projector":
            print(f"wrote {experiments.run_train_projector(cfg, out_dir)}")
        elif args.command == "train-denoiser":
            print(f"wrote {experiments.run_train_denoiser(cfg, out_dir)}")
        elif args.command == "make-generator":
            print(f"wrote {experiments.run_make_generator(cfg, out_dir)}")
        return 0
    except (ConfigError, WeightFormatError, ParameterError, DimensionError,
            PreconditionError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericError, SingularMatrixError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
