"""Command-line front end.

    stocbf <experiment> [--config cfg.json] [--out DIR] [--seed N]
           [--paths N] [--dt S] [--horizon S] [parameter overrides]

Exit codes: 0 success, 1 validation error, 2 numerical blowup,
3 inconsistent verdict (empirical exits exceed the cap beyond the
confidence interval).
"""

from __future__ import annotations

import argparse
import sys as _sys

from .errors import NumericalBlowupError, StocbfError
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_BLOWUP = 2
EXIT_INCONSISTENT = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stocbf",
        description="Safety-compensator experiments on the built-in SDE plants.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", help="JSON config file (flags override it)")
        sp.add_argument("--out", dest="out_dir", help="output directory")
        sp.add_argument("--seed", dest="master_seed", type=int, help="master seed")
        sp.add_argument("--paths", dest="n_paths", type=int, help="path count")
        sp.add_argument("--dt", type=float, help="time step")
        sp.add_argument("--horizon", type=float, help="final time")
        sp.add_argument("--record-stride", dest="record_stride", type=int)
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--beta", type=float)
        sp.add_argument("--gamma", type=float)
        sp.add_argument("--c", type=float)
        sp.add_argument("--u-max", dest="u_max", type=float)
        sp.add_argument("--n-cutoff", dest="n_cutoff", type=float)
        sp.add_argument("--x0", type=float)
        sp.add_argument("--u-o", dest="u_o", type=float)
        sp.add_argument("--a-values", dest="a_values",
                        help="comma-separated scaling factors, e.g. 1,0.5,0")
        sp.add_argument("--plant", choices=("example1", "example2"))
        sp.add_argument("--field")
        sp.add_argument("--compensator")
        sp.add_argument("--kind",
                        choices=("as_rcbf", "as_zcbf", "stochastic", "fiip"))
        sp.add_argument("--b", type=float)
        sp.add_argument("--mu", type=float)
        sp.add_argument("--c1", type=float)
        sp.add_argument("--c2", type=float)
        sp.add_argument("--lo", type=float)
        sp.add_argument("--hi", type=float)
        sp.add_argument("--points", type=int)
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    skip = {"experiment", "config"}
    out = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    if "a_values" in out and isinstance(out["a_values"], str):
        out["a_values"] = [float(tok) for tok in out["a_values"].split(",") if tok]
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            cfg = ExperimentConfig.from_file(args.config, **_overrides(args))
            if cfg.experiment != args.experiment:
                raise StocbfError(
                    f"config file is for {cfg.experiment!r} but the "
                    f"{args.experiment!r} subcommand was invoked"
                )
        else:
            cfg = ExperimentConfig.for_experiment(args.experiment, **_overrides(args))
        result = run_experiment(cfg)
    except NumericalBlowupError as exc:
        print(f"numerical blowup: {exc}", file=_sys.stderr)
        return EXIT_BLOWUP
    except (StocbfError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_VALIDATION

    for line in result.get("summary_lines", []):
        print(line)
    print(f"artifacts written to {result['out_dir']}")

    verdict = result.get("verdict")
    if verdict is not None and not verdict.consistent:
        print("verdict inconsistent: empirical exits exceed the cap beyond "
              "the confidence interval", file=_sys.stderr)
        return EXIT_INCONSISTENT
    rows = result.get("rows")
    if rows and any(not r.consistent for r in rows):
        print("sweep row inconsistent with its cap", file=_sys.stderr)
        return EXIT_INCONSISTENT
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
