"""Benchmark command line: run, race and scaling subcommands.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys

from .bench import race, run_experiment, scaling_report
from .solver import NmfConfig, RegConfig
from .subproblem import Tolerances
from .synth import SyntheticSpec


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_synthetic(text: str) -> SyntheticSpec:
    parts = text.split(",")
    if len(parts) != 5:
        raise argparse.ArgumentTypeError(
            "expected --synthetic n,m,r,sparsity,model (e.g. 500,2000,5,0.99,count)"
        )
    try:
        return SyntheticSpec(
            n=int(parts[0]),
            m=int(parts[1]),
            r_true=int(parts[2]),
            sparsity=float(parts[3]),
            value_model=parts[4],
        )
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _int_list(text: str):
    return [int(tok) for tok in text.split(",") if tok]


def _add_common(sub):
    data = sub.add_mutually_exclusive_group(required=True)
    data.add_argument("--input", help="MatrixMarket coordinate file to load")
    data.add_argument("--synthetic", type=_parse_synthetic, metavar="N,M,R,SPARSITY,MODEL",
                      help="generate a synthetic matrix instead of loading one")
    sub.add_argument("--rank", type=int, default=10, help="number of latent components")
    sub.add_argument("--alpha1", type=float, default=0.0, help="L2 weight on W")
    sub.add_argument("--alpha2", type=float, default=0.0, help="L2 weight on F")
    sub.add_argument("--beta1", type=float, default=0.0, help="L1 weight on W")
    sub.add_argument("--beta2", type=float, default=0.0, help="L1 weight on F")
    sub.add_argument("--max-iters", type=int, default=100)
    sub.add_argument("--tol", type=float, default=1e-6,
                     help="relative objective decrease that stops the outer loop")
    sub.add_argument("--eps-x", type=float, default=0.1, help="relative step cutoff")
    sub.add_argument("--eps-grad", type=float, default=1e-10, help="gradient tolerance")
    sub.add_argument("--threads", type=int, default=1)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", required=True, help="output directory")


def _config(args) -> NmfConfig:
    return NmfConfig(
        rank=args.rank,
        reg=RegConfig(args.alpha1, args.alpha2, args.beta1, args.beta2),
        max_outer_iters=args.max_iters,
        rel_obj_tol=args.tol,
        seed=args.seed,
        n_workers=args.threads,
        tol=Tolerances(eps_grad=args.eps_grad, eps_x=args.eps_x),
    )


def _dataset(args):
    return args.input if args.input is not None else args.synthetic


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="klnmf-bench",
                     description="Benchmark sparse KL-divergence NMF solvers")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", parents=[], help="one algorithm, one dataset")
    _add_common(run)
    run.add_argument("--algorithm", choices=("srcd", "mu"), default="srcd")

    rc = commands.add_parser("race", help="srcd vs mu from shared initialization")
    _add_common(rc)
    rc.add_argument("--budget", type=float, default=30.0,
                    help="wall-clock solve budget per algorithm, seconds")

    sc = commands.add_parser("scaling", help="fixed-iteration timing grid")
    _add_common(sc)
    sc.add_argument("--r-values", type=_int_list, default=[10, 20, 40],
                    metavar="R1,R2,...")
    sc.add_argument("--thread-values", type=_int_list, default=[1],
                    metavar="T1,T2,...")
    sc.add_argument("--iters", type=int, default=100)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "run":
            return run_experiment(_dataset(args), args.algorithm, _config(args), args.out)
        if args.command == "race":
            return race(_dataset(args), _config(args), args.budget, args.out)
        return scaling_report(_dataset(args), args.r_values, args.thread_values,
                              args.iters, args.out, seed=args.seed)
    except (OSError, ValueError, AssertionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
