"""Command line driver for convergence studies."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .problems import ExpressionError, load_problem
from .study import R_RULES, ConfigError, StudyConfig, StudyError, preset, run_study
from .mesh import FAMILIES, MeshError


def parse_levels(text):
    """``"3..5"`` -> (3, 4, 5); ``"2,4"`` -> (2, 4)."""
    text = text.strip()
    if not text:
        return ()
    try:
        if ".." in text:
            a, b = text.split("..")
            return tuple(range(int(a), int(b) + 1))
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level range {text!r}; use a..b or a,b,c") from None


def parse_lambdas(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad lambda list {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="wgiface", description="Weak Galerkin interface convergence studies.")
    p.add_argument("--preset", help="table1 .. table15; explicit flags override its fields")
    p.add_argument("--problem", choices=["test1", "test2", "test3"])
    p.add_argument("--problem-file", help="TOML problem description")
    p.add_argument("--lambda", dest="lambdas", type=parse_lambdas, help="comma separated contrasts")
    p.add_argument("--k", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--r-rule", choices=R_RULES)
    p.add_argument("--mesh", choices=FAMILIES)
    p.add_argument("--levels", type=parse_levels, help="a..b or a,b,c")
    p.add_argument("--out", help="output directory for CSV / markdown / exports")
    p.add_argument("--export-mesh", action="store_true")
    p.add_argument("--export-matrix", action="store_true")
    p.add_argument("--tol", type=float)
    p.add_argument("--solver", choices=["auto", "pcg", "cholesky", "direct"])
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args) -> StudyConfig:
    cfg = preset(args.preset) if args.preset else StudyConfig()
    over = {}
    for name in ("problem", "lambdas", "k", "q", "r_rule", "mesh", "levels", "out", "tol", "solver"):
        val = getattr(args, name)
        if val is not None:
            over[name] = val
    if args.k is not None and args.q is None:
        over["q"] = args.k
    over["export_mesh"] = args.export_mesh
    over["export_matrix"] = args.export_matrix
    if args.problem_file:
        over["problem_spec"] = load_problem(args.problem_file)
    return replace(cfg, **over)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        results = run_study(cfg)
    except (ConfigError, ExpressionError, MeshError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StudyError as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        return 1
    for res in results:
        print(res.to_markdown())
    return 0


if __name__ == "__main__":
    sys.exit(main())
