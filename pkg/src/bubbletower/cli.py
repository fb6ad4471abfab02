"""Command line entry point: one subcommand per verification suite.

    bubbletower <suite> [--config FILE] [--out DIR] [--seed N] [--tol T]
                        [--dims 3,4] [--k 1,2] [--eps-start E --eps-factor F --eps-count C]
                        [--domain ball|box] [--grid RES] [--samples M]

Exit status: 0 when every case passes, 1 when a case fails, 2 on usage errors.
``BUBBLETOWER_THREADS`` sets how many cases run at once.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields
from pathlib import Path

from .errors import InvalidArgument
from .suites import SUITES, SuiteConfig, parse_config_text, run_suite


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bubbletower",
                                     description="Run a numerical verification suite for bubble towers.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value file; flags override it")
    common.add_argument("--out", help="directory for report.txt and <suite>.csv")
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float, help="relative quadrature tolerance")
    common.add_argument("--dims", type=_int_list, help="dimensions, e.g. 3,4,5")
    common.add_argument("--k", dest="ks", type=_int_list, help="numbers of bubbles, e.g. 1,2")
    common.add_argument("--eps-start", type=float)
    common.add_argument("--eps-factor", type=float)
    common.add_argument("--eps-count", type=int)
    common.add_argument("--domain", choices=("ball", "box"))
    common.add_argument("--grid", type=int, help="finest grid resolution")
    common.add_argument("--samples", type=int, help="random samples per case")
    common.add_argument("--quiet", action="store_true", help="print the verdict lines only")
    sub = parser.add_subparsers(dest="suite", required=True, metavar="suite")
    for name in SUITES:
        sub.add_parser(name, parents=[common], help=f"run the {name} suite")
    return parser


def config_from_args(args) -> SuiteConfig:
    values = {}
    if args.config is not None:
        values.update(parse_config_text(args.config.read_text()))
    values.pop("suite", None)
    for f in fields(SuiteConfig):
        if f.name == "suite":
            continue
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return SuiteConfig(args.suite, **values)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (InvalidArgument, OSError) as exc:
        parser.error(str(exc))
    try:
        report = run_suite(cfg)
    except InvalidArgument as exc:
        parser.error(str(exc))
    text = report.text()
    if args.quiet:
        text = "\n".join(line for line in text.splitlines()
                         if line.startswith(("verdict", "criterion"))) + "\n"
    sys.stdout.write(text)
    return 0 if report.verdict else 1


if __name__ == "__main__":
    sys.exit(main())
