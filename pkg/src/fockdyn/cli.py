"""Command-line entry point: ``fockdyn {norms,classify,probe,report}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .runner import aggregate, execute

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COMPUTE = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fockdyn",
        description="Norms, iterate dynamics and closed-form verdicts for operators on weighted Fock spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("norms", "monomial norms: closed form against quadrature or the sup-norm grid"),
        ("classify", "closed-form verdicts for each grid cell"),
        ("probe", "numerical probes (orbit, gelfand, cesaro, ritt, hypercyclicity, kbound, crosscheck)"),
    ):
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--nmax", type=int, help="override nmax (and norms_nmax)")
        p.add_argument("--tol", type=float, help="override the norm tolerance")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for grid cells")
    rep = sub.add_parser("report", help="aggregate earlier summaries in --out into report.json")
    rep.add_argument("--out", required=True, help="directory holding earlier artifacts")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out = Path(args.out)
    if args.command == "report":
        try:
            report = aggregate(out)
        except FileNotFoundError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        failed = [k for k, v in report["status"].items() if v != "ok"]
        print(f"report.json written ({', '.join(report['commands'])})")
        return EXIT_COMPUTE if failed else EXIT_OK
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg = load_config(args.config).with_overrides(args.nmax, args.tol)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    ok = execute(args.command, cfg, out, args.jobs)
    print(f"{args.command}: {len(cfg.grid())} cell(s) -> {out}" + ("" if ok else " (computational failure)"))
    return EXIT_OK if ok else EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
