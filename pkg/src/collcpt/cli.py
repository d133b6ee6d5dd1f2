"""Command-line entry point: ``collcpt preset|scan|check``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .checks import run_checks
from .params import CPTError, NumericalError, SystemParams
from .scan import InvalidSpecError, ScanSpec, Sweep, presets, run_scan, QUANTITIES, ROUTES

EXIT_INVALID = 2
EXIT_NUMERICAL = 3

DEFAULTS = dict(omega2=5.0, omega3=5.0)


def parse_assignments(items: list[str]) -> SystemParams:
    values = dict(DEFAULTS)
    for item in items:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep:
            raise InvalidSpecError(f"--set expects param=value, got {item!r}")
        try:
            if key in ("N", "n_atoms"):
                values["n_atoms"] = int(raw)
            elif key == "nbar":
                values["nbar2"] = values["nbar3"] = float(raw)
            elif key in SystemParams.field_names():
                values[key] = float(raw)
            else:
                raise InvalidSpecError(f"unknown parameter {key!r}")
        except ValueError:
            raise InvalidSpecError(f"bad value for {key}: {raw!r}") from None
    try:
        return SystemParams(**values)
    except CPTError as exc:
        raise InvalidSpecError(str(exc)) from None


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader went away (e.g. `| head`); silence the interpreter's flush at exit
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="collcpt", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preset", help="run a named reference scan")
    p.add_argument("name", choices=sorted(presets()))
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--jobs", type=int, default=1)

    s = sub.add_parser("scan", help="run a scan described by flags")
    s.add_argument("--quantity", required=True, choices=sorted(QUANTITIES))
    s.add_argument("--route", choices=ROUTES)
    s.add_argument("--sweep", action="append", default=[], metavar="VAR:START:STOP:COUNT[:log]")
    s.add_argument("--set", action="append", default=[], metavar="PARAM=VALUE", dest="assignments")
    s.add_argument("--out", help="output path (default: stdout)")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--jobs", type=int, default=1)

    sub.add_parser("check", help="run the cross-route consistency suite")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "check":
            results = run_checks()
            width = max(len(r.name) for r in results)
            for r in results:
                print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.seconds:6.2f}s  {r.detail}")
            return 0 if all(r.passed for r in results) else EXIT_NUMERICAL
        if args.command == "preset":
            spec = presets()[args.name]
        else:
            if not 1 <= len(args.sweep) <= 2:
                raise InvalidSpecError("give one or two --sweep options")
            spec = ScanSpec(
                quantity=args.quantity,
                route=args.route,
                sweeps=tuple(Sweep.parse(t) for t in args.sweep),
                fixed=parse_assignments(args.assignments),
                tol=args.tol,
            )
        _emit(run_scan(spec, jobs=args.jobs), args.out)
        return 0
    except NumericalError as exc:
        print(f"collcpt: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (CPTError, ValueError) as exc:
        print(f"collcpt: invalid spec: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
