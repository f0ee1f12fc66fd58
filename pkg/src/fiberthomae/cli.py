"""Command line entry point.

Exit codes: 0 all checks pass, 1 at least one failed, 2 invalid input,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import Config, load_config
from .curve import enumerate_differential_basis
from .divisors import enumerate_admissible, enumerate_all, r_minus_D, tau_profile
from .errors import FiberThomaeError, InvalidInput
from .report import exit_code, summary_csv, write_reports

log = logging.getLogger("fiberthomae")


def _emit(data, out: str | None):
    text = json.dumps(data, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_info(cfg: Config, args) -> int:
    curve = cfg.curve
    basis = enumerate_differential_basis(curve)
    _emit({
        "n": curve.n,
        "m": curve.m,
        "genus": curve.genus(),
        "branch_points": len(curve.branch_points),
        "min_separation": curve.min_separation(),
        "basis": [{"v": list(d.v), "l": d.l} for d in basis],
        "admissible_count": sum(1 for _ in enumerate_admissible(curve)),
        "config_hash": cfg.hash,
    }, None)
    return 0


def cmd_periods(cfg: Config, args) -> int:
    from .periods import compute_periods

    per = compute_periods(cfg.curve, tol=cfg.tolerances.integration)
    data = {"config_hash": cfg.hash, "curve": cfg.curve.to_json(), **per.to_json()}
    _emit(data, args.out)
    return 0


def cmd_check(cfg: Config, args) -> int:
    from .thomae import CHECK_ORDER, run_suite

    if args.fd_step is not None:
        if not args.fd_step > 0:
            raise InvalidInput("--fd-step must be positive")
        cfg = cfg.replace(tolerances=type(cfg.tolerances)(**{**vars(cfg.tolerances), "fd_step": args.fd_step}))
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if not args.tol_scale > 0:
        raise InvalidInput("--tol-scale must be positive")
    if args.what == "suite":
        checks = None
    elif args.what in CHECK_ORDER:
        checks = [args.what]
    else:
        raise InvalidInput(f"unknown check {args.what!r}; use 'suite' or one of {list(CHECK_ORDER)}")
    reports = run_suite(cfg, checks=checks, tol_scale=args.tol_scale)
    if args.out:
        write_reports(reports, args.out)
    sys.stdout.write(summary_csv(reports))
    return exit_code(reports)


def cmd_enumerate_beta(cfg: Config, args) -> int:
    curve = cfg.curve
    rows = []
    source = enumerate_admissible(curve) if args.admissible else enumerate_all(curve)
    for b in source:
        if args.limit is not None and len(rows) >= args.limit:
            break
        prof = tau_profile(curve, b)
        rows.append({
            "beta": [list(r) for r in b.entries],
            "r_minus_D": r_minus_D(curve, b),
            "admissible": all(t == 0 for t in prof.values()),
            "tau": {"".join(map(str, v)): t for v, t in prof.items()},
        })
    _emit(rows, None)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fiberthomae", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("info", help="genus, differential basis and admissible count")
    s.add_argument("config")
    s.set_defaults(func=cmd_info)

    s = sub.add_parser("periods", help="period matrices and diagnostics")
    s.add_argument("config")
    s.add_argument("--out")
    s.set_defaults(func=cmd_periods)

    s = sub.add_parser("check", help="run the suite or one named check")
    s.add_argument("what", help="'suite' or a check name")
    s.add_argument("config")
    s.add_argument("--out", help="JSON report path; a CSV summary is written next to it")
    s.add_argument("--tol-scale", type=float, default=1.0)
    s.add_argument("--fd-step", type=float)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("enumerate-beta", help="labellings with their tau profile")
    s.add_argument("config")
    s.add_argument("--limit", type=int)
    s.add_argument("--admissible", action="store_true", help="only admissible labellings")
    s.set_defaults(func=cmd_enumerate_beta)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which matches "invalid input"
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        return args.func(cfg, args)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FiberThomaeError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
