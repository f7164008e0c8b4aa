"""Command-line entry point: ``ospcheck {scan,check,partitions,audit}``.

Exit codes: 0 all gated checks pass, 1 positivity failure for a coupling
below 1/6, 2 configuration or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from .config import RENORM_KEYS, ConfigError, constants_from_mapping, parse_document
from .decompositions import CSV_COLUMNS, Convention, identity_audit
from .greens import Envelope
from .partitions import OracleScaleError, enumerate_odd_profiles, multinomial_count, set_partition_count
from .report import ScanSpec, records_to_csv, run_check, run_scan, to_json

log = logging.getLogger("ospcheck")

EXIT_OK, EXIT_POSITIVITY, EXIT_CONFIG = 0, 1, 2

SCAN_KEYS = ("lambda_min", "lambda_max", "steps", "n_max", "mass", "sigma", "tol", "mode", "convention")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mass", type=float, default=1.0, help="mass m > 0 (default: 1)")
    p.add_argument("--sigma", type=float, action="append", help="test-function width; repeat for per-slot widths")
    p.add_argument("--tol", type=float, default=1e-10, help="quadrature relative tolerance")
    p.add_argument("--mode", choices=[e.value for e in Envelope], default="min", help="H^2 envelope in the weights")
    p.add_argument(
        "--convention",
        choices=[c.value for c in Convention],
        default=Convention.RECONSTRUCTION.value,
        help="coefficient convention for the n <= 5 forms",
    )
    p.add_argument("--config", help="JSON/YAML key/value file; its values override flags")
    p.add_argument("--out", help="write the report here instead of standard output")
    p.add_argument("--format", choices=["json", "csv"], default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ospcheck", description="Bound-envelope positivity checks for the phi^4_4 hierarchy."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    scan = sub.add_parser("scan", help="scan a coupling grid")
    scan.add_argument("--lambda-min", type=float, default=0.01)
    scan.add_argument("--lambda-max", type=float, default=0.16)
    scan.add_argument("--steps", type=int, default=16)
    scan.add_argument("--n-max", type=int, default=13)
    _add_common(scan)

    check = sub.add_parser("check", help="check one (n, lambda) point")
    check.add_argument("n", type=int)
    check.add_argument("--lambda", dest="lam", type=float, default=0.04)
    _add_common(check)

    parts = sub.add_parser("partitions", help="odd profiles of n with their coefficients (CSV)")
    parts.add_argument("n", type=int)
    parts.add_argument("--k", type=int, default=None)

    audit = sub.add_parser("audit", help="decomposition identity audit")
    audit.add_argument("n", type=int)
    audit.add_argument("--out")
    audit.add_argument("--format", choices=["json", "csv"], default="json")
    return parser


def _settings(args: argparse.Namespace, extra: Sequence[str] = ()) -> tuple[dict[str, Any], Any]:
    settings: dict[str, Any] = {
        "mass": args.mass,
        "sigma": args.sigma or [1.0],
        "tol": args.tol,
        "mode": args.mode,
        "convention": args.convention,
    }
    for key in ("lambda_min", "lambda_max", "steps", "n_max"):
        if hasattr(args, key):
            settings[key] = getattr(args, key)
    if getattr(args, "lam", None) is not None:
        settings["lambda"] = args.lam
    doc: dict[str, Any] = {}
    if args.config:
        doc = parse_document(Path(args.config))
        allowed = set(SCAN_KEYS) | set(RENORM_KEYS) | set(extra) | {"out", "format"}
        unknown = sorted(set(doc) - allowed)
        if unknown:
            raise ConfigError(f"unknown keys: {', '.join(unknown)}")
        for key, value in doc.items():
            if key in RENORM_KEYS:
                continue
            if key == "out":
                args.out = value
            elif key == "format":
                args.format = value
            else:
                settings[key] = value
    if not isinstance(settings["sigma"], (list, tuple)):
        settings["sigma"] = [settings["sigma"]]
    return settings, constants_from_mapping(doc)


def _spec(settings: dict[str, Any]) -> ScanSpec:
    try:
        return ScanSpec(
            lambda_min=float(settings.get("lambda_min", settings.get("lambda", 0.01))),
            lambda_max=float(settings.get("lambda_max", settings.get("lambda", 0.16))),
            steps=settings.get("steps", 1),
            n_max=settings.get("n_max", 1),
            mass=float(settings["mass"]),
            sigma=tuple(float(s) for s in settings["sigma"]),
            tol=float(settings["tol"]),
            mode=Envelope(settings["mode"]),
            convention=Convention(settings["convention"]),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise ConfigError(f"cannot write {out}: {exc}") from exc
    else:
        sys.stdout.write(text)


def cmd_scan(args: argparse.Namespace) -> int:
    settings, constants = _settings(args)
    spec = _spec(settings)
    report = run_scan(spec, constants)
    text = to_json(report) if args.format == "json" else records_to_csv(report["records"])
    _emit(text, args.out)
    s = report["summary"]
    stream = sys.stdout if args.out else sys.stderr
    grid = spec.grid()
    print(
        f"scan: {s['records']} records over lambda in [{grid[0]}, {grid[-1]}] ({len(grid)} points), "
        f"n <= {spec.n_max}; gated failures: {len(s['failures'])}; "
        f"outside weak condition: {len(s['warnings'])}",
        file=stream,
    )
    if s["n3_sign_change"]:
        sc = s["n3_sign_change"]
        print(f"n=3 bound factor changes sign between lambda={sc['lambda_below']} and {sc['lambda_above']}", file=stream)
    for f in s["failures"]:
        print(f"FAIL lambda={f['lambda']} n={f['n']}: {'; '.join(f['reasons'])}", file=stream)
    return EXIT_OK if s["all_gated_pass"] else EXIT_POSITIVITY


def cmd_check(args: argparse.Namespace) -> int:
    if args.n < 1 or args.n % 2 == 0:
        raise ConfigError(f"parity: n must be an odd integer >= 1, got {args.n}")
    settings, constants = _settings(args, extra=("lambda",))
    lam = float(settings["lambda"])
    spec = _spec({**settings, "lambda_min": lam, "lambda_max": lam, "n_max": max(args.n, 1)})
    report = run_check(args.n, lam, spec, constants)
    rec = report["record"]
    if args.out or args.format == "csv":
        text = to_json(report) if args.format == "json" else records_to_csv([rec])
        _emit(text, args.out)
    stream = sys.stdout if (args.out or args.format == "json") else sys.stderr
    lines = [f"n={rec['n']} lambda={rec['lambda']} range={rec['range_flag']}"]
    if "small_n" in rec:
        sn = rec["small_n"]
        lines.append(f"  form={sn['form']:.10g} lower_bound={sn['lower_bound']:.10g} margin={sn['margin']:.6g}")
    if "closed_form" in rec:
        th = rec["closed_form"]
        lines.append(
            f"  h={th['h']:.10g} (bracket {th['bracket_h']:.6g})  h_hat={th['h_hat']:.10g} "
            f"(bracket {th['bracket_h_hat']:.6g})  applicable={th['applicable']}"
        )
    m = rec["matrix"]
    lines.append(f"  matrix: min eigenvalue {m['min_eigenvalue']:.6g}, triangular sum {m['triangular_sum']:.10g}")
    lines.append("  verdict: " + ("pass" if rec["passed"] else "fail: " + "; ".join(rec["failures"])))
    if not args.out and args.format == "json":
        sys.stdout.write(to_json(report))
        stream = sys.stderr
    print("\n".join(lines), file=stream)
    if rec["in_weak_range"] and not rec["passed"]:
        return EXIT_POSITIVITY
    return EXIT_OK


def cmd_partitions(args: argparse.Namespace) -> int:
    try:
        profiles = enumerate_odd_profiles(args.n, args.k)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["profile", "k", "set_partition_count", "multinomial"])
    for p in profiles:
        w.writerow([p.label(), p.k, set_partition_count(p), multinomial_count(p)])
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_audit(args: argparse.Namespace) -> int:
    try:
        audit = identity_audit(args.n)
    except (OracleScaleError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if args.format == "json":
        text = json.dumps(audit.as_dict(), indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for row in audit.rows:
            w.writerow(row.as_dict())
        text = buf.getvalue()
    _emit(text, args.out)
    # audits inform and never gate
    return EXIT_OK


COMMANDS = {"scan": cmd_scan, "check": cmd_check, "partitions": cmd_partitions, "audit": cmd_audit}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
