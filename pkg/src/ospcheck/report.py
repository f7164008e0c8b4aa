"""Grid scans over the coupling and single-point checks, assembled into
self-describing, byte-reproducible reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .config import WEAK_CONDITION, ConfigError, PhysicalParams, RenormConstants
from .decompositions import Convention
from .greens import Envelope, EnvelopeEvaluator, h_bound_closed, sign_of_h
from .ospforms import (
    QuadratureScheme,
    ScalarIntegrals,
    TestFunction,
    assemble_osp_matrix,
    check_osp_small_n,
    psd_check,
    scalar_integrals,
    closed_form_bounds,
)
from .partitions import tree_counts

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
THREADS_ENV = "OSPCHECK_THREADS"


@dataclass(frozen=True)
class ScanSpec:
    lambda_min: float = 0.01
    lambda_max: float = 0.16
    steps: int = 16
    n_max: int = 13
    mass: float = 1.0
    sigma: tuple[float, ...] = (1.0,)
    tol: float = 1e-10
    mode: Envelope = Envelope.MIN
    convention: Convention = Convention.RECONSTRUCTION

    def __post_init__(self) -> None:
        if not (0 < self.lambda_min <= self.lambda_max):
            raise ConfigError("need 0 < lambda_min <= lambda_max")
        if not isinstance(self.steps, int) or self.steps < 1:
            raise ConfigError("steps must be an integer >= 1")
        if not isinstance(self.n_max, int) or self.n_max < 1 or self.n_max % 2 == 0:
            raise ConfigError("n_max must be an odd integer >= 1")
        if self.mass <= 0:
            raise ConfigError("mass must be positive")
        if not self.sigma or any(s <= 0 for s in self.sigma):
            raise ConfigError("sigma widths must be positive")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")

    def grid(self) -> list[float]:
        if self.steps == 1:
            return [self.lambda_min]
        return [round(float(x), 12) for x in np.linspace(self.lambda_min, self.lambda_max, self.steps)]

    def family(self) -> list[TestFunction]:
        return [TestFunction(1.0, s) for s in self.sigma]

    def echo(self) -> dict[str, Any]:
        d = asdict(self)
        d["sigma"] = list(self.sigma)
        d["mode"] = self.mode.value
        d["convention"] = self.convention.value
        return d


def _f(x) -> float:
    return float(x)


def evaluate_point(
    lam: float,
    spec: ScanSpec,
    constants: RenormConstants,
    integrals: Optional[ScalarIntegrals] = None,
    ns: Optional[Sequence[int]] = None,
    include_matrix: bool = False,
) -> list[dict[str, Any]]:
    """All records for one coupling value, one per odd n <= n_max."""
    params = PhysicalParams(lam, spec.mass)
    ev = EnvelopeEvaluator.create(params, constants, max(spec.n_max, 3))
    family = spec.family()
    scheme = QuadratureScheme(rel_tol=spec.tol)
    uniform = len(family) == 1
    if integrals is None or spec.mode is Envelope.MAX:
        integrals = scalar_integrals(family, ev, spec.mode, scheme)
    weak = params.in_weak_range
    out = []
    for n in ns or range(1, spec.n_max + 1, 2):
        rec: dict[str, Any] = {
            "lambda": lam,
            "n": n,
            "range_flag": params.range_flag,
            "in_weak_range": weak,
            "mode": spec.mode.value,
            "label": "bound-envelope verification",
        }
        tags = {"lambda": "input"}
        failures: list[str] = []
        if n >= 3:
            sb = ev.bounds[n]
            tc = tree_counts(n)
            rec["delta_min"] = _f(sb.d_min)
            rec["delta_max"] = _f(sb.d_max)
            rec["tree_count"] = tc.t_n
            rec["tree_count_tilde"] = tc.t_tilde_n
            rec["closed_prefactor_min"] = _f(h_bound_closed(n, ev.bounds))
            tags.update(delta_min="closed-form", delta_max="closed-form", tree_count="exact",
                        tree_count_tilde="exact", closed_prefactor_min="closed-form")
        if n <= 5:
            chk = check_osp_small_n(n, family, ev, spec.mode, spec.convention, scheme, integrals=integrals)
            rec["small_n"] = {
                "form": chk.form,
                "lower_bound": chk.lower_bound,
                "margin": chk.margin,
                "tolerance": chk.tolerance,
                "form_factor": chk.form_factor,
                "bound_factor": chk.bound_factor,
                "norm_sq": chk.integrals.norm_sq,
                "g1": chk.integrals.g1,
                "quadrature_error": chk.integrals.error,
                "passed": chk.passed,
                "diagnostics": chk.diagnostics,
            }
            tags.update(form="quadrature", lower_bound="quadrature", margin="quadrature",
                        form_factor="closed-form", bound_factor="closed-form", norm_sq="quadrature",
                        g1="quadrature")
            if not chk.passed:
                failures.append(f"small-n margin {chk.margin:.6g} below -{chk.tolerance:.3g}")
        else:
            tb = closed_form_bounds(n, ev.bounds)
            rec["closed_form"] = {
                "h": _f(tb.h),
                "h_hat": _f(tb.h_hat),
                "bracket_h": _f(tb.bracket_h),
                "bracket_h_hat": _f(tb.bracket_h_hat),
                "applicable": "h" if sign_of_h(n) > 0 else "h_hat",
            }
            tags.update(h="closed-form", h_hat="closed-form", bracket_h="closed-form", bracket_h_hat="closed-form")
            if not tb.h > 0:
                failures.append("h <= 0")
            if not tb.h_hat > 0:
                failures.append("h_hat <= 0")
        mat = assemble_osp_matrix(
            n, family, ev, spec.mode, spec.convention, scheme, integrals=integrals if uniform else None
        )
        verdict = psd_check(mat)
        gated = n <= 5
        rec["matrix"] = {
            "min_eigenvalue": verdict.min_eigenvalue,
            "min_eigenvalue_zero_filled": verdict.min_eigenvalue_zero_filled,
            "norm": verdict.norm,
            "psd": verdict.is_psd,
            "eigenvalue_gated": gated,
            "triangular_sum": verdict.triangular_sum,
        }
        if include_matrix:
            rec["matrix"]["entries"] = mat.as_dict()["entries"]
        tags.update(min_eigenvalue="quadrature", triangular_sum="quadrature")
        if gated and not verdict.is_psd:
            failures.append(f"principal block min eigenvalue {verdict.min_eigenvalue:.6g}")
        if verdict.triangular_sum < -verdict.tolerance:
            failures.append(f"triangular sum {verdict.triangular_sum:.6g} < 0")
        rec["passed"] = not failures
        rec["failures"] = failures
        rec["tags"] = tags
        out.append(rec)
    return out


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _sign_change(records: list[dict[str, Any]]) -> Optional[dict[str, float]]:
    """Bracket the first sign change of the n = 3 bound factor along the grid."""
    pts = [(r["lambda"], r["small_n"]["bound_factor"]) for r in records if r["n"] == 3]
    for (l0, v0), (l1, v1) in zip(pts, pts[1:]):
        if v0 > 0 >= v1:
            return {"lambda_below": l0, "lambda_above": l1, "step": l1 - l0}
    return None


def run_scan(spec: ScanSpec, constants: RenormConstants) -> dict[str, Any]:
    grid = spec.grid()
    family = spec.family()
    shared: Optional[ScalarIntegrals] = None
    if spec.mode is Envelope.MIN:
        # the MIN weight does not depend on the coupling
        ev0 = EnvelopeEvaluator.create(PhysicalParams(grid[0], spec.mass), constants, 3)
        shared = scalar_integrals(family, ev0, spec.mode, QuadratureScheme(rel_tol=spec.tol))
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        per_point = list(pool.map(lambda lam: evaluate_point(lam, spec, constants, shared), grid))
    records = [r for pt in per_point for r in pt]
    gated = [r for r in records if r["in_weak_range"]]
    failures = [
        {"lambda": r["lambda"], "n": r["n"], "reasons": r["failures"]} for r in gated if not r["passed"]
    ]
    warnings = [
        {"lambda": r["lambda"], "n": r["n"], "flag": "outside weak-condition range"}
        for r in records
        if not r["in_weak_range"]
    ]
    summary = {
        "records": len(records),
        "gated_records": len(gated),
        "failures": failures,
        "warnings": warnings,
        "all_gated_pass": not failures,
        "weak_condition": float(WEAK_CONDITION),
        "n3_sign_change": _sign_change(records) if spec.n_max >= 3 else None,
    }
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "ospcheck",
        "tool_version": __version__,
        "kind": "scan",
        "config": spec.echo(),
        "constants": constants.as_dict(),
        "provenance": {
            "defaulted_constants": list(constants.defaulted),
            "note": "defaults applied" if constants.defaulted else "all constants supplied",
        },
        "records": records,
        "summary": summary,
    }


def run_check(n: int, lam: float, spec: ScanSpec, constants: RenormConstants) -> dict[str, Any]:
    if n < 1 or n % 2 == 0:
        raise ConfigError(f"n must be an odd integer >= 1, got {n}")
    spec = ScanSpec(lam, lam, 1, max(n, 1), spec.mass, spec.sigma, spec.tol, spec.mode, spec.convention)
    (rec,) = evaluate_point(lam, spec, constants, ns=[n], include_matrix=True)
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "ospcheck",
        "tool_version": __version__,
        "kind": "check",
        "config": spec.echo(),
        "constants": constants.as_dict(),
        "provenance": {"defaulted_constants": list(constants.defaulted)},
        "record": rec,
    }


def to_json(report: dict[str, Any]) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _flatten(prefix: str, value: Any, out: dict[str, Any]) -> None:
    if isinstance(value, dict):
        for k in sorted(value):
            _flatten(f"{prefix}.{k}" if prefix else k, value[k], out)
    elif isinstance(value, list):
        out[prefix] = ";".join(map(str, value))
    else:
        out[prefix] = value


def records_to_csv(records: list[dict[str, Any]]) -> str:
    rows = []
    for r in records:
        flat: dict[str, Any] = {}
        _flatten("", {k: v for k, v in r.items() if k != "tags"}, flat)
        rows.append(flat)
    columns = sorted({c for row in rows for c in row}, key=lambda c: (c not in ("lambda", "n"), c))
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()
