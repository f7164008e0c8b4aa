"""Hermitian-form quantities for factorized radial test functions.

Every value here is a bound-envelope evaluation: each connected factor is
replaced by its sign times a proven magnitude bound. Nothing is evaluated
against an actual solution of the equations of motion.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .config import Number
from .decompositions import Convention, FormalSum, classical_decomposition, tree_bracket
from .greens import Envelope, EnvelopeEvaluator, SplittingBounds, h_bound_closed, sign_of_h
from .partitions import _check_odd, tree_counts

S3_AREA = 2 * math.pi**2


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to converge."""


@dataclass(frozen=True)
class QuadratureScheme:
    rel_tol: float = 1e-10
    max_subdivisions: int = 200
    cutoff_ratio: float = 1e-18
    max_radius: float = 1e6


def _radial_cutoff(h: Callable[[float], float], scheme: QuadratureScheme) -> float:
    rs = np.concatenate([np.linspace(0.0, 4.0, 81)[1:], 4.0 * 2.0 ** np.arange(1, 64)])
    rs = rs[rs <= scheme.max_radius]
    vals = np.array([abs(h(r)) for r in rs])
    if not np.all(np.isfinite(vals)):
        raise QuadratureError("integrand is not finite on the radial grid")
    peak = vals.max()
    if peak == 0.0:
        return float(rs[0])
    small = vals < scheme.cutoff_ratio * peak
    # first radius after the peak beyond which the sampled integrand stays negligible
    below = np.flatnonzero(~small)
    last = below[-1]
    if last == len(rs) - 1:
        raise QuadratureError(
            f"non-convergence: integrand does not decay below {scheme.cutoff_ratio:g} of its peak "
            f"by r = {rs[-1]:g}"
        )
    return float(rs[last + 1])


def radial_integral_4d(g: Callable[[float], float], scheme: QuadratureScheme = QuadratureScheme()) -> tuple[float, float]:
    """Integrate a radial function over R^4: 2*pi^2 * int_0^inf g(r) r^3 dr."""

    def h(r: float) -> float:
        return g(r) * r**3

    cutoff = _radial_cutoff(h, scheme)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(
                h, 0.0, cutoff, epsabs=0.0, epsrel=scheme.rel_tol, limit=scheme.max_subdivisions
            )
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"non-convergence after {scheme.max_subdivisions} subdivisions: {exc}") from exc
    if value != 0.0 and err > scheme.rel_tol * abs(value) * 10:
        raise QuadratureError(f"error estimate {err:g} exceeds tolerance for value {value:g}")
    return S3_AREA * value, S3_AREA * err


@dataclass(frozen=True)
class TestFunction:
    """Radial test function f(q) = A * exp(-q^2 / sigma^2)."""

    __test__ = False  # not a pytest class

    amplitude: float = 1.0
    width: float = 1.0
    kind: str = "gaussian"

    def __post_init__(self) -> None:
        if self.kind != "gaussian":
            raise ValueError(f"unsupported test-function kind: {self.kind}")
        if not self.amplitude >= 0 or not self.width > 0:
            raise ValueError("amplitude must be >= 0 and width > 0")

    def __call__(self, r: float) -> float:
        return self.amplitude * math.exp(-(r * r) / (self.width * self.width))


@dataclass(frozen=True)
class ScalarIntegrals:
    norm_sq: float
    g1: float
    mode: Envelope
    error: float
    converged: bool = True


def scalar_integrals(
    f: TestFunction | Sequence[TestFunction],
    evaluator: EnvelopeEvaluator,
    mode: Envelope = Envelope.MIN,
    scheme: QuadratureScheme = QuadratureScheme(),
) -> ScalarIntegrals:
    """||f||^2 of the first function and G1 as the max over the family.

    The (-1)^(n-1) sign in front of G1^(n-1) is +1 for odd n and is dropped.
    """
    family = [f] if isinstance(f, TestFunction) else list(f)
    if not family:
        raise ValueError("empty test-function family")

    def weight(r: float) -> float:
        return evaluator.h2_prop_sq(r * r, mode)

    head = family[0]
    if head.amplitude == 0:
        norm_sq, e1 = 0.0, 0.0
    else:
        norm_sq, e1 = radial_integral_4d(lambda r: head(r) ** 2 * weight(r), scheme)
    g1, e2 = 0.0, 0.0
    for fn in family:
        if fn.amplitude == 0:
            continue
        v, e = radial_integral_4d(lambda r, fn=fn: abs(fn(r)) * weight(r), scheme)
        if v > g1:
            g1, e2 = v, e
    return ScalarIntegrals(norm_sq, g1, mode, max(e1, e2))


# --------------------------------------------------------------------------
# envelope factors


def profile_envelope(profile_sum: FormalSum, bounds: SplittingBounds) -> float:
    """Lower envelope of sum_J C_J prod_l H^{j_l+1} in units of ||f||^2 G1^(n-1).

    A term of positive overall sign takes every block at its minimal
    magnitude; a negative term takes every block at its maximal magnitude.
    """
    total = 0.0
    for profile, coeff in profile_sum.items():
        sign = 1
        for j in profile.parts:
            if j > 1:
                sign *= sign_of_h(j)
        which = Envelope.MIN if sign > 0 else Envelope.MAX
        mag = 1.0
        for j in profile.parts:
            if j > 1:
                mag *= float(h_bound_closed(j, bounds, which))
        total += sign * float(coeff) * mag
    return total


@dataclass(frozen=True)
class ClosedFormBounds:
    n: int
    h: Number
    h_hat: Number
    bracket_h: Number
    bracket_h_hat: Number
    product_full: Number
    product_short: Number

    @property
    def applicable(self) -> Number:
        """The bound that applies for the sign of H^{n+1}."""
        return self.h if sign_of_h(self.n) > 0 else self.h_hat


def closed_form_bounds(n: int, bounds: SplittingBounds) -> ClosedFormBounds:
    _check_odd(n, 7)
    full = h_bound_closed(n, bounds)
    short = h_bound_closed(n - 2, bounds)
    br_h = tree_bracket(n - 2, bounds[n - 2].d_max)
    br_hat = tree_bracket(n, bounds[n].d_max)
    h = _half((n - 2) * (n - 3)) * full * br_h
    h_hat = _half(n * (n - 1) * tree_counts(n).t_tilde_n) * br_hat * short
    return ClosedFormBounds(n, h, h_hat, br_h, br_hat, full, short)


def _half(k: int) -> int:
    # products of consecutive integers are even
    return k // 2


def form_factor(n: int, bounds: SplittingBounds, convention: Convention = Convention.RECONSTRUCTION) -> float:
    """Lower bound c with <f_(M), tau^{n+1} f_(N)> >= c ||f||^2 G1^(n-1).

    Orders n <= 5 use the profile envelope of the decomposition; from n = 7
    on the closed-form bound for the sign of H^{n+1} is used.
    """
    _check_odd(n)
    if n == 1:
        return 1.0
    if n <= 5:
        return profile_envelope(classical_decomposition(n, convention), bounds)
    return float(closed_form_bounds(n, bounds).applicable)


# --------------------------------------------------------------------------
# small-n checks


@dataclass(frozen=True)
class SmallNCheck:
    n: int
    lam: float
    form: float
    lower_bound: float
    margin: float
    scale: float
    tolerance: float
    form_factor: float
    bound_factor: float
    in_weak_range: bool
    passed: bool
    integrals: ScalarIntegrals
    diagnostics: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        if not self.in_weak_range:
            return "outside weak condition"
        return "pass" if self.passed else "fail"


def small_n_bound_factor(n: int, bounds: SplittingBounds) -> Number:
    """Right-hand side coefficients of the n <= 5 inequalities."""
    lam = bounds.lam
    if n == 1:
        return 0
    if n == 3:
        return 1 - 6 * lam
    d = bounds
    return d[5].d_min * d[3].d_min * tree_counts(5).t_tilde_n + 10 * (1 - 6 * lam)


def check_osp_small_n(
    n: int,
    family: TestFunction | Sequence[TestFunction],
    evaluator: EnvelopeEvaluator,
    mode: Envelope = Envelope.MIN,
    convention: Convention = Convention.RECONSTRUCTION,
    scheme: QuadratureScheme = QuadratureScheme(),
    rel_tol: float = 1e-8,
    integrals: Optional[ScalarIntegrals] = None,
) -> SmallNCheck:
    if n not in (1, 3, 5):
        raise ValueError(f"small-n check covers n in {{1, 3, 5}}, got {n}")
    si = integrals or scalar_integrals(family, evaluator, mode, scheme)
    units = si.norm_sq * si.g1 ** (n - 1)
    bounds = evaluator.bounds
    ff = form_factor(n, bounds, convention)
    bf = float(small_n_bound_factor(n, bounds))
    form = ff * units
    lower = bf * units
    scale = units * max(1.0, abs(ff), abs(bf))
    tol = rel_tol * scale
    margin = form - lower
    weak = evaluator.params.in_weak_range
    passed = margin >= -tol and lower >= -tol
    diagnostics = {}
    if n > 1 and convention is not Convention.SET_PARTITION:
        sp = form_factor(n, bounds, Convention.SET_PARTITION)
        diagnostics = {"set_partition_form_factor": sp, "set_partition_margin": (sp - bf) * units}
    return SmallNCheck(
        n, float(evaluator.params.lam), form, lower, margin, scale, tol, ff, bf, weak, passed, si, diagnostics
    )


# --------------------------------------------------------------------------
# matrices


@dataclass(frozen=True)
class OspMatrix:
    n: int
    entries: dict[tuple[int, int], float]

    def defined(self) -> list[tuple[int, int]]:
        return sorted(self.entries)

    def is_absent(self, M: int, N: int) -> bool:
        return M + N > self.n + 1

    def dense(self) -> np.ndarray:
        """n x n array with parity zeros and absent entries filled by 0."""
        a = np.zeros((self.n, self.n))
        for (M, N), v in sorted(self.entries.items()):
            a[M - 1, N - 1] = v
        return a

    def principal_block(self) -> np.ndarray:
        # indices whose diagonal entry is defined: M <= (n+1)/2
        size = (self.n + 1) // 2
        return self.dense()[:size, :size]

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "entries": {f"{M},{N}": v for (M, N), v in sorted(self.entries.items())},
            "absent": [f"{M},{N}" for M in range(1, self.n + 1) for N in range(1, self.n + 1) if M + N > self.n + 1],
        }


def assemble_osp_matrix(
    n: int,
    family: TestFunction | Sequence[TestFunction],
    evaluator: EnvelopeEvaluator,
    mode: Envelope = Envelope.MIN,
    convention: Convention = Convention.RECONSTRUCTION,
    scheme: QuadratureScheme = QuadratureScheme(),
    integrals: Optional[ScalarIntegrals] = None,
) -> OspMatrix:
    """Entries (M, N) with M + N <= n + 1, envelope of <f_(M), tau^{M+N} f_(N)>.

    Slot M supplies the squared function; G1 is the max over the family.
    Parity-mismatched entries are stored as 0. Precomputed ``integrals`` are
    used for every slot and are only valid for a uniform family.
    """
    _check_odd(n)
    family = [family] if isinstance(family, TestFunction) else list(family)
    if not family:
        raise ValueError("empty test-function family")
    # widths cycle over the slots when fewer functions than slots are given
    slots = [family[i % len(family)] for i in range(n)]
    cache: dict[int, ScalarIntegrals] = {}
    factors: dict[int, float] = {}
    entries: dict[tuple[int, int], float] = {}
    for M in range(1, n + 1):
        for N in range(1, n + 2 - M):
            if (M - N) % 2:
                entries[(M, N)] = 0.0
                continue
            order = M + N - 1
            if M not in cache:
                cache[M] = integrals or scalar_integrals([slots[M - 1], *family], evaluator, mode, scheme)
            if order not in factors:
                factors[order] = form_factor(order, evaluator.bounds, convention)
            si = cache[M]
            entries[(M, N)] = factors[order] * si.norm_sq * si.g1 ** (order - 1)
    return OspMatrix(n, entries)


@dataclass(frozen=True)
class PsdVerdict:
    min_eigenvalue: float
    min_eigenvalue_zero_filled: float
    norm: float
    is_psd: bool
    triangular_sum: float
    tolerance: float


def psd_check(matrix: OspMatrix, rel_tol: float = 1e-10) -> PsdVerdict:
    """Eigenvalue verdict on the fully defined principal block.

    The zero-filled full matrix is reported too; its eigenvalues are not a
    meaningful test because absent diagonal entries pin them below zero.
    """
    block = matrix.principal_block()
    dense = matrix.dense()
    norm = float(np.linalg.norm(dense))
    lam_block = float(np.linalg.eigvalsh(block).min())
    lam_full = float(np.linalg.eigvalsh(dense).min())
    tri = math.fsum(v for _, v in sorted(matrix.entries.items()))
    tol = rel_tol * norm
    return PsdVerdict(lam_block, lam_full, norm, lam_block >= -tol, tri, tol)

