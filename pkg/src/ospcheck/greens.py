"""Pointwise envelopes for the propagator, the two-point function and the
connected (n+1)-point functions, plus the splitting-sequence bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .config import Number, PhysicalParams, RenormConstants
from .partitions import _check_odd, tree_counts

H2_MAX_EXPONENT = math.pi**2 / 54


class Envelope(str, Enum):
    MIN = "min"
    MAX = "max"


@dataclass(frozen=True)
class Momentum4:
    components: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        comps = tuple(float(c) for c in self.components)
        if len(comps) != 4 or not all(math.isfinite(c) for c in comps):
            raise ValueError("a Euclidean momentum has 4 finite components")
        object.__setattr__(self, "components", comps)

    @classmethod
    def zero(cls) -> "Momentum4":
        return cls((0.0, 0.0, 0.0, 0.0))

    @property
    def q2(self) -> float:
        return sum(c * c for c in self.components)

    def __add__(self, other: "Momentum4") -> "Momentum4":
        return Momentum4(tuple(a + b for a, b in zip(self.components, other.components)))


def propagator(q: Momentum4, m: float) -> float:
    return 1.0 / (q.q2 + m * m)


def h2_from_q2(q2: float, params: PhysicalParams, constants: RenormConstants, mode: Envelope) -> float:
    s = q2 + params.mass**2
    if mode is Envelope.MIN:
        return s
    lam = float(params.lam)
    return float(constants.gamma_max(lam)) * (s + 6 * lam * lam * s**H2_MAX_EXPONENT)


def h2_envelope(q: Momentum4, params: PhysicalParams, mode: Envelope, constants: Optional[RenormConstants] = None) -> float:
    # gamma_max depends on lambda only, so constants are optional here
    return h2_from_q2(q.q2, params, constants or RenormConstants(), mode)


@dataclass(frozen=True)
class SplitPair:
    d_min: Number
    d_max: Number


def splitting_bounds(n: int, params: PhysicalParams, constants: RenormConstants) -> SplitPair:
    _check_odd(n, 3)
    lam = params.lam
    c = constants
    if n == 3:
        d_min = 6 * lam / (1 + 9 * lam * (1 + 6 * lam * lam))
        d_max = 6 * lam / (1 + c.rho0 + lam * c.a0 + 6 * c.d0)
        return SplitPair(d_min, d_max)
    tree = 3 * lam * n * (n - 1)
    d_min = tree / (c.gamma_max(lam) + c.rho_max(lam) + lam * c.a_max(lam) + tree)
    d_max = tree / (1 + c.rho0 + lam * c.a0 + n * (n - 1) * c.d0)
    return SplitPair(d_min, d_max)


@dataclass(frozen=True)
class SplittingBounds:
    lam: Number
    table: dict[int, SplitPair]
    d0: Number = 0
    range_flag: str = "construction"

    @classmethod
    def build(cls, n_max: int, params: PhysicalParams, constants: RenormConstants) -> "SplittingBounds":
        table = {n: splitting_bounds(n, params, constants) for n in range(3, max(n_max, 3) + 1, 2)}
        return cls(params.lam, table, constants.d0, params.range_flag)

    def __getitem__(self, n: int) -> SplitPair:
        try:
            return self.table[n]
        except KeyError:
            raise KeyError(f"splitting bounds not tabulated for n={n}") from None

    @property
    def n_max(self) -> int:
        return max(self.table)

    @property
    def delta_infinity(self) -> Optional[Number]:
        """Large-n limit 3*lambda/d0 of the upper bound; None when d0 = 0."""
        if self.d0 > 0:
            return 3 * self.lam / self.d0
        return None


def sign_of_h(n: int) -> int:
    _check_odd(n)
    return 1 if (n - 1) // 2 % 2 == 0 else -1


def h_bound_closed(n: int, bounds: SplittingBounds, which: Envelope = Envelope.MIN) -> Number:
    """Momentum-independent prefactor of the n+1-point envelope.

    MIN gives prod over odd m <= n of delta_min(m) * T~_m; MAX uses delta_max
    and T_m instead.
    """
    _check_odd(n, 3)
    out: Number = 1
    for m in range(3, n + 1, 2):
        tc = tree_counts(m)
        if which is Envelope.MIN:
            out = out * bounds[m].d_min * tc.t_tilde_n
        else:
            out = out * bounds[m].d_max * tc.t_n
    return out


@dataclass(frozen=True)
class EnvelopeEvaluator:
    params: PhysicalParams
    constants: RenormConstants
    bounds: SplittingBounds

    @classmethod
    def create(cls, params: PhysicalParams, constants: RenormConstants, n_max: int = 13) -> "EnvelopeEvaluator":
        return cls(params, constants, SplittingBounds.build(n_max, params, constants))

    def h2(self, q: Momentum4, mode: Envelope) -> float:
        return h2_from_q2(q.q2, self.params, self.constants, mode)

    def h2_prop(self, q: Momentum4, mode: Envelope) -> float:
        """H^2 * Delta_F at q; identically 1 for the MIN envelope."""
        return self.h2(q, mode) * propagator(q, float(self.params.mass))

    def h2_prop_sq(self, q2: float, mode: Envelope) -> float:
        """Radial weight H^2 * Delta_F^2 entering the scalar integrals."""
        s = q2 + float(self.params.mass) ** 2
        return h2_from_q2(q2, self.params, self.constants, mode) / (s * s)


def _check_momenta(n: int, momenta: Sequence[Momentum4]) -> None:
    _check_odd(n, 3)
    if len(momenta) != n:
        raise ValueError(f"expected {n} momenta, got {len(momenta)}")


def h_bound_recursive(n: int, momenta: Sequence[Momentum4], evaluator: EnvelopeEvaluator, which: Envelope) -> float:
    _check_momenta(n, momenta)
    b = evaluator.bounds
    m = float(evaluator.params.mass)
    legs = [evaluator.h2_prop(q, which) for q in momenta]
    value = float(b[3].d_min if which is Envelope.MIN else b[3].d_max) * legs[0] * legs[1] * legs[2]
    total = momenta[0] + momenta[1] + momenta[2]
    for k in range(5, n + 1, 2):
        tc = tree_counts(k)
        if which is Envelope.MIN:
            factor = float(b[k].d_min) * tc.t_tilde_n
        else:
            factor = float(b[k].d_max) * tc.t_n
        # internal line carries the sum of the first k-2 momenta
        value = factor * propagator(total, m) * value * legs[k - 2] * legs[k - 1]
        total = total + momenta[k - 2] + momenta[k - 1]
    return value


def c_bound(n: int, momenta: Sequence[Momentum4], evaluator: EnvelopeEvaluator, which: Envelope) -> float:
    """Envelope of the tree term |C^{n+1}|.

    For n = 3 the tree term is 6*lambda times three two-point legs.
    """
    _check_momenta(n, momenta)
    lam = float(evaluator.params.lam)
    if n == 3:
        return 6 * lam * math.prod(evaluator.h2_prop(q, which) for q in momenta)
    tc = tree_counts(n)
    count = tc.t_tilde_n if which is Envelope.MIN else tc.t_n
    inner = h_bound_recursive(n - 2, momenta[: n - 2], evaluator, which)
    legs = evaluator.h2_prop(momenta[n - 2], which) * evaluator.h2_prop(momenta[n - 1], which)
    return 3 * lam * n * (n - 1) * count * inner * legs
