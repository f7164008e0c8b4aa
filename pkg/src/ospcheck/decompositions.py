"""Connected-parts decompositions of the non-connected function tau^{n+1}
as exact formal sums over odd profiles, and the tree-term lower bound."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

from .config import Number
from .greens import Envelope, EnvelopeEvaluator, Momentum4, c_bound, sign_of_h
from .partitions import (
    OddProfile,
    OracleScaleError,
    _check_odd,
    enumerate_odd_profiles,
    multinomial_count,
    set_partition_count,
)

AUDIT_GUARD = 13


class Convention(str, Enum):
    """Coefficient attached to each profile.

    SET_PARTITION  labeled set-partition count (with automorphism factor)
    MULTINOMIAL    plain n!/prod(j!) as written in the general formula
    RECONSTRUCTION tau^{n+1} = T1 + sum_I C_I prod tau^{i_l+1}, applied
                   recursively with set-partition C_I; reproduces the
                   worked n = 5 expansion term by term
    """

    SET_PARTITION = "set_partition"
    MULTINOMIAL = "multinomial"
    RECONSTRUCTION = "reconstruction"


def coefficient(profile: OddProfile, convention: Convention) -> int:
    if convention is Convention.MULTINOMIAL:
        return multinomial_count(profile)
    return set_partition_count(profile)


@dataclass(frozen=True)
class FormalSum:
    terms: Mapping[OddProfile, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        clean = {p: Fraction(c) for p, c in self.terms.items() if c != 0}
        ns = {p.n for p in clean}
        if len(ns) > 1:
            raise ValueError(f"profiles of mixed order in one formal sum: {sorted(ns)}")
        object.__setattr__(self, "terms", dict(sorted(clean.items(), key=lambda kv: kv[0].parts, reverse=True)))

    @classmethod
    def single(cls, profile: OddProfile, coeff: int | Fraction = 1) -> "FormalSum":
        return cls({profile: Fraction(coeff)})

    @property
    def n(self) -> int | None:
        return next(iter(self.terms)).n if self.terms else None

    def __getitem__(self, profile: OddProfile) -> Fraction:
        return self.terms.get(profile, Fraction(0))

    def __iter__(self) -> Iterator[OddProfile]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def items(self):
        return self.terms.items()

    def __add__(self, other: "FormalSum") -> "FormalSum":
        out = dict(self.terms)
        for p, c in other.terms.items():
            out[p] = out.get(p, Fraction(0)) + c
        return FormalSum(out)

    def __sub__(self, other: "FormalSum") -> "FormalSum":
        return self + other.scale(-1)

    def scale(self, factor: int | Fraction) -> "FormalSum":
        return FormalSum({p: c * factor for p, c in self.terms.items()})

    def as_plain(self) -> dict[str, str]:
        return {p.label(): str(c) for p, c in self.terms.items()}


def product(sums: Iterable[FormalSum]) -> FormalSum:
    """Product over disjoint momentum sets: the block lists concatenate.

    Only an odd number of odd-order factors gives an odd total order, so the
    product is taken over all factors at once rather than pairwise.
    """
    out: dict[tuple[int, ...], Fraction] = {}
    factors = [list(s.items()) for s in sums]
    for combo in itertools.product(*factors):
        parts = tuple(sorted((j for p, _ in combo for j in p.parts), reverse=True))
        coeff = math.prod((c for _, c in combo), start=Fraction(1))
        out[parts] = out.get(parts, Fraction(0)) + coeff
    return FormalSum({OddProfile(p): c for p, c in out.items()})


@lru_cache(maxsize=None)
def _classical(n: int, convention: Convention) -> FormalSum:
    if convention is Convention.RECONSTRUCTION:
        return _reconstructed(n)
    return FormalSum({p: Fraction(coefficient(p, convention)) for p in enumerate_odd_profiles(n)})


@lru_cache(maxsize=None)
def _reconstructed(n: int) -> FormalSum:
    if n == 1:
        return FormalSum.single(OddProfile((1,)))
    out = FormalSum.single(OddProfile((n,)))
    for triple in enumerate_odd_profiles(n, 3):
        c = set_partition_count(triple)
        out = out + product(_reconstructed(i) for i in triple.parts).scale(c)
    return out


def classical_decomposition(n: int, convention: Convention = Convention.SET_PARTITION) -> FormalSum:
    _check_odd(n)
    return _classical(n, convention)


@dataclass(frozen=True)
class ThreePartSplit:
    t1: FormalSum
    t2: FormalSum
    t3: FormalSum

    def total(self) -> FormalSum:
        return self.t1 + self.t2 + self.t3


def three_part_split(n: int, convention: Convention = Convention.SET_PARTITION) -> ThreePartSplit:
    """Split by block count: k = 1, k = 3 and k >= 5."""
    full = classical_decomposition(n, convention)
    strata: dict[str, dict[OddProfile, Fraction]] = {"t1": {}, "t2": {}, "t3": {}}
    for p, c in full.items():
        key = "t1" if p.k == 1 else "t2" if p.k == 3 else "t3"
        strata[key][p] = c
    return ThreePartSplit(*(FormalSum(strata[k]) for k in ("t1", "t2", "t3")))


def _tilde(i: int, convention: Convention) -> FormalSum:
    # tau^{i+1} with its connected (k = 1) term removed
    return classical_decomposition(i, convention) - FormalSum.single(OddProfile((i,)))


def tree_reconstruction_rhs(
    n: int, convention: Convention = Convention.SET_PARTITION, strip_first: bool = False
) -> FormalSum:
    """Expand sum over three-block profiles I of C_I * prod_l tau^{i_l+1}.

    With ``strip_first`` the first (largest) factor is replaced by
    tau - T1, the marked expansion used for the k >= 5 stratum.
    """
    _check_odd(n, 5)
    out = FormalSum()
    for triple in enumerate_odd_profiles(n, 3):
        c = coefficient(triple, convention)
        i1, i2, i3 = triple.parts
        first = _tilde(i1, convention) if strip_first else classical_decomposition(i1, convention)
        if not first.terms:
            continue
        prod = product((first, classical_decomposition(i2, convention), classical_decomposition(i3, convention)))
        out = out + prod.scale(c)
    return out


@dataclass(frozen=True)
class AuditRow:
    profile: OddProfile
    stratum: str
    classical_setpart: Fraction
    classical_multinomial: Fraction
    rhs_setpart: Fraction
    rhs_multinomial: Fraction
    t3_setpart: Fraction
    marked_rhs_setpart: Fraction

    @property
    def k(self) -> int:
        return self.profile.k

    @property
    def lhs_setpart(self) -> Fraction:
        # tau - T1: the connected term is removed
        return Fraction(0) if self.k == 1 else self.classical_setpart

    @property
    def lhs_multinomial(self) -> Fraction:
        return Fraction(0) if self.k == 1 else self.classical_multinomial

    @property
    def mismatch_setpart(self) -> bool:
        return self.lhs_setpart != self.rhs_setpart

    @property
    def mismatch_multinomial(self) -> bool:
        return self.lhs_multinomial != self.rhs_multinomial

    @property
    def mismatch_marked(self) -> bool:
        return self.t3_setpart != self.marked_rhs_setpart

    def as_dict(self) -> dict:
        return {
            "profile": self.profile.label(),
            "k": self.k,
            "stratum": self.stratum,
            "classical_coeff": str(self.classical_setpart),
            "classical_coeff_multinomial": str(self.classical_multinomial),
            "lhs_coeff_setpart": str(self.lhs_setpart),
            "rhs_coeff_setpart": str(self.rhs_setpart),
            "lhs_coeff_multinomial": str(self.lhs_multinomial),
            "rhs_coeff_multinomial": str(self.rhs_multinomial),
            "t3_coeff_setpart": str(self.t3_setpart),
            "marked_rhs_coeff_setpart": str(self.marked_rhs_setpart),
            "mismatch_setpart": self.mismatch_setpart,
            "mismatch_multinomial": self.mismatch_multinomial,
            "mismatch_marked": self.mismatch_marked,
        }


@dataclass(frozen=True)
class IdentityAudit:
    n: int
    rows: tuple[AuditRow, ...]
    tilde_first: dict[int, FormalSum]

    @property
    def mismatches(self) -> list[str]:
        return [r.profile.label() for r in self.rows if r.mismatch_setpart]

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "rows": [r.as_dict() for r in self.rows],
            "mismatched_profiles_setpart": self.mismatches,
            "mismatched_profiles_multinomial": [r.profile.label() for r in self.rows if r.mismatch_multinomial],
            "tilde_expansions": {str(i): s.as_plain() for i, s in sorted(self.tilde_first.items())},
        }


CSV_COLUMNS = (
    "profile",
    "k",
    "stratum",
    "classical_coeff",
    "rhs_coeff_setpart",
    "rhs_coeff_multinomial",
    "classical_coeff_multinomial",
    "lhs_coeff_setpart",
    "lhs_coeff_multinomial",
    "t3_coeff_setpart",
    "marked_rhs_coeff_setpart",
    "mismatch_setpart",
    "mismatch_multinomial",
    "mismatch_marked",
)


def identity_audit(n: int) -> IdentityAudit:
    """Tabulate both sides of the tree-reconstruction identity per profile.

    Reports differences; never asserts equality.
    """
    _check_odd(n, 5)
    if n > AUDIT_GUARD:
        raise OracleScaleError(f"oracle scale exceeded: n={n} > {AUDIT_GUARD}")
    sp = classical_decomposition(n, Convention.SET_PARTITION)
    mn = classical_decomposition(n, Convention.MULTINOMIAL)
    split = three_part_split(n)
    rhs_sp = tree_reconstruction_rhs(n, Convention.SET_PARTITION)
    rhs_mn = tree_reconstruction_rhs(n, Convention.MULTINOMIAL)
    marked = tree_reconstruction_rhs(n, Convention.SET_PARTITION, strip_first=True)
    rows = []
    for p in enumerate_odd_profiles(n):
        stratum = "T1" if p.k == 1 else "T2" if p.k == 3 else "T3"
        rows.append(
            AuditRow(p, stratum, sp[p], mn[p], rhs_sp[p], rhs_mn[p], split.t3[p], marked[p])
        )
    tildes = {i: _tilde(i, Convention.SET_PARTITION) for i in range(3, n - 1, 2)}
    return IdentityAudit(n, tuple(rows), tildes)


def tree_bracket(n: int, d_max: Number) -> Number:
    """1 - 2*delta_max/(n(n-1)); at least 1 - 6*lambda when delta_max <= 3*lambda*n(n-1)."""
    return 1 - 2 * d_max / (n * (n - 1))


def t1_plus_t2_lower_bound(n: int, momenta: Sequence[Momentum4], evaluator: EnvelopeEvaluator) -> float:
    _check_odd(n, 5)
    if sign_of_h(n) != -1:
        raise ValueError(f"n={n}: the T1+T2 bound applies only where H^(n+1) < 0")
    lam = float(evaluator.params.lam)
    c_min = c_bound(n, momenta, evaluator, Envelope.MIN)
    return c_min / (6 * lam) * float(tree_bracket(n, evaluator.bounds[n].d_max))
