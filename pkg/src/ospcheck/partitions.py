"""Odd integer partitions, odd-block set partitions and tree counts."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from math import factorial, prod
from typing import Iterator, Optional

SET_PARTITION_GUARD = 11


class OracleScaleError(ValueError):
    """Raised when an exhaustive enumeration is requested beyond its guard."""


def _check_odd(n: int, minimum: int = 1) -> None:
    if not isinstance(n, int) or n < minimum or n % 2 == 0:
        raise ValueError(f"n must be an odd integer >= {minimum}, got {n!r}")


@dataclass(frozen=True)
class OddProfile:
    """Non-increasing tuple of odd positive parts."""

    parts: tuple[int, ...]

    def __post_init__(self) -> None:
        parts = tuple(self.parts)
        object.__setattr__(self, "parts", parts)
        if not parts:
            raise ValueError("profile must have at least one part")
        if any(p < 1 or p % 2 == 0 for p in parts):
            raise ValueError(f"parts must be odd and >= 1: {parts}")
        if any(a < b for a, b in zip(parts, parts[1:])):
            raise ValueError(f"parts must be non-increasing: {parts}")
        if sum(parts) % 2 == 0:
            raise ValueError(f"parts must sum to an odd n: {parts}")

    @classmethod
    def of(cls, *parts: int) -> "OddProfile":
        return cls(tuple(sorted(parts, reverse=True)))

    @property
    def n(self) -> int:
        return sum(self.parts)

    @property
    def k(self) -> int:
        return len(self.parts)

    def multiplicities(self) -> dict[int, int]:
        return dict(Counter(self.parts))

    def label(self) -> str:
        return "(" + ",".join(map(str, self.parts)) + ")"

    def __str__(self) -> str:
        return self.label()


@dataclass(frozen=True)
class LabeledSetPartition:
    blocks: tuple[frozenset[int], ...]

    @property
    def profile(self) -> OddProfile:
        return OddProfile.of(*(len(b) for b in self.blocks))


@dataclass(frozen=True)
class TreeCounts:
    n: int
    t_n: int
    t_tilde_n: int


def _odd_parts(n: int, largest: int) -> Iterator[tuple[int, ...]]:
    if n == 0:
        yield ()
        return
    top = min(n, largest)
    if top % 2 == 0:
        top -= 1
    for p in range(top, 0, -2):
        for rest in _odd_parts(n - p, p):
            yield (p,) + rest


def enumerate_odd_profiles(n: int, k: Optional[int] = None) -> list[OddProfile]:
    """All odd-part profiles of ``n`` in lexicographically decreasing order."""
    _check_odd(n)
    if k is not None and (k < 1 or k > n or (n - k) % 2):
        raise ValueError(f"no odd profile of {n} has {k} parts")
    out = [OddProfile(p) for p in _odd_parts(n, n)]
    if k is not None:
        out = [p for p in out if p.k == k]
    return out


def set_partition_count(profile: OddProfile) -> int:
    """Number of labeled set partitions of {1..n} with the given block sizes."""
    num = factorial(profile.n)
    den = prod(factorial(j) for j in profile.parts)
    den *= prod(factorial(m) for m in profile.multiplicities().values())
    return num // den


def multinomial_count(profile: OddProfile) -> int:
    """Plain multinomial n!/prod(j!), without the automorphism factor."""
    return factorial(profile.n) // prod(factorial(j) for j in profile.parts)


def _odd_block_partitions(items: tuple[int, ...]) -> Iterator[list[frozenset[int]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    # block holding the smallest label; its other members form an even-size subset
    for size in range(0, len(rest) + 1, 2):
        for mates in combinations(rest, size):
            remaining = tuple(x for x in rest if x not in mates)
            for tail in _odd_block_partitions(remaining):
                yield [frozenset((first,) + mates)] + tail


def enumerate_set_partitions_odd(n: int) -> list[LabeledSetPartition]:
    _check_odd(n)
    if n > SET_PARTITION_GUARD:
        raise OracleScaleError(f"oracle scale exceeded: n={n} > {SET_PARTITION_GUARD}")
    return [LabeledSetPartition(tuple(b)) for b in _odd_block_partitions(tuple(range(1, n + 1)))]


def tree_counts(n: int) -> TreeCounts:
    """Counts of distinct partitions inside the tree term of order ``n``.

    The tilde count is pinned to 1 for n in {3, 5}: the floor formula would
    give 0 there and annihilate every product that starts at m = 3.
    """
    _check_odd(n, 3)
    if n <= 5:
        return TreeCounts(n, 1, 1)
    base = (n - 3) ** 2 // 48 + (n - 3) // 3
    return TreeCounts(n, base + 1, base)
