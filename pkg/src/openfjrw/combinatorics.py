"""Twist arithmetic and enumeration for the (r,s) model.

Everything here is a pure function of small integer data: twist profiles of
marking sets, the balanced and critical graph keys attached to a pair
``(J, d)``, rank formulas, closed selection rules, ordered set partitions and
rising factorials.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Sequence


@dataclass(frozen=True)
class ModelParams:
    r: int
    s: int

    def __post_init__(self):
        if not (isinstance(self.r, int) and isinstance(self.s, int)):
            raise TypeError("r and s must be integers")
        if self.r < 2 or self.s < 2:
            raise ValueError(f"need r, s >= 2, got ({self.r}, {self.s})")

    def weight(self, k1: int, k2: int) -> int:
        """Weighted degree of x^k1 y^k2 (x has weight s, y has weight r)."""
        return self.s * k1 + self.r * k2


@dataclass(frozen=True, order=True)
class Marking:
    """An internal marking with open-theory twist (a, b)."""
    label: int
    a: int
    b: int

    @property
    def twist(self) -> tuple[int, int]:
        return (self.a, self.b)


@dataclass(frozen=True)
class ClosedInsertion:
    """tau_d^{(a,b)}; twists may be -1 in either coordinate."""
    a: int
    b: int
    d: int = 0

    @property
    def twist(self) -> tuple[int, int]:
        return (self.a, self.b)


def check_markings(params: ModelParams, markings: Sequence[Marking]) -> None:
    seen = set()
    for mk in markings:
        if mk.label in seen:
            raise ValueError(f"duplicate marking label {mk.label}")
        seen.add(mk.label)
        if mk.label < 1:
            raise ValueError(f"marking label must be positive, got {mk.label}")
        if not (0 <= mk.a <= params.r - 1 and 0 <= mk.b <= params.s - 1):
            raise ValueError(
                f"marking {mk.label}: twist ({mk.a},{mk.b}) outside "
                f"0..{params.r - 1} x 0..{params.s - 1}")


@dataclass(frozen=True)
class TwistProfile:
    r: int
    s: int
    size: int
    rJ: int
    sJ: int
    ell1: int
    ell2: int
    m: int
    dJ: int
    N: int


def profile_from_data(params: ModelParams, twists: Sequence[tuple[int, int]],
                      ds: Sequence[int]) -> TwistProfile:
    """Profile of a marking set given aligned twist and descendent lists."""
    r, s = params.r, params.s
    sa = sum(t[0] for t in twists)
    sb = sum(t[1] for t in twists)
    rJ, sJ = sa % r, sb % s
    ell1, ell2 = (sa - rJ) // r, (sb - sJ) // s
    m = r * s + sum(s * a + r * b + r * s * (d - 1)
                    for (a, b), d in zip(twists, ds))
    num = s * rJ + r * sJ - m - r * s
    # congruence forces divisibility: m = s*sa + r*sb mod rs
    assert num % (r * s) == 0, (twists, ds)
    dJ = num // (r * s)
    N = ell1 + ell2 - len(twists) + 1 + sum(ds)
    return TwistProfile(r, s, len(twists), rJ, sJ, ell1, ell2, m, dJ, N)


def twist_profile(params: ModelParams, markings: Sequence[Marking],
                  d: Mapping[int, int]) -> TwistProfile:
    """Profile r(J), s(J), m(J,d), d(J,d), N of a marking set."""
    twists = [mk.twist for mk in markings]
    ds = [d[mk.label] for mk in markings]
    return profile_from_data(params, twists, ds)


@dataclass(frozen=True, order=True)
class BalancedKey:
    """Key of the balanced graph Gamma_{J,p}.

    ``d`` is aligned with ``J``.  The exponents are filled in by
    :func:`enumerate_balanced` and do not take part in equality.
    """
    J: tuple[int, ...]
    d: tuple[int, ...]
    p: int
    k1: int = field(default=-1, compare=False)
    k2: int = field(default=-1, compare=False)

    @property
    def dvec(self) -> dict[int, int]:
        return dict(zip(self.J, self.d))

    @property
    def cell(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return (self.J, self.d)


@dataclass(frozen=True, order=True)
class CriticalKey:
    """Key of the critical graph Lambda_{J,p}, p >= 1."""
    J: tuple[int, ...]
    d: tuple[int, ...]
    p: int
    k1: int = field(default=-1, compare=False)
    k2: int = field(default=-1, compare=False)

    @property
    def dvec(self) -> dict[int, int]:
        return dict(zip(self.J, self.d))

    @property
    def cell(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return (self.J, self.d)


def enumerate_balanced(profile: TwistProfile, J: Sequence[int] = (),
                       d: Sequence[int] = ()) -> list[BalancedKey]:
    """Balanced keys p = 0..N; empty when N < 0."""
    r, s = profile.r, profile.s
    J, d = tuple(J), tuple(d)
    return [BalancedKey(J, d, p, profile.rJ + p * r,
                        profile.sJ + (profile.N - p) * s)
            for p in range(profile.N + 1)]


def enumerate_critical(profile: TwistProfile, J: Sequence[int] = (),
                       d: Sequence[int] = ()) -> list[CriticalKey]:
    """Critical keys p = 1..N; k1, k2 are the graph exponents (not minus one)."""
    r, s = profile.r, profile.s
    J, d = tuple(J), tuple(d)
    return [CriticalKey(J, d, p, profile.rJ + (p - 1) * r + 1,
                        profile.sJ + (profile.N - p) * s + 1)
            for p in range(1, profile.N + 1)]


def open_witten_ranks(params: ModelParams, k1: int, k2: int, k12: int,
                      markings: Sequence[Marking]):
    """Ranks (e1, e2) of the open Witten bundle, or None when the moduli
    space is empty (non-integral rank or parity failure)."""
    if min(k1, k2, k12) < 0:
        raise ValueError("boundary counts must be non-negative")
    r, s = params.r, params.s
    sa = sum(mk.a for mk in markings)
    sb = sum(mk.b for mk in markings)
    n1 = 2 * sa + (k1 + k12 - 1) * (r - 2)
    n2 = 2 * sb + (k2 + k12 - 1) * (s - 2)
    if n1 % r or n2 % s:
        return None
    e1, e2 = n1 // r, n2 // s
    if (e1 - (k1 + k12 - 1)) % 2 or (e2 - (k2 + k12 - 1)) % 2:
        return None
    return (e1, e2)


class Selection(enum.Enum):
    OK = "ok"
    TOO_FEW_POINTS = "too-few-points"
    NON_INTEGRAL_RANK = "non-integral-rank"
    DIMENSION_MISMATCH = "dimension-mismatch"
    RAMOND_VANISHING = "ramond-vanishing"


class DoubleNegative(ValueError):
    """Two insertions carry twist -1 in the same coordinate."""


@dataclass(frozen=True)
class SelectionOutcome:
    kind: Selection
    e1: int | None = None
    e2: int | None = None

    @property
    def ok(self) -> bool:
        return self.kind is Selection.OK


def closed_selection(params: ModelParams,
                     insertions: Sequence[ClosedInsertion]) -> SelectionOutcome:
    """Selection rules for a closed extended genus-0 invariant.

    Raises :class:`DoubleNegative` for inputs with two -1 twists in one
    coordinate; every other failure is a forced zero reported as data.
    """
    r, s = params.r, params.s
    for ins in insertions:
        if not (-1 <= ins.a <= r - 1 and -1 <= ins.b <= s - 1) or ins.d < 0:
            raise ValueError(f"insertion out of range: {ins}")
    neg_a = sum(1 for ins in insertions if ins.a == -1)
    neg_b = sum(1 for ins in insertions if ins.b == -1)
    if neg_a > 1 or neg_b > 1:
        raise DoubleNegative(
            f"{neg_a} insertions with a=-1 and {neg_b} with b=-1")
    n = len(insertions)
    if n < 3:
        return SelectionOutcome(Selection.TOO_FEW_POINTS)
    sa = sum(ins.a for ins in insertions)
    sb = sum(ins.b for ins in insertions)
    if (sa - (r - 2)) % r or (sb - (s - 2)) % s:
        return SelectionOutcome(Selection.NON_INTEGRAL_RANK)
    e1, e2 = (sa - (r - 2)) // r, (sb - (s - 2)) // s
    if n - 3 != e1 + e2 + sum(ins.d for ins in insertions):
        return SelectionOutcome(Selection.DIMENSION_MISMATCH, e1, e2)
    if neg_a == 0 and any(ins.a == r - 1 for ins in insertions):
        return SelectionOutcome(Selection.RAMOND_VANISHING, e1, e2)
    if neg_b == 0 and any(ins.b == s - 1 for ins in insertions):
        return SelectionOutcome(Selection.RAMOND_VANISHING, e1, e2)
    return SelectionOutcome(Selection.OK, e1, e2)


def _set_partitions(items: tuple, h: int) -> Iterator[list[tuple]]:
    # restricted growth strings, blocks listed by smallest element
    n = len(items)
    if h > n or h < 1:
        return
    assign = [0] * n

    def rec(i: int, used: int):
        if n - i < h - used:
            return
        if i == n:
            if used == h:
                blocks = [[] for _ in range(h)]
                for item, blk in zip(items, assign):
                    blocks[blk].append(item)
                yield [tuple(b) for b in blocks]
            return
        for blk in range(min(used + 1, h)):
            assign[i] = blk
            yield from rec(i + 1, max(used, blk + 1))

    yield from rec(0, 0)


def ordered_partitions(J, h: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Ordered set partitions of J into h non-empty blocks (blocks sorted)."""
    items = tuple(sorted(J))
    for blocks in _set_partitions(items, h):
        yield from itertools.permutations(blocks)


def set_partitions(J) -> Iterator[list[tuple[int, ...]]]:
    """All unordered set partitions of J (the empty set has one)."""
    items = tuple(sorted(J))
    if not items:
        yield []
    for h in range(1, len(items) + 1):
        yield from _set_partitions(items, h)


def subsets(J) -> Iterator[tuple[int, ...]]:
    items = tuple(sorted(J))
    for k in range(len(items) + 1):
        yield from itertools.combinations(items, k)


def gamma_ratio(c, n: int) -> Fraction:
    """Gamma(c + n) / Gamma(c) as the rising factorial prod_{q<n} (c + q)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    c = Fraction(c)
    out = Fraction(1)
    for q in range(n):
        out *= c + q
    return out


def stirling2(n: int, k: int) -> int:
    return sum((-1) ** i * math.comb(k, i) * (k - i) ** n
               for i in range(k + 1)) // math.factorial(k)
