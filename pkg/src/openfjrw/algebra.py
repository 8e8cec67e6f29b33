"""Exact coefficient rings and truncated bivariate series.

Two Artinian coefficient rings are supported:

* ``URing`` -- the ring A_I generated by u_{i,d} (i a marking label, d >= 0)
  modulo u_{i,d} u_{i,d'} = 0.  A monomial is a tuple of ``(label, d)`` pairs
  sorted by label.
* ``SymRing`` -- the ring A_{I,sym} generated by t_{alpha,beta,d} modulo the
  monomials that use a twist class (alpha, beta) more often than I has
  markings of that twist.  A monomial is a sorted tuple of ``(alpha, beta, d)``
  triples with repetition.

Coefficients are ``fractions.Fraction`` throughout.
"""

from __future__ import annotations

import math
from collections import Counter
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .combinatorics import Marking, ModelParams

Mono = tuple


def _clean(terms: dict) -> dict:
    return {k: v for k, v in terms.items() if v}


class URing:
    """A_I over the given markings."""

    kind = "u"

    def __init__(self, markings: Iterable[Marking]):
        self.markings = tuple(sorted(markings))
        self.twist = {mk.label: mk.twist for mk in self.markings}
        self.labels = tuple(self.twist)
        self.key = ("u", tuple((mk.label, mk.a, mk.b) for mk in self.markings))

    def __eq__(self, other):
        return isinstance(other, URing) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"URing(labels={list(self.labels)})"

    @property
    def nil_order(self) -> int:
        """Smallest h with m^(h+1) = 0 is h = |I|."""
        return len(self.labels)

    def mul_mono(self, m1: Mono, m2: Mono):
        if not m1:
            return m2
        if not m2:
            return m1
        l1 = {lab for lab, _ in m1}
        for lab, _ in m2:
            if lab in l1:
                return None
        return tuple(sorted(m1 + m2))

    def check_mono(self, mono: Mono) -> Mono:
        mono = tuple(sorted((int(l), int(d)) for l, d in mono))
        labs = [l for l, _ in mono]
        if len(set(labs)) != len(labs):
            return None
        for l, d in mono:
            if l not in self.twist or d < 0:
                raise ValueError(f"u-monomial factor ({l},{d}) not in ring")
        return mono

    def twist_sum(self, mono: Mono) -> tuple[int, int]:
        return (sum(self.twist[l][0] for l, _ in mono),
                sum(self.twist[l][1] for l, _ in mono))

    def descendents(self, mono: Mono):
        return [d for _, d in mono]

    def mono_weight(self, params: ModelParams, mono: Mono) -> int:
        """m(J,d) - rs, additive under multiplication."""
        r, s = params.r, params.s
        return sum(s * self.twist[l][0] + r * self.twist[l][1] + r * s * (d - 1)
                   for l, d in mono)

    def gen(self, label: int, d: int) -> "CoefficientElement":
        return CoefficientElement(self, {self.check_mono([(label, d)]): Fraction(1)})

    def mono_to_json(self, mono: Mono):
        return [[l, d] for l, d in mono]

    def mono_from_json(self, obj) -> Mono:
        return self.check_mono([tuple(f) for f in obj])

    def mono_str(self, mono: Mono) -> str:
        return "*".join(f"u[{l},{d}]" for l, d in mono) or "1"


class SymRing:
    """A_{I,sym} for the markings with twists in 0..r-2 x 0..s-2."""

    kind = "t"

    def __init__(self, params: ModelParams, markings: Iterable[Marking]):
        self.params = params
        self.markings = tuple(sorted(markings))
        fib: dict[tuple[int, int], list[int]] = {}
        for mk in self.markings:
            if mk.a <= params.r - 2 and mk.b <= params.s - 2:
                fib.setdefault(mk.twist, []).append(mk.label)
        self.fibers = {k: tuple(v) for k, v in sorted(fib.items())}
        self.counts = {k: len(v) for k, v in self.fibers.items()}
        self.key = ("t", params.r, params.s,
                    tuple((mk.label, mk.a, mk.b) for mk in self.markings))

    def __eq__(self, other):
        return isinstance(other, SymRing) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"SymRing(counts={self.counts})"

    @property
    def nil_order(self) -> int:
        return sum(self.counts.values())

    def _admissible(self, mono: Mono) -> bool:
        c = Counter((al, be) for al, be, _ in mono)
        return all(n <= self.counts.get(k, 0) for k, n in c.items())

    def mul_mono(self, m1: Mono, m2: Mono):
        if not m1:
            return m2
        if not m2:
            return m1
        m = tuple(sorted(m1 + m2))
        return m if self._admissible(m) else None

    def check_mono(self, mono: Mono):
        mono = tuple(sorted((int(a), int(b), int(d)) for a, b, d in mono))
        for a, b, d in mono:
            if not (0 <= a <= self.params.r - 2 and 0 <= b <= self.params.s - 2
                    and d >= 0):
                raise ValueError(f"t-variable ({a},{b},{d}) out of range")
        return mono if self._admissible(mono) else None

    def twist_sum(self, mono: Mono) -> tuple[int, int]:
        return (sum(a for a, _, _ in mono), sum(b for _, b, _ in mono))

    def descendents(self, mono: Mono):
        return [d for _, _, d in mono]

    def mono_weight(self, params: ModelParams, mono: Mono) -> int:
        r, s = params.r, params.s
        return sum(s * a + r * b + r * s * (d - 1) for a, b, d in mono)

    def gen(self, a: int, b: int, d: int) -> "CoefficientElement":
        m = self.check_mono([(a, b, d)])
        return CoefficientElement(self, {m: Fraction(1)} if m is not None else {})

    def mono_to_json(self, mono: Mono):
        return [[a, b, d] for a, b, d in mono]

    def mono_from_json(self, obj) -> Mono:
        return self.check_mono([tuple(f) for f in obj])

    def mono_str(self, mono: Mono) -> str:
        return "*".join(f"t[{a},{b},{d}]" for a, b, d in mono) or "1"

    @staticmethod
    def aut_order(mono: Mono) -> int:
        """Number of permutations of the factors fixing every triple."""
        out = 1
        for n in Counter(mono).values():
            out *= math.factorial(n)
        return out


def _coerce(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, str)):
        return Fraction(c)
    raise TypeError(f"expected an exact rational, got {type(c).__name__}")


class CoefficientElement:
    """An element of ``URing`` or ``SymRing``: sparse map monomial -> Fraction."""

    __slots__ = ("ring", "terms")

    def __init__(self, ring, terms: Mapping | None = None):
        self.ring = ring
        self.terms = _clean({m: _coerce(c) for m, c in (terms or {}).items()})

    @classmethod
    def one(cls, ring) -> "CoefficientElement":
        return cls(ring, {(): Fraction(1)})

    @classmethod
    def zero(cls, ring) -> "CoefficientElement":
        return cls(ring)

    def _check(self, other: "CoefficientElement"):
        if self.ring != other.ring:
            raise ValueError(f"ring mismatch: {self.ring!r} vs {other.ring!r}")

    def __add__(self, other):
        if not isinstance(other, CoefficientElement):
            other = CoefficientElement(self.ring, {(): _coerce(other)})
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return CoefficientElement(self.ring, out)

    __radd__ = __add__

    def __neg__(self):
        return CoefficientElement(self.ring, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, CoefficientElement):
            c = _coerce(other)
            return CoefficientElement(self.ring, {m: c * v for m, v in self.terms.items()})
        return ring_mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = CoefficientElement.one(self.ring)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, CoefficientElement):
            return self.ring == other.ring and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == ({(): Fraction(other)} if other else {})
        return NotImplemented

    def __hash__(self):
        return hash((self.ring, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    def constant(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def in_maximal_ideal(self) -> bool:
        return () not in self.terms

    def coefficient(self, mono: Mono) -> Fraction:
        return self.terms.get(tuple(mono), Fraction(0))

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({c})*{self.ring.mono_str(m)}"
                          for m, c in sorted(self.terms.items()))


def ring_mul(e1: CoefficientElement, e2: CoefficientElement) -> CoefficientElement:
    """Product in the common coefficient ring; annihilated monomials drop out."""
    e1._check(e2)
    mul = e1.ring.mul_mono
    out: dict = {}
    for m1, c1 in e1.terms.items():
        for m2, c2 in e2.terms.items():
            m = mul(m1, m2)
            if m is not None:
                out[m] = out.get(m, 0) + c1 * c2
    return CoefficientElement(e1.ring, out)


def psi_I(e: CoefficientElement, target: URing | None = None) -> CoefficientElement:
    """Ring map A_{I,sym} -> A_I, t_{a,b,d} -> sum of u_{i,d} over tw(i) = (a,b)."""
    ring = e.ring
    if not isinstance(ring, SymRing):
        raise TypeError("psi_I expects an element of A_{I,sym}")
    if target is None:
        target = URing(ring.markings)
    images: dict = {}

    def image(var):
        if var not in images:
            a, b, d = var
            images[var] = CoefficientElement(
                target, {((lab, d),): 1 for lab in ring.fibers.get((a, b), ())})
        return images[var]

    out = CoefficientElement.zero(target)
    for mono, c in e.terms.items():
        term = CoefficientElement(target, {(): c})
        for var in mono:
            term = term * image(var)
            if term.is_zero():
                break
        out = out + term
    return out


class PotentialSeries:
    """Sparse bivariate series sum_{k1,k2} c_{k1,k2} x^k1 y^k2.

    ``terms`` maps ``(k1, k2)`` to a dict ``monomial -> Fraction``.  When
    ``wmax`` is not None every stored term has weight s*k1 + r*k2 <= wmax;
    ``wmax=None`` means an untruncated polynomial.
    """

    __slots__ = ("params", "ring", "terms", "wmax")

    def __init__(self, params: ModelParams, ring, terms: Mapping | None = None,
                 wmax: int | None = None):
        self.params = params
        self.ring = ring
        self.wmax = wmax
        out = {}
        for (k1, k2), coeffs in (terms or {}).items():
            if k1 < 0 or k2 < 0:
                raise ValueError("negative exponent")
            if wmax is not None and params.weight(k1, k2) > wmax:
                continue
            if isinstance(coeffs, CoefficientElement):
                if coeffs.ring != ring:
                    raise ValueError("ring mismatch")
                coeffs = coeffs.terms
            c = _clean({m: _coerce(v) for m, v in coeffs.items()})
            if c:
                out[(k1, k2)] = c
        self.terms = out

    @classmethod
    def monomial(cls, params, ring, k1: int, k2: int, coeff=1, mono: Mono = (),
                 wmax: int | None = None) -> "PotentialSeries":
        return cls(params, ring, {(k1, k2): {tuple(mono): coeff}}, wmax)

    @classmethod
    def x(cls, params, ring, wmax=None):
        return cls.monomial(params, ring, 1, 0, wmax=wmax)

    @classmethod
    def y(cls, params, ring, wmax=None):
        return cls.monomial(params, ring, 0, 1, wmax=wmax)

    def _new(self, terms, wmax="same") -> "PotentialSeries":
        out = PotentialSeries.__new__(PotentialSeries)
        out.params, out.ring = self.params, self.ring
        out.wmax = self.wmax if wmax == "same" else wmax
        out.terms = terms
        return out

    def _compat(self, other: "PotentialSeries"):
        if self.ring != other.ring:
            raise ValueError("ring mismatch")
        if self.params != other.params:
            raise ValueError("model parameters differ")

    def _bound(self, other):
        if self.wmax is None:
            return other.wmax
        if other.wmax is None:
            return self.wmax
        return min(self.wmax, other.wmax)

    def coefficient(self, k1: int, k2: int) -> CoefficientElement:
        return CoefficientElement(self.ring, self.terms.get((k1, k2), {}))

    def items(self) -> Iterator[tuple[int, int, Mono, Fraction]]:
        for (k1, k2) in sorted(self.terms):
            for mono, c in sorted(self.terms[(k1, k2)].items()):
                yield k1, k2, mono, c

    def __len__(self):
        return sum(len(c) for c in self.terms.values())

    def __add__(self, other: "PotentialSeries") -> "PotentialSeries":
        self._compat(other)
        bound = self._bound(other)
        out = {e: dict(c) for e, c in self.terms.items()}
        for e, c in other.terms.items():
            tgt = out.setdefault(e, {})
            for m, v in c.items():
                tgt[m] = tgt.get(m, 0) + v
        out = {e: _clean(c) for e, c in out.items()}
        out = {e: c for e, c in out.items()
               if c and (bound is None or self.params.weight(*e) <= bound)}
        return self._new(out, bound)

    def __neg__(self):
        return self._new({e: {m: -v for m, v in c.items()}
                          for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "PotentialSeries":
        if isinstance(c, CoefficientElement):
            if c.ring != self.ring:
                raise ValueError("ring mismatch")
            mul = self.ring.mul_mono
            out = {}
            for e, coeffs in self.terms.items():
                tgt: dict = {}
                for m1, v1 in c.terms.items():
                    for m2, v2 in coeffs.items():
                        m = mul(m1, m2)
                        if m is not None:
                            tgt[m] = tgt.get(m, 0) + v1 * v2
                tgt = _clean(tgt)
                if tgt:
                    out[e] = tgt
            return self._new(out)
        c = _coerce(c)
        if not c:
            return self._new({})
        return self._new({e: {m: c * v for m, v in cs.items()}
                          for e, cs in self.terms.items()})

    def __mul__(self, other) -> "PotentialSeries":
        if not isinstance(other, PotentialSeries):
            return self.scale(other)
        self._compat(other)
        bound = self._bound(other)
        weight = self.params.weight
        mul = self.ring.mul_mono
        out: dict = {}
        for e1, c1 in self.terms.items():
            w1 = weight(*e1)
            for e2, c2 in other.terms.items():
                if bound is not None and w1 + weight(*e2) > bound:
                    continue
                e = (e1[0] + e2[0], e1[1] + e2[1])
                tgt = out.get(e)
                if tgt is None:
                    tgt = out[e] = {}
                for m1, v1 in c1.items():
                    for m2, v2 in c2.items():
                        m = mul(m1, m2)
                        if m is not None:
                            tgt[m] = tgt.get(m, 0) + v1 * v2
        out = {e: c for e, c in ((e, _clean(c)) for e, c in out.items()) if c}
        return self._new(out, bound)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "PotentialSeries":
        out = PotentialSeries.monomial(self.params, self.ring, 0, 0, wmax=self.wmax)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def __eq__(self, other):
        if not isinstance(other, PotentialSeries):
            return NotImplemented
        return (self.ring == other.ring and self.params == other.params
                and self.terms == other.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def constant_part(self) -> dict:
        """The part with empty coefficient monomial, as {(k1,k2): Fraction}."""
        return {e: c[()] for e, c in self.terms.items() if () in c}

    def maximal_ideal_part(self) -> "PotentialSeries":
        out = {e: {m: v for m, v in c.items() if m} for e, c in self.terms.items()}
        return self._new({e: c for e, c in out.items() if c})

    def with_wmax(self, wmax: int | None) -> "PotentialSeries":
        if wmax is None:
            return self._new(dict(self.terms), None)
        return weighted_truncate(self, wmax)

    def diff_x(self) -> "PotentialSeries":
        return self._new({(k1 - 1, k2): {m: k1 * v for m, v in c.items()}
                          for (k1, k2), c in self.terms.items() if k1})

    def diff_y(self) -> "PotentialSeries":
        return self._new({(k1, k2 - 1): {m: k2 * v for m, v in c.items()}
                          for (k1, k2), c in self.terms.items() if k2})

    def map_coefficients(self, fn, ring) -> "PotentialSeries":
        """Apply a coefficient-ring map termwise (e.g. psi_I)."""
        out = {}
        for e, c in self.terms.items():
            img = fn(CoefficientElement(self.ring, c))
            if not img.is_zero():
                out[e] = img.terms
        res = PotentialSeries(self.params, ring, {}, self.wmax)
        res.terms = out
        return res

    def __repr__(self):
        parts = []
        for k1, k2, mono, c in self.items():
            parts.append(f"({c})*{self.ring.mono_str(mono)}*x^{k1}*y^{k2}")
        return " + ".join(parts) or "0"


def weighted_truncate(series: PotentialSeries, bound: int) -> PotentialSeries:
    """Drop every term of weight s*k1 + r*k2 above ``bound``."""
    if bound < 0:
        raise ValueError("bound must be non-negative")
    w = series.params.weight
    new_bound = bound if series.wmax is None else min(bound, series.wmax)
    return series._new({e: dict(c) for e, c in series.terms.items() if w(*e) <= bound},
                       new_bound)


def substitute(series: PotentialSeries, x_image: PotentialSeries,
               y_image: PotentialSeries) -> PotentialSeries:
    """Compose ``series`` with x -> x_image, y -> y_image.

    The images must reduce to x and y modulo the maximal ideal of the
    coefficient ring.  The result keeps the truncation bound of ``series``.
    """
    for img in (x_image, y_image):
        series._compat(img)
    if x_image.constant_part() != {(1, 0): 1}:
        raise ValueError("x image must be x modulo the maximal ideal")
    if y_image.constant_part() != {(0, 1): 1}:
        raise ValueError("y image must be y modulo the maximal ideal")
    wmax = series.wmax
    X = x_image.with_wmax(wmax)
    Y = y_image.with_wmax(wmax)
    one = PotentialSeries.monomial(series.params, series.ring, 0, 0, wmax=wmax)
    xp, yp = [one], [one]
    max1 = max((k1 for k1, _ in series.terms), default=0)
    max2 = max((k2 for _, k2 in series.terms), default=0)
    for _ in range(max1):
        xp.append(xp[-1] * X)
    for _ in range(max2):
        yp.append(yp[-1] * Y)
    acc: dict = {}
    mul = series.ring.mul_mono
    by_k1: dict = {}
    for (k1, k2), c in series.terms.items():
        by_k1.setdefault(k1, []).append((k2, c))
    for k1, rows in by_k1.items():
        for k2, c in rows:
            prod = xp[k1] * yp[k2]
            for e, pc in prod.terms.items():
                tgt = acc.get(e)
                if tgt is None:
                    tgt = acc[e] = {}
                for m1, v1 in c.items():
                    for m2, v2 in pc.items():
                        m = mul(m1, m2)
                        if m is not None:
                            tgt[m] = tgt.get(m, 0) + v1 * v2
    acc = {e: c for e, c in ((e, _clean(c)) for e, c in acc.items()) if c}
    return series._new(acc, wmax)


class HbarSeries:
    """Finite Laurent polynomial in hbar with coefficients in a coefficient ring."""

    __slots__ = ("ring", "terms")

    def __init__(self, ring, terms: Mapping | None = None):
        self.ring = ring
        out = {}
        for n, coeffs in (terms or {}).items():
            if isinstance(coeffs, CoefficientElement):
                coeffs = coeffs.terms
            c = _clean({m: _coerce(v) for m, v in coeffs.items()})
            if c:
                out[int(n)] = c
        self.terms = out

    def coefficient(self, n: int) -> CoefficientElement:
        return CoefficientElement(self.ring, self.terms.get(n, {}))

    def exponents(self) -> list[int]:
        return sorted(self.terms)

    def mono_coefficients(self, mono: Mono) -> dict[int, Fraction]:
        """hbar-exponent -> coefficient of one ring monomial."""
        mono = tuple(mono)
        return {n: c[mono] for n, c in sorted(self.terms.items()) if mono in c}

    def map_coefficients(self, fn, ring) -> "HbarSeries":
        out = {}
        for n, c in self.terms.items():
            img = fn(CoefficientElement(self.ring, c))
            if not img.is_zero():
                out[n] = img.terms
        return HbarSeries(ring, out)

    def filter_monomials(self, keep) -> "HbarSeries":
        return HbarSeries(self.ring, {n: {m: v for m, v in c.items() if keep(m)}
                                      for n, c in self.terms.items()})

    def __add__(self, other: "HbarSeries") -> "HbarSeries":
        if self.ring != other.ring:
            raise ValueError("ring mismatch")
        out = {n: dict(c) for n, c in self.terms.items()}
        for n, c in other.terms.items():
            tgt = out.setdefault(n, {})
            for m, v in c.items():
                tgt[m] = tgt.get(m, 0) + v
        return HbarSeries(self.ring, out)

    def __eq__(self, other):
        if not isinstance(other, HbarSeries):
            return NotImplemented
        return self.ring == other.ring and self.terms == other.terms

    def is_zero(self) -> bool:
        return not self.terms

    def __repr__(self):
        parts = []
        for n in sorted(self.terms):
            ce = CoefficientElement(self.ring, self.terms[n])
            parts.append(f"[{ce}]*hbar^{n}")
        return " + ".join(parts) or "0"
