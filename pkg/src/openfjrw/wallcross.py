"""The wall-crossing group: generators, their action and the connect solver.

A generator attached to a critical key Lambda_{J,p} with exponents
(k1, k2) = (k1(Lambda) - 1, k2(Lambda) - 1) is the vector field

    v = c u_{J,d} x^k1 y^k2 ((k2 + 1) x d/dx - (k1 + 1) y d/dy),

which is divergence free.  Exponents (0, 0) occur when r(J) = s(J) = 0 and
m(J,d) = rs; since u_{J,d} is nilpotent such a field is still admitted.
A group element is an ordered list of such
fields; exp(v_1) acts first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .algebra import (CoefficientElement, PotentialSeries, SymRing, URing,
                      substitute)
from .bmodel import build_potential
from .chamber import ChamberError, ChamberIndex, check_axioms
from .combinatorics import BalancedKey, CriticalKey, ModelParams, enumerate_critical


class WallCrossingError(RuntimeError):
    pass


@dataclass(frozen=True)
class VectorField:
    """coefficient * x^k1 y^k2 (cx x d/dx + cy y d/dy)."""
    coefficient: CoefficientElement
    k1: int
    k2: int
    cx: Fraction
    cy: Fraction

    @property
    def ring(self):
        return self.coefficient.ring

    def apply(self, f: PotentialSeries) -> PotentialSeries:
        """The derivation v applied to a series."""
        xdx = PotentialSeries(f.params, f.ring,
                              {(a, b): {m: a * v for m, v in c.items()}
                               for (a, b), c in f.terms.items() if a}, f.wmax)
        ydy = PotentialSeries(f.params, f.ring,
                              {(a, b): {m: b * v for m, v in c.items()}
                               for (a, b), c in f.terms.items() if b}, f.wmax)
        g = xdx.scale(self.cx) + ydy.scale(self.cy)
        shift = PotentialSeries.monomial(f.params, f.ring, self.k1, self.k2,
                                         wmax=None)
        return (g * shift).scale(self.coefficient).with_wmax(f.wmax)

    def is_divergence_free(self) -> bool:
        # div(x^k1 y^k2 (cx x dx + cy y dy)) = ((k1+1) cx + (k2+1) cy) x^k1 y^k2
        return (self.k1 + 1) * self.cx + (self.k2 + 1) * self.cy == 0


@dataclass(frozen=True)
class GeneratorField:
    """A generator indexed by a critical key, with rational coefficient c."""
    key: CriticalKey
    c: Fraction

    def __post_init__(self):
        if not self.key.J:
            raise ValueError("generators need a non-empty J")
        object.__setattr__(self, "c", Fraction(self.c))

    @property
    def k1(self) -> int:
        return self.key.k1 - 1

    @property
    def k2(self) -> int:
        return self.key.k2 - 1

    @property
    def mono(self):
        return tuple(zip(self.key.J, self.key.d))

    def field(self, ring) -> VectorField:
        if isinstance(ring, URing):
            coef = CoefficientElement(ring, {ring.check_mono(self.mono): self.c})
        else:
            raise TypeError("generator fields are defined over A_I")
        return VectorField(coef, self.k1, self.k2,
                           Fraction(self.k2 + 1), Fraction(-(self.k1 + 1)))

    def as_dict(self) -> dict:
        return {"J": list(self.key.J),
                "d": {str(j): dj for j, dj in zip(self.key.J, self.key.d)},
                "p": self.key.p, "c": _qstr(self.c)}


def _qstr(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class GroupElement:
    """exp(v_n) o ... o exp(v_1) for factors (v_1, ..., v_n)."""
    factors: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))

    def compose(self, first: "GroupElement") -> "GroupElement":
        """self o first: apply ``first`` and then ``self``."""
        return GroupElement(first.factors + self.factors)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return self.compose(other)

    def is_identity_word(self) -> bool:
        return not self.factors


def make_generator(params: ModelParams, markings, J, d, p: int, c) -> GeneratorField:
    """Generator for Lambda_{J,p}; membership identities are asserted."""
    from .combinatorics import profile_from_data
    twist = {mk.label: mk.twist for mk in markings}
    J = tuple(sorted(J))
    if isinstance(d, dict):
        d = tuple(int(d[j]) for j in J)
    d = tuple(d)
    if any(j not in twist for j in J):
        raise ValueError("J must be a subset of the markings")
    if not J:
        raise ValueError("generators need a non-empty J")
    prof = profile_from_data(params, [twist[j] for j in J], d)
    keys = enumerate_critical(prof, J, d)
    if not 1 <= p <= len(keys):
        raise ValueError(f"critical index p={p} outside 1..{max(prof.N, 0)}")
    gen = GeneratorField(keys[p - 1], Fraction(c))
    k1, k2 = gen.k1, gen.k2
    assert params.weight(k1, k2) == prof.m - params.r * params.s
    assert (k1 - prof.rJ) % params.r == 0 and (k2 - prof.sJ) % params.s == 0
    return gen


def _as_field(factor, ring) -> VectorField:
    if isinstance(factor, VectorField):
        if factor.ring != ring:
            raise ValueError("ring mismatch")
        return factor
    return factor.field(ring)


def exp_images(v: VectorField, params: ModelParams, wmax=None):
    """Images of x and y under exp(v), as exact series."""
    ring = v.ring
    out = []
    for var in ((1, 0), (0, 1)):
        base = PotentialSeries.monomial(params, ring, *var, wmax=wmax)
        if isinstance(ring, URing) and (v.coefficient * v.coefficient).is_zero():
            out.append(base + v.apply(base))
            continue
        total, term, n = base, base, 1
        while True:
            term = v.apply(term).scale(Fraction(1, n))
            if term.is_zero():
                break
            total = total + term
            n += 1
            if n > ring.nil_order + 2:
                raise WallCrossingError("exponential did not terminate")
        out.append(total)
    return out[0], out[1]


def closed_form_images(v: VectorField, params: ModelParams):
    """x, y images from the explicit formulas for a divergence-free field.

    With g the coefficient (times the normalisation of the field) and
    q = x^a y^b: x (1 + (b-a) g q)^((b+1)/(b-a)), y (1 + (b-a) g q)^((a+1)/(a-b))
    when a != b, and x exp((a+1) g q), y exp(-(a+1) g q) when a = b.
    """
    a, b = v.k1, v.k2
    if not v.is_divergence_free():
        raise ValueError("closed form needs a divergence-free field")
    # normalise to (b+1) x dx - (a+1) y dy
    scale = v.cx / (b + 1)
    g = v.coefficient * scale
    ring = v.ring
    q = PotentialSeries.monomial(params, ring, a, b).scale(g)
    one = PotentialSeries.monomial(params, ring, 0, 0)
    x = PotentialSeries.x(params, ring)
    y = PotentialSeries.y(params, ring)

    def series_in(z: PotentialSeries, coeff):
        total, power, n = one, one, 0
        while True:
            n += 1
            power = power * z
            if power.is_zero():
                return total
            total = total + power.scale(coeff(n))

    if a != b:
        z = q.scale(b - a)
        ax = Fraction(b + 1, b - a)
        ay = Fraction(a + 1, a - b)
        return (x * series_in(z, lambda n: _binom(ax, n)),
                y * series_in(z, lambda n: _binom(ay, n)))
    z = q.scale(a + 1)
    return (x * series_in(z, lambda n: Fraction(1, math.factorial(n))),
            y * series_in(z, lambda n: Fraction((-1) ** n, math.factorial(n))))


def _binom(alpha: Fraction, n: int) -> Fraction:
    out = Fraction(1)
    for i in range(n):
        out *= (alpha - i)
    return out / math.factorial(n)


def exp_apply(g: GroupElement, series: PotentialSeries) -> PotentialSeries:
    """Apply exp(v_1), then exp(v_2), ... by substitution."""
    out = series
    for factor in g.factors:
        v = _as_field(factor, series.ring)
        X, Y = exp_images(v, series.params, series.wmax)
        out = substitute(out, X, Y)
    return out


def read_chamber(W: PotentialSeries, domain) -> ChamberIndex:
    """Inverse of build_potential; every monomial must sit on a balanced key."""
    values = {}
    for k1, k2, mono, c in W.items():
        J = tuple(l for l, _ in mono)
        d = tuple(dd for _, dd in mono)
        cell = (J, d)
        try:
            keys = domain.balanced(cell)
        except KeyError:
            raise WallCrossingError(f"monomial u{list(mono)} outside the domain")
        match = [k for k in keys if (k.k1, k.k2) == (k1, k2)]
        if not match:
            raise WallCrossingError(
                f"stray monomial u{list(mono)} x^{k1} y^{k2}: not a balanced key")
        sign = -1 if len(J) % 2 == 0 else 1
        values[match[0]] = sign * c
    return ChamberIndex(domain, values)


def act_on_chamber(g: GroupElement, nu: ChamberIndex, check: bool = True
                   ) -> ChamberIndex:
    """g(nu), read off from g(W^nu)."""
    W = build_potential(nu)
    out = read_chamber(exp_apply(g, W), nu.domain)
    if check:
        rep = check_axioms(out)
        if not rep.ok:
            raise WallCrossingError(f"image fails the chamber axioms: {rep.violations[:3]}")
    return out


def connect(nu: ChamberIndex, nu2: ChamberIndex, check: bool = True) -> GroupElement:
    """A group element g with g(nu) = nu2.

    Cells are processed by increasing |J|, then weighted level m(J,d), then J
    and d.  A generator at (J, d) only changes that cell and cells with
    strictly larger label sets, so this order never disturbs a fixed cell.
    """
    if nu.domain != nu2.domain:
        raise ChamberError("chamber indices live on different domains")
    if check:
        for which, x in (("first", nu), ("second", nu2)):
            rep = check_axioms(x)
            if not rep.ok:
                raise ChamberError(f"{which} argument is not a chamber index: "
                                   f"{rep.violations[:3]}")
    dom = nu.domain
    params = dom.params
    ring = URing(dom.markings)
    W = build_potential(nu)
    cells = sorted(dom.cells, key=lambda c: (len(c[0]), dom.profile(c).m, c[0], c[1]))
    factors = []
    for cell in cells:
        J, d = cell
        if not J:
            continue
        keys = dom.balanced(cell)
        crit = dom.critical(cell)
        sign = -1 if len(J) % 2 == 0 else 1
        mono = tuple(zip(J, d))
        prof = dom.profile(cell)
        for p0, ck in enumerate(crit):
            k = keys[p0]
            cur = sign * W.terms.get((k.k1, k.k2), {}).get(mono, Fraction(0))
            diff = nu2.values[k] - cur
            if not diff:
                continue
            c = (-sign) * diff / (params.s * (prof.rJ + p0 * params.r + 1))
            gen = GeneratorField(ck, c)
            step = GroupElement((gen,))
            W = exp_apply(step, W)
            factors.append(gen)
        for k in keys:
            cur = sign * W.terms.get((k.k1, k.k2), {}).get(mono, Fraction(0))
            if cur != nu2.values[k]:
                raise WallCrossingError(
                    f"cell J={list(J)}, d={list(d)}, p={k.p}: residual "
                    f"{nu2.values[k] - cur} after correction")
    return GroupElement(tuple(factors))


@dataclass
class PreservationReport:
    jacobian_one: bool = True
    ideal_preserved: bool = True
    generators_homogeneous: bool = True
    congruence_invariant: bool = True
    images_homogeneous: bool = True
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (self.jacobian_one and self.ideal_preserved
                and self.generators_homogeneous and self.congruence_invariant
                and self.images_homogeneous)

    def as_dict(self) -> dict:
        return {"ok": self.ok, "jacobian_one": self.jacobian_one,
                "ideal_preserved": self.ideal_preserved,
                "generators_homogeneous": self.generators_homogeneous,
                "congruence_invariant": self.congruence_invariant,
                "images_homogeneous": self.images_homogeneous,
                "failures": list(self.failures)}


def automorphism_images(g: GroupElement, params: ModelParams, ring, wmax=None):
    x = PotentialSeries.x(params, ring, wmax)
    y = PotentialSeries.y(params, ring, wmax)
    return exp_apply(g, x), exp_apply(g, y)


def preservation_check(g: GroupElement, params: ModelParams, ring,
                       W_max: int | None = None) -> PreservationReport:
    """Exact checks that g is a volume-preserving, equivariant, homogeneous
    automorphism preserving the ideal (xy)."""
    rep = PreservationReport()
    r, s = params.r, params.s
    for i, factor in enumerate(g.factors):
        v = _as_field(factor, ring)
        if not v.is_divergence_free():
            rep.generators_homogeneous = False
            rep.failures.append(f"factor {i}: not a divergence-free generator shape")
        for mono in v.coefficient.terms:
            sa, sb = ring.twist_sum(mono)
            if params.weight(v.k1, v.k2) != ring.mono_weight(params, mono):
                rep.generators_homogeneous = False
                rep.failures.append(f"factor {i}: weight identity fails")
            if (v.k1 - sa) % r or (v.k2 - sb) % s:
                rep.congruence_invariant = False
                rep.failures.append(f"factor {i}: congruence fails")
    X, Y = automorphism_images(g, params, ring)
    det = X.diff_x() * Y.diff_y() - X.diff_y() * Y.diff_x()
    if W_max is not None:
        det = det.with_wmax(W_max)
    one = PotentialSeries.monomial(params, ring, 0, 0, wmax=det.wmax)
    if det != one:
        rep.jacobian_one = False
        rep.failures.append(f"Jacobian determinant {det!r}")
    if any(k1 == 0 for (k1, _) in X.terms) or any(k2 == 0 for (_, k2) in Y.terms):
        rep.ideal_preserved = False
        rep.failures.append("image of x (or y) not divisible by x (or y)")
    for name, img, shift in (("x", X, (1, 0)), ("y", Y, (0, 1))):
        for k1, k2, mono, c in img.items():
            sa, sb = ring.twist_sum(mono)
            if (k1 - shift[0] - sa) % r or (k2 - shift[1] - sb) % s:
                rep.congruence_invariant = False
                rep.failures.append(f"{name}-image term x^{k1} y^{k2} breaks congruence")
            if params.weight(k1, k2) - params.weight(*shift) != ring.mono_weight(params, mono):
                rep.images_homogeneous = False
                rep.failures.append(f"{name}-image term x^{k1} y^{k2} not homogeneous")
    return rep
