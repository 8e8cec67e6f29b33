"""Potentials attached to chamber indices and their formal period integrals.

The oscillatory integral of x^m1 y^m2 exp(W0/hbar) against the dual cycle of
x^a y^b is reduced by integration by parts to the basis monomials; only the
residue label (a, b) of a cycle is ever represented.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Mapping

from .algebra import (CoefficientElement, HbarSeries, PotentialSeries, SymRing,
                      URing)
from .chamber import ChamberError, ChamberIndex, amplitude, is_symmetric
from .combinatorics import BalancedKey, ModelParams, gamma_ratio


class ShapeError(AssertionError):
    """A period integral whose shape contradicts the coefficient formula."""


def cycle_labels(params: ModelParams, formal: bool = False) -> list[tuple[int, int]]:
    """Residue labels 0..r-2 x 0..s-2, or 0..r-1 x 0..s-1 when ``formal``."""
    top = 1 if formal else 2
    return [(a, b) for a in range(params.r - top + 1)
            for b in range(params.s - top + 1)]


def _check_cycle(params: ModelParams, cycle, formal: bool):
    a, b = cycle
    top = 1 if formal else 2
    if not (0 <= a <= params.r - top and 0 <= b <= params.s - top):
        raise ValueError(f"cycle label {cycle} out of range")


def build_potential(nu: ChamberIndex) -> PotentialSeries:
    """W^nu = sum over keys of (-1)^(|J|-1) nu x^k1 y^k2 u_{J,d}."""
    dom = nu.domain
    ring = URing(dom.markings)
    wmax = max(dom.profile(c).m for c in dom.cells)
    terms: dict = {}
    for cell in dom.cells:
        J, d = cell
        mono = tuple(zip(J, d))
        sign = -1 if len(J) % 2 == 0 else 1
        for key in dom.balanced(cell):
            v = nu.values[key]
            if v:
                terms.setdefault((key.k1, key.k2), {})[mono] = sign * v
    return PotentialSeries(dom.params, ring, terms, wmax)


def sym_multisets(ring: SymRing, dmax: Mapping[int, int]):
    """Every admissible t-monomial, grouped per twist class."""
    per_fiber = []
    for tw, labels in ring.fibers.items():
        dm = min(dmax[lab] for lab in labels)
        opts = []
        for n in range(len(labels) + 1):
            for ds in itertools.combinations_with_replacement(range(dm + 1), n):
                opts.append((tw, ds))
        per_fiber.append(opts)
    for choice in itertools.product(*per_fiber):
        yield choice


def build_potential_sym(nu: ChamberIndex) -> PotentialSeries:
    """Symmetric potential over A_{I,sym}.

    Each multiset A of (alpha, beta, d) contributes
    (-1)^(|A|-1) nu / |Aut(A)| on its balanced keys.
    """
    dom = nu.domain
    params = dom.params
    if any(mk.a > params.r - 2 or mk.b > params.s - 2 for mk in dom.markings):
        raise ChamberError("symmetric potential needs twists in 0..r-2 x 0..s-2")
    if not is_symmetric(nu):
        raise ChamberError("chamber index is not invariant under relabeling")
    ring = SymRing(params, dom.markings)
    wmax = max(dom.profile(c).m for c in dom.cells)
    terms: dict = {}
    for choice in sym_multisets(ring, dom.dmax):
        pairs = []
        mono = []
        for (a, b), ds in choice:
            labels = ring.fibers[(a, b)]
            pairs.extend(zip(labels, ds))
            mono.extend((a, b, dd) for dd in ds)
        pairs.sort()
        J = tuple(p[0] for p in pairs)
        d = tuple(p[1] for p in pairs)
        mono = tuple(sorted(mono))
        coef = Fraction(-1 if len(J) % 2 == 0 else 1, SymRing.aut_order(mono))
        for key in dom.balanced((J, d)):
            v = nu.values[key]
            if v:
                terms.setdefault((key.k1, key.k2), {})[mono] = coef * v
    return PotentialSeries(params, ring, terms, wmax)


def reduce_monomial(params: ModelParams, m1: int, m2: int, cycle,
                    formal: bool = False):
    """Integral of x^m1 y^m2 over the dual cycle of x^a y^b.

    Returns ``(n, factor)`` meaning factor * hbar^n, or None when the
    congruences fail.  ``formal`` admits the residues a = r-1, b = s-1, where
    the same recurrence is applied although no cycle exists.
    """
    if m1 < 0 or m2 < 0:
        raise ValueError("exponents must be non-negative")
    _check_cycle(params, cycle, formal)
    a, b = cycle
    r, s = params.r, params.s
    if (m1 - a) % r or (m2 - b) % s:
        return None
    n1, n2 = (m1 - a) // r, (m2 - b) // s
    if n1 < 0 or n2 < 0:
        return None
    factor = gamma_ratio(Fraction(a + 1, r), n1) * gamma_ratio(Fraction(b + 1, s), n2)
    if (n1 + n2) % 2:
        factor = -factor
    return (n1 + n2, factor)


def _perturbation(W: PotentialSeries) -> PotentialSeries:
    params = W.params
    if W.constant_part() != {(params.r, 0): 1, (0, params.s): 1}:
        raise ValueError("potential is not x^r + y^s modulo the maximal ideal")
    return W.maximal_ideal_part().with_wmax(None)


def period_integrals(W: PotentialSeries, cycles=None, formal: bool = False
                     ) -> dict[tuple[int, int], HbarSeries]:
    """Period integrals of exp(W/hbar) for several cycles at once."""
    params = W.params
    if cycles is None:
        cycles = cycle_labels(params, formal)
    for c in cycles:
        _check_cycle(params, c, formal)
    P = _perturbation(W)
    acc = {tuple(c): {} for c in cycles}
    power = PotentialSeries.monomial(params, W.ring, 0, 0)
    for h in range(W.ring.nil_order + 1):
        if h:
            power = power * P
            if power.is_zero():
                break
        inv = Fraction(1, math.factorial(h))
        for (m1, m2), coeffs in power.terms.items():
            for cyc in acc:
                red = reduce_monomial(params, m1, m2, cyc, formal)
                if red is None:
                    continue
                n, f = red
                tgt = acc[cyc].setdefault(n - h, {})
                for mono, v in coeffs.items():
                    tgt[mono] = tgt.get(mono, 0) + inv * f * v
    return {c: HbarSeries(W.ring, t) for c, t in acc.items()}


def period_integral(W: PotentialSeries, cycle, formal: bool = False) -> HbarSeries:
    """Sum_h (W - x^r - y^s)^h / (h! hbar^h), reduced against one cycle."""
    return period_integrals(W, [tuple(cycle)], formal)[tuple(cycle)]


def extract_amplitudes(nu_domain, table: Mapping[tuple[int, int], HbarSeries]
                       ) -> dict:
    """Read amplitudes off a table of period integrals of W^nu.

    The u_{J,d} coefficient must be a single hbar power at exponent
    -d(J,d) - 2 on the cycle (r(J), s(J)) and absent on every other cycle.
    Cells whose residue is not in the table are only checked for absence.
    """
    dom = getattr(nu_domain, "domain", nu_domain)
    out = {}
    for cell in dom.cells:
        J, d = cell
        if not J:
            continue
        mono = tuple(zip(J, d))
        prof = dom.profile(cell)
        home = (prof.rJ, prof.sJ)
        for cyc, series in table.items():
            coeffs = series.mono_coefficients(mono)
            if tuple(cyc) != home:
                if coeffs:
                    raise ShapeError(f"u{list(mono)} appears on cycle {cyc}")
                continue
            n = -prof.dJ - 2
            if set(coeffs) - {n}:
                raise ShapeError(
                    f"u{list(mono)} has hbar exponents {sorted(coeffs)}, expected {n}")
            c = coeffs.get(n, Fraction(0))
            sign = 1 if (len(J) + prof.dJ) % 2 == 0 else -1
            out[cell] = sign * c
    return out


def flat_head(series: HbarSeries, cycle, params: ModelParams) -> dict:
    """Check the flat-coordinate head of a symmetric period integral.

    Modulo the t-variables with positive descendent the series must read
    delta + t_{a,b,0}/hbar + O(hbar^-2).
    """
    ring = series.ring
    red = series.filter_monomials(lambda m: all(d == 0 for d in ring.descendents(m)))
    a, b = cycle
    want0 = {(): Fraction(1)} if (a, b) == (0, 0) else {}
    if isinstance(ring, SymRing):
        t = ring.gen(a, b, 0)
    else:
        t = CoefficientElement(ring, {((lab, 0),): 1 for lab, tw in ring.twist.items()
                                      if tw == (a, b)})
    ok_pos = all(n <= 0 for n in red.terms)
    ok0 = red.terms.get(0, {}) == want0
    ok1 = red.coefficient(-1) == t
    return {"cycle": [a, b], "no_positive_powers": ok_pos, "hbar0_is_delta": ok0,
            "hbar-1_is_flat_coordinate": ok1, "ok": ok_pos and ok0 and ok1}
