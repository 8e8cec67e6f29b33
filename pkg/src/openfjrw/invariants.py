"""Closed extended genus-0 invariants from amplitudes, and the recursion checks.

A closed extended invariant <tau_{d_0}^{(a_0,b_0)} prod_J tau_{d_j}^{(a_j,b_j)}>
with a distinguished insertion i_0 (twist at most (r-2, s-2)) and the other
insertions open-range is read off from the amplitude of J on a minimal chamber
index, up to a sign convention.
"""

from __future__ import annotations

import enum
import itertools
import threading
from fractions import Fraction
from typing import Mapping, Sequence

from .chamber import amplitude, build_minimal_chamber
from .combinatorics import (ClosedInsertion, DoubleNegative, Marking,
                            ModelParams, Selection, closed_selection,
                            profile_from_data, subsets)


class SignConvention(enum.Enum):
    """How a closed invariant relates to the amplitude of its open part.

    MIRROR_A: <...> = (-1)^(d(J,d)-1) A(J,d).
    OPEN_MS:  <...> = A(J,d).
    """
    MIRROR_A = "MirrorA"
    OPEN_MS = "OpenMS"


# Calibrated against the closed recursion, see calibrate_convention().
DEFAULT_CONVENTION = SignConvention.OPEN_MS


class NoDistinguishedInsertion(ValueError):
    """No insertion can play the distinguished role; not computable here."""


class InvariantCache:
    """Chamber indices and amplitudes keyed by canonical twist data."""

    def __init__(self):
        self._lock = threading.Lock()
        self._chambers: dict = {}
        self._amps: dict = {}

    def clear(self):
        with self._lock:
            self._chambers.clear()
            self._amps.clear()

    def amplitude(self, params: ModelParams, data: Sequence[tuple[int, int, int]]
                  ) -> Fraction:
        """Amplitude of markings with (a, b, d) data; label-independent."""
        data = tuple(sorted(data))
        key = (params.r, params.s, data)
        hit = self._amps.get(key)
        if hit is not None:
            return hit
        twists = tuple((a, b) for a, b, _ in data)
        dmax = max((d for _, _, d in data), default=0)
        ckey = (params.r, params.s, twists, dmax)
        nu = self._chambers.get(ckey)
        if nu is None:
            marks = [Marking(i + 1, a, b) for i, (a, b) in enumerate(twists)]
            nu = build_minimal_chamber(params, marks, dmax)
            with self._lock:
                self._chambers.setdefault(ckey, nu)
        val = amplitude(nu, tuple(range(1, len(data) + 1)),
                        tuple(d for _, _, d in data))
        with self._lock:
            self._amps[key] = val
        return val


_CACHE = InvariantCache()


def open_amplitude(params: ModelParams, data: Sequence[tuple[int, int, int]],
                   cache: InvariantCache | None = None) -> Fraction:
    """A(J, d) for markings given as (a, b, d) triples (chamber independent)."""
    return (cache or _CACHE).amplitude(params, data)


def distinguished_candidates(params: ModelParams,
                             insertions: Sequence[ClosedInsertion]) -> list[int]:
    r, s = params.r, params.s
    out = []
    for i, ins in enumerate(insertions):
        if ins.a > r - 2 or ins.b > s - 2:
            continue
        rest = [x for j, x in enumerate(insertions) if j != i]
        if all(0 <= x.a <= r - 1 and 0 <= x.b <= s - 1 for x in rest):
            out.append(i)
    return out


def _sign(conv: SignConvention, dJ: int) -> int:
    if conv is SignConvention.OPEN_MS:
        return 1
    return 1 if (dJ - 1) % 2 == 0 else -1


def ext_invariant_at(params: ModelParams, insertions: Sequence[ClosedInsertion],
                     i0: int, conv: SignConvention = DEFAULT_CONVENTION,
                     cache: InvariantCache | None = None) -> Fraction:
    """The invariant computed with insertion ``i0`` as the distinguished one.

    Selection rules must already pass.
    """
    r, s = params.r, params.s
    dist = insertions[i0]
    rest = [x for j, x in enumerate(insertions) if j != i0]
    prof = profile_from_data(params, [x.twist for x in rest], [x.d for x in rest])
    assert prof.rJ == (r - 2 - dist.a) % r and prof.sJ == (s - 2 - dist.b) % s
    assert dist.d == prof.dJ, (dist, prof)
    val = open_amplitude(params, [(x.a, x.b, x.d) for x in rest], cache)
    return _sign(conv, prof.dJ) * val


def ext_invariant(params: ModelParams, insertions: Sequence[ClosedInsertion],
                  conv: SignConvention = DEFAULT_CONVENTION,
                  cache: InvariantCache | None = None) -> Fraction:
    """Closed extended genus-0 invariant of a list of insertions.

    Forced zeros come from the selection rules.  Raises DoubleNegative and
    NoDistinguishedInsertion for unsupported input.
    """
    insertions = list(insertions)
    sel = closed_selection(params, insertions)
    if not sel.ok:
        return Fraction(0)
    cands = distinguished_candidates(params, insertions)
    if not cands:
        raise NoDistinguishedInsertion(
            f"no insertion of {[(x.a, x.b, x.d) for x in insertions]} "
            "can be distinguished")
    # canonical choice: the candidate with the smallest (a, b, d)
    i0 = min(cands, key=lambda i: (insertions[i].a, insertions[i].b,
                                   insertions[i].d, i))
    return ext_invariant_at(params, insertions, i0, conv, cache)


def distinguished_values(params: ModelParams, insertions: Sequence[ClosedInsertion],
                         conv: SignConvention = DEFAULT_CONVENTION,
                         cache: InvariantCache | None = None) -> list[Fraction]:
    """The invariant under every admissible distinguished choice."""
    insertions = list(insertions)
    if not closed_selection(params, insertions).ok:
        return []
    return [ext_invariant_at(params, insertions, i, conv, cache)
            for i in distinguished_candidates(params, insertions)]


def _ext_or_zero(params, insertions, conv, cache) -> Fraction:
    # invariants with two -1 twists in a coordinate do not exist and contribute 0
    try:
        return ext_invariant(params, insertions, conv, cache)
    except DoubleNegative:
        return Fraction(0)


def _split(items: Sequence[int]):
    items = tuple(items)
    for A in subsets(items):
        B = tuple(x for x in items if x not in A)
        yield A, B


def open_trr_sides(params: ModelParams, markings: Sequence[Marking],
                   d: Mapping[int, int], j1: int, j2: int | None = None,
                   conv: SignConvention = DEFAULT_CONVENTION,
                   cache: InvariantCache | None = None):
    """Both sides of the open recursion for the descendent of ``j1``.

    Without ``j2`` this is the first identity (with the -A(I,d) term), with
    ``j2`` the second (j2 forced into B).
    """
    r, s = params.r, params.s
    mk = {m.label: m for m in markings}
    if j1 not in mk or (j2 is not None and (j2 not in mk or j2 == j1)):
        raise ValueError("j1, j2 must be distinct labels of the markings")
    data = {lab: (m.a, m.b, int(d[lab])) for lab, m in mk.items()}
    lhs_data = dict(data)
    a1, b1, d1 = data[j1]
    lhs_data[j1] = (a1, b1, d1 + 1)
    lhs = open_amplitude(params, list(lhs_data.values()), cache)
    others = sorted(lab for lab in mk if lab != j1)
    rhs = Fraction(0)
    for a in range(-1, r - 1):
        for b in range(-1, s - 1):
            z = (r - 2 - a, s - 2 - b, 0)
            for A, B in _split(others):
                if not A:
                    continue
                if j2 is not None and j2 not in B:
                    continue
                ins = [ClosedInsertion(a, b, 0), ClosedInsertion(a1, b1, d1)]
                ins += [ClosedInsertion(*data[i]) for i in A]
                inv = _ext_or_zero(params, ins, conv, cache)
                if not inv:
                    continue
                amp = open_amplitude(params, [data[i] for i in B] + [z], cache)
                rhs += inv * amp
    if j2 is None:
        rhs -= open_amplitude(params, list(data.values()), cache)
    return lhs, rhs


def verify_open_trr(params: ModelParams, markings: Sequence[Marking],
                    d: Mapping[int, int], j1: int, j2: int | None = None,
                    conv: SignConvention = DEFAULT_CONVENTION,
                    cache: InvariantCache | None = None) -> Fraction:
    """LHS - RHS of the open recursion."""
    lhs, rhs = open_trr_sides(params, markings, d, j1, j2, conv, cache)
    return lhs - rhs


def verify_mirror_recursion(params: ModelParams, markings: Sequence[Marking],
                            d: Mapping[int, int], j1: int, j2: int,
                            conv: SignConvention = DEFAULT_CONVENTION,
                            cache: InvariantCache | None = None) -> Fraction:
    """Residual of the solved form: A(I,d) against the sum over splittings of
    I minus {j1, j2} with both j1, j2 in the closed factor."""
    r, s = params.r, params.s
    mk = {m.label: m for m in markings}
    if len(mk) < 2 or j1 == j2 or j1 not in mk or j2 not in mk:
        raise ValueError("need two distinct labels")
    data = {lab: (m.a, m.b, int(d[lab])) for lab, m in mk.items()}
    lhs = open_amplitude(params, list(data.values()), cache)
    others = sorted(lab for lab in mk if lab not in (j1, j2))
    rhs = Fraction(0)
    for a in range(-1, r - 1):
        for b in range(-1, s - 1):
            z = (r - 2 - a, s - 2 - b, 0)
            for A, B in _split(others):
                ins = [ClosedInsertion(a, b, 0)]
                ins += [ClosedInsertion(*data[i]) for i in (j1, j2) + A]
                inv = _ext_or_zero(params, ins, conv, cache)
                if inv:
                    rhs += inv * open_amplitude(
                        params, [data[i] for i in B] + [z], cache)
    return lhs - rhs


def closed_trr_sides(params: ModelParams, insertions: Sequence[ClosedInsertion],
                     conv: SignConvention = DEFAULT_CONVENTION,
                     cache: InvariantCache | None = None):
    """Both sides of the closed recursion.

    ``insertions`` is the left-hand side; the first carries descendent
    d_1 >= 1 and the right-hand side uses d_1 - 1.  Insertions 2 and 3 stay
    in the first factor.
    """
    ins = list(insertions)
    r, s = params.r, params.s
    if len(ins) < 3:
        raise ValueError("need at least three insertions")
    if ins[0].d < 1:
        raise ValueError("first insertion needs descendent >= 1")
    lhs = _ext_or_zero(params, ins, conv, cache)
    first = ClosedInsertion(ins[0].a, ins[0].b, ins[0].d - 1)
    rest = list(range(3, len(ins)))
    rhs = Fraction(0)
    for a in range(-1, r):
        for b in range(-1, s):
            for extra, B in _split(rest):
                A = (1, 2) + extra
                left = [ClosedInsertion(r - 2 - a, s - 2 - b, 0)] + [ins[i] for i in A]
                v1 = _ext_or_zero(params, left, conv, cache)
                if not v1:
                    continue
                right = [ClosedInsertion(a, b, 0), first] + [ins[i] for i in B]
                v2 = _ext_or_zero(params, right, conv, cache)
                rhs += v1 * v2
    return lhs, rhs


def verify_closed_trr(params: ModelParams, insertions: Sequence[ClosedInsertion],
                      conv: SignConvention = DEFAULT_CONVENTION,
                      cache: InvariantCache | None = None) -> Fraction:
    lhs, rhs = closed_trr_sides(params, insertions, conv, cache)
    return lhs - rhs


def closed_trr_instances(params: ModelParams, n_values=(3, 4), d1: int = 1,
                         twists=None):
    """All insertion lists of the given sizes with first descendent d1, other
    descendents 0, at most one -1 twist (as (-1,-1)) and nonzero-feasible
    selection data.  Lists are canonical up to reordering of insertions 4..n."""
    r, s = params.r, params.s
    if twists is None:
        twists = [(a, b) for a in range(-1, r) for b in range(-1, s)
                  if (a == -1) == (b == -1)]
    out = []
    for n in n_values:
        for first in twists:
            for pair in itertools.combinations_with_replacement(twists, 2):
                for tail in itertools.combinations_with_replacement(twists, n - 3):
                    tw = [first, *pair, *tail]
                    if sum(1 for t in tw if t[0] == -1) > 1:
                        continue
                    ins = [ClosedInsertion(*first, d1)] + \
                          [ClosedInsertion(*t, 0) for t in (*pair, *tail)]
                    sel = closed_selection(params, ins)
                    if sel.kind in (Selection.NON_INTEGRAL_RANK,):
                        continue
                    out.append(ins)
    return out


def calibrate_convention(params: ModelParams, instances,
                         cache: InvariantCache | None = None) -> dict:
    """Closed-recursion residuals and distinguished-choice consistency under
    both conventions.  Unsupported instances are counted separately."""
    report = {}
    for conv in SignConvention:
        nonzero, unsupported, inconsistent, checked = [], 0, [], 0
        for ins in instances:
            try:
                res = verify_closed_trr(params, ins, conv, cache)
                vals = distinguished_values(params, ins, conv, cache)
            except NoDistinguishedInsertion:
                unsupported += 1
                continue
            checked += 1
            if res:
                nonzero.append((ins, res))
            if len(set(vals)) > 1:
                inconsistent.append((ins, vals))
        report[conv] = {"checked": checked, "unsupported": unsupported,
                        "nonzero": nonzero, "inconsistent": inconsistent,
                        "ok": checked > 0 and not nonzero and not inconsistent}
    return report


def random_group_element(domain, rng, max_factors: int = 5,
                         coefficients=(1, -1, Fraction(1, 2), Fraction(-1, 2), 2, -2)):
    """A random word in the generators of the domain (at least one factor)."""
    from .wallcross import GeneratorField, GroupElement
    crit = [k for c in domain.cells if c[0] for k in domain.critical(c)]
    if not crit:
        return GroupElement(())
    n = rng.randint(1, max_factors)
    return GroupElement(tuple(GeneratorField(rng.choice(crit), Fraction(rng.choice(coefficients)))
                              for _ in range(n)))


def verify_mirror(nu, conv: SignConvention = DEFAULT_CONVENTION, n_random: int = 5,
                  seed: int = 0, cache: InvariantCache | None = None) -> dict:
    """Mirror report for a chamber index.

    (i) every u_{J,d} coefficient of the period integrals of W^nu equals
        (-1)^|J| (-hbar)^(-d(J,d)-2) times the closed invariant (or (-1)^d for
        singletons); for symmetric input the symmetric integrals map onto the
        non-symmetric ones under psi_I;
    (ii) amplitudes are unchanged under random wall-crossing transports;
    (iii) flat-coordinate heads delta + t_{a,b,0}/hbar + O(hbar^-2).
    Nothing in the report depends on the gauge of nu.
    """
    import random

    from .algebra import psi_I
    from .bmodel import (build_potential, build_potential_sym, cycle_labels,
                         flat_head, period_integrals)
    from .chamber import check_axioms, is_symmetric
    from .wallcross import act_on_chamber

    dom = nu.domain
    params = dom.params
    r, s = params.r, params.s
    W = build_potential(nu)
    table = period_integrals(W)
    mismatches = []
    for cell in dom.cells:
        J, d = cell
        if not J:
            continue
        prof = dom.profile(cell)
        mono = tuple(zip(J, d))
        if len(J) == 1:
            closed = Fraction((-1) ** d[0])
        elif prof.dJ < 0:
            closed = Fraction(0)
        else:
            ins = [ClosedInsertion(r - prof.rJ - 2, s - prof.sJ - 2, prof.dJ)]
            ins += [ClosedInsertion(*dom.twist[j], dj) for j, dj in zip(J, d)]
            closed = ext_invariant(params, ins, conv, cache)
        n = -prof.dJ - 2
        coef = (-1) ** len(J) * (-1) ** (n % 2) * closed
        for cyc, series in table.items():
            want = {n: coef} if (cyc == (prof.rJ, prof.sJ) and coef) else {}
            got = series.mono_coefficients(mono)
            if got != want:
                mismatches.append({"J": list(J), "d": list(d), "cycle": list(cyc),
                                   "expected": {str(k): str(v) for k, v in want.items()},
                                   "found": {str(k): str(v) for k, v in got.items()}})
    report = {"convention": conv.value,
              "closed_generating_function": {"ok": not mismatches,
                                             "mismatches": mismatches[:20]}}

    heads = []
    for cyc, series in sorted(table.items()):
        a, b = cyc
        terms = []
        ok = series.mono_coefficients(()) == ({0: Fraction(1)} if cyc == (0, 0) else {})
        for mk in dom.markings:
            if mk.twist != cyc:
                continue
            for dd in range(dom.dmax[mk.label] + 1):
                c = series.mono_coefficients(((mk.label, dd),))
                good = c == {dd - 1: Fraction(1)}
                ok = ok and good
                terms.append({"label": mk.label, "d": dd, "hbar_exponent": dd - 1,
                              "ok": good})
        heads.append({"cycle": [a, b], "delta": int(cyc == (0, 0)),
                      "descendent_terms": terms, "ok": ok})
    report["head_terms"] = {"ok": all(h["ok"] for h in heads), "cycles": heads}

    flats = [flat_head(table[c], c, params) for c in sorted(table)]
    sym = None
    narrow = all(mk.a <= r - 2 and mk.b <= s - 2 for mk in dom.markings)
    if narrow:
        # a transported index is rarely symmetric; the minimal gauge of the
        # same domain is, and has the same period integrals
        base = nu if is_symmetric(nu) else build_minimal_chamber(params, dom.markings,
                                                                  dom.dmax)
        Ws = build_potential_sym(base)
        stable = period_integrals(Ws)
        ring = W.ring
        psi_ok = all(stable[c].map_coefficients(lambda e: psi_I(e, ring), ring) == table[c]
                     for c in table)
        pot_ok = Ws.map_coefficients(lambda e: psi_I(e, ring), ring) == build_potential(base)
        flats += [dict(flat_head(stable[c], c, params), ring="sym") for c in sorted(stable)]
        sym = {"ok": psi_ok and pot_ok, "potential_maps_to_W": pot_ok,
               "integrals_map_to_integrals": psi_ok}
    report["symmetric"] = sym if sym is not None else {"ok": True, "skipped": True}
    report["flat_coordinates"] = {"ok": all(f["ok"] for f in flats), "cycles": flats}

    rng = random.Random(seed)
    amps = {c: amplitude(nu, *c) for c in dom.cells if c[0]}
    moved = []
    for i in range(n_random):
        g = random_group_element(dom, rng)
        nu2 = act_on_chamber(g, nu, check=False)
        if not check_axioms(nu2).ok:
            moved.append({"trial": i, "axioms": False})
            continue
        diff = [list(c[0]) for c in amps if amplitude(nu2, *c) != amps[c]]
        if diff:
            moved.append({"trial": i, "changed_cells": diff[:5]})
    report["chamber_independence"] = {"ok": not moved, "trials": n_random,
                                      "failures": moved}
    report["ok"] = all(report[k]["ok"] for k in
                       ("closed_generating_function", "head_terms", "symmetric",
                        "flat_coordinates", "chamber_independence"))
    return report
