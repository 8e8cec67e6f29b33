"""Chamber indices, amplitudes, the axiom checker and the minimal builder."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .combinatorics import (BalancedKey, CriticalKey, Marking, ModelParams,
                            TwistProfile, check_markings, enumerate_balanced,
                            enumerate_critical, gamma_ratio, ordered_partitions,
                            profile_from_data, subsets)

Cell = tuple  # (J, d) with d aligned to the sorted label tuple J


class ChamberError(ValueError):
    pass


class ChamberDomain:
    """All cells (J, d) with J a subset of I and d_i <= dmax_i, with their
    profiles and graph keys.  Shared by every chamber index on the same data."""

    def __init__(self, params: ModelParams, markings: Iterable[Marking],
                 dmax: int | Mapping[int, int]):
        self.params = params
        self.markings = tuple(sorted(markings))
        check_markings(params, self.markings)
        self.labels = tuple(mk.label for mk in self.markings)
        self.twist = {mk.label: mk.twist for mk in self.markings}
        if isinstance(dmax, Mapping):
            self.dmax = {lab: int(dmax[lab]) for lab in self.labels}
        else:
            self.dmax = {lab: int(dmax) for lab in self.labels}
        if any(v < 0 for v in self.dmax.values()):
            raise ValueError("dmax must be non-negative")
        self._profiles: dict[Cell, TwistProfile] = {}
        self._balanced: dict[Cell, list[BalancedKey]] = {}
        self._critical: dict[Cell, list[CriticalKey]] = {}
        cells = []
        for J in subsets(self.labels):
            for d in itertools.product(*(range(self.dmax[j] + 1) for j in J)):
                cell = (J, tuple(d))
                prof = profile_from_data(params, [self.twist[j] for j in J], d)
                self._profiles[cell] = prof
                self._balanced[cell] = enumerate_balanced(prof, J, d)
                self._critical[cell] = enumerate_critical(prof, J, d)
                cells.append(cell)
        cells.sort(key=lambda c: (len(c[0]), c[0], c[1]))
        self.cells: tuple[Cell, ...] = tuple(cells)
        self.key = (params.r, params.s,
                    tuple((mk.label, mk.a, mk.b) for mk in self.markings),
                    tuple(sorted(self.dmax.items())))

    def __eq__(self, other):
        return isinstance(other, ChamberDomain) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def normalize_cell(self, J, d=None) -> Cell:
        J = tuple(sorted(J))
        if d is None:
            dt = (0,) * len(J)
        elif isinstance(d, Mapping):
            dt = tuple(int(d[j]) for j in J)
        else:
            dt = tuple(d)
            if len(dt) != len(J):
                raise ValueError("descendent vector length differs from J")
        cell = (J, dt)
        if cell not in self._profiles:
            raise ChamberError(f"cell J={list(J)}, d={list(dt)} outside the domain")
        return cell

    def profile(self, cell: Cell) -> TwistProfile:
        return self._profiles[cell]

    def balanced(self, cell: Cell) -> list[BalancedKey]:
        return self._balanced[cell]

    def critical(self, cell: Cell) -> list[CriticalKey]:
        return self._critical[cell]

    def all_keys(self) -> list[BalancedKey]:
        return [k for c in self.cells for k in self._balanced[c]]

    def is_constrained(self, cell: Cell) -> bool:
        """Whether the chamber axioms fix the amplitude of this cell."""
        J, d = cell
        if len(J) == 1:
            return d[0] > 0
        if len(J) >= 2:
            prof = self._profiles[cell]
            s, r = self.params.s, self.params.r
            return prof.m >= s * prof.rJ + r * prof.sJ
        return False

    def target(self, cell: Cell) -> Fraction:
        J, d = cell
        if len(J) == 1:
            return Fraction((-1) ** d[0])
        return Fraction(0)


class ChamberIndex:
    """A rational value on every balanced key of a domain."""

    def __init__(self, domain: ChamberDomain, values: Mapping[BalancedKey, Fraction]):
        self.domain = domain
        vals = {}
        for key in domain.all_keys():
            vals[key] = Fraction(values.get(key, 0))
        extra = set(values) - set(vals)
        if extra:
            raise ChamberError(f"values given off the domain: {sorted(extra)[:3]}")
        self.values = vals
        self._block_cache: dict = {}

    @property
    def params(self) -> ModelParams:
        return self.domain.params

    @property
    def markings(self):
        return self.domain.markings

    def value(self, J, d, p: int) -> Fraction:
        J, d = self.domain.normalize_cell(J, d)
        return self.values[BalancedKey(J, d, p)]

    def cell_terms(self, cell: Cell) -> list[tuple[int, int, Fraction]]:
        """Nonzero (k1, k2, nu) on the balanced keys of one cell."""
        out = self._block_cache.get(cell)
        if out is None:
            out = [(k.k1, k.k2, self.values[k]) for k in self.domain.balanced(cell)
                   if self.values[k]]
            self._block_cache[cell] = out
        return out

    def with_values(self, values: Mapping[BalancedKey, Fraction]) -> "ChamberIndex":
        return ChamberIndex(self.domain, values)

    def __eq__(self, other):
        if not isinstance(other, ChamberIndex):
            return NotImplemented
        return self.domain == other.domain and self.values == other.values

    def differing_keys(self, other: "ChamberIndex") -> list[BalancedKey]:
        return [k for k in self.values if self.values[k] != other.values.get(k)]


def amplitude(nu: ChamberIndex, J, d=None) -> Fraction:
    """Gamma-weighted sum over ordered partitions of J of products of nu."""
    dom = nu.domain
    J, d = dom.normalize_cell(J, d)
    if not J:
        raise ChamberError("amplitude needs a non-empty J")
    dmap = dict(zip(J, d))
    prof = dom.profile((J, d))
    r, s = dom.params.r, dom.params.s
    c1 = Fraction(1 + prof.rJ, r)
    c2 = Fraction(1 + prof.sJ, s)
    gr1: dict[int, Fraction] = {}
    gr2: dict[int, Fraction] = {}
    total = Fraction(0)
    for h in range(1, len(J) + 1):
        inv = Fraction(1, math.factorial(h))
        for blocks in ordered_partitions(J, h):
            lists = [nu.cell_terms((B, tuple(dmap[j] for j in B))) for B in blocks]
            if any(not lst for lst in lists):
                continue
            part = Fraction(0)
            for combo in itertools.product(*lists):
                K1 = K2 = 0
                prod = Fraction(1)
                for k1, k2, v in combo:
                    K1 += k1
                    K2 += k2
                    prod *= v
                n1, rem1 = divmod(K1 - prof.rJ, r)
                n2, rem2 = divmod(K2 - prof.sJ, s)
                assert rem1 == 0 and rem2 == 0 and n1 >= 0 and n2 >= 0
                if n1 not in gr1:
                    gr1[n1] = gamma_ratio(c1, n1)
                if n2 not in gr2:
                    gr2[n2] = gamma_ratio(c2, n2)
                part += gr1[n1] * gr2[n2] * prod
            total += inv * part
    return total


def build_minimal_chamber(params: ModelParams, markings: Iterable[Marking],
                          dmax: int | Mapping[int, int]) -> ChamberIndex:
    """The chamber index with all free directions set to zero.

    Cells are filled by increasing |J|.  In each constrained cell the values
    at p >= 1 are zero and the p = 0 value solves the amplitude equation.
    """
    dom = markings if isinstance(markings, ChamberDomain) else \
        ChamberDomain(params, markings, dmax)
    values: dict[BalancedKey, Fraction] = {}
    nu = ChamberIndex(dom, {})
    s, r = params.s, params.r
    for cell in dom.cells:
        J, d = cell
        keys = dom.balanced(cell)
        if not J:
            for k in keys:
                nu.values[k] = Fraction(-1)
        elif len(J) == 1 and d[0] == 0:
            for k in keys:
                nu.values[k] = Fraction(1)
        elif dom.is_constrained(cell):
            target = dom.target(cell)
            for k in keys:
                nu.values[k] = Fraction(0)
            nu._block_cache.pop(cell, None)
            rest = amplitude(nu, J, d)
            if not keys:
                if rest != target:
                    raise ChamberError(
                        f"cell J={list(J)}, d={list(d)} has no balanced graph "
                        f"but the finer partitions give {rest} != {target}")
                continue
            prof = dom.profile(cell)
            pivot = gamma_ratio(Fraction(1 + prof.sJ, s), prof.N)
            nu.values[keys[0]] = (target - rest) / pivot
        nu._block_cache.pop(cell, None)
    return nu


@dataclass
class AxiomReport:
    violations: list = field(default_factory=list)
    checked_cells: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {"ok": self.ok, "checked_cells": self.checked_cells,
                "violations": [dict(v) for v in self.violations]}


def check_axioms(nu: ChamberIndex) -> AxiomReport:
    """Re-verify the three chamber conditions on every cell of the domain."""
    dom = nu.domain
    rep = AxiomReport()
    for cell in dom.cells:
        J, d = cell
        rep.checked_cells += 1
        if not J or (len(J) == 1 and d[0] == 0):
            want = Fraction(-1) if not J else Fraction(1)
            for k in dom.balanced(cell):
                if nu.values[k] != want:
                    rep.violations.append({
                        "condition": 1, "J": list(J), "d": list(d), "p": k.p,
                        "expected": str(want), "found": str(nu.values[k])})
        if J and (len(J) == 1 or dom.is_constrained(cell)):
            want = dom.target(cell)
            got = amplitude(nu, J, d)
            if got != want:
                rep.violations.append({
                    "condition": 2 if len(J) == 1 else 3, "J": list(J),
                    "d": list(d), "expected": str(want), "found": str(got)})
    return rep


def twist_bijections(domain: ChamberDomain) -> list[dict[int, int]]:
    """All label permutations of I preserving twists."""
    fibers: dict = {}
    for mk in domain.markings:
        fibers.setdefault(mk.twist, []).append(mk.label)
    groups = list(fibers.values())
    out = []
    for perms in itertools.product(*(itertools.permutations(g) for g in groups)):
        sigma = {}
        for g, pg in zip(groups, perms):
            sigma.update(zip(g, pg))
        out.append(sigma)
    return out


def _permute_key(key: BalancedKey, sigma: Mapping[int, int]) -> BalancedKey:
    pairs = sorted((sigma[j], dj) for j, dj in zip(key.J, key.d))
    return BalancedKey(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs), key.p)


def symmetrize(nu: ChamberIndex) -> ChamberIndex:
    """Average nu over twist-preserving relabelings.

    The amplitudes are not linear in nu, so the average of a chamber index
    is only guaranteed to be one when nu is already symmetric.  Requires a uniform descendent bound on each twist class.
    """
    dom = nu.domain
    sigmas = twist_bijections(dom)
    for sigma in sigmas:
        if any(dom.dmax[a] != dom.dmax[b] for a, b in sigma.items()):
            raise ChamberError("descendent bounds are not constant on twist classes")
    out = {}
    for key in nu.values:
        acc = sum((nu.values[_permute_key(key, sg)] for sg in sigmas), Fraction(0))
        out[key] = acc / len(sigmas)
    return ChamberIndex(dom, out)


def is_symmetric(nu: ChamberIndex) -> bool:
    dom = nu.domain
    for sigma in twist_bijections(dom):
        if any(dom.dmax[a] != dom.dmax[b] for a, b in sigma.items()):
            return False
        for key, v in nu.values.items():
            if nu.values[_permute_key(key, sigma)] != v:
                return False
    return True
