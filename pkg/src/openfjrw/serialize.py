"""Canonical JSON forms of the exchanged objects.

Rationals are strings "p/q" (or "p"), monomials are sorted factor lists and
documents are dumped with sorted keys, so equal inputs give equal bytes.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .algebra import HbarSeries, PotentialSeries, SymRing, URing
from .chamber import ChamberDomain, ChamberIndex
from .combinatorics import BalancedKey, Marking, ModelParams
from .wallcross import GeneratorField, GroupElement, make_generator


def qstr(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def parse_q(text) -> Fraction:
    if isinstance(text, bool) or isinstance(text, float):
        raise ValueError(f"rational must be a string or integer, got {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise ValueError(f"rational must be a string, got {text!r}")
    return Fraction(text.strip())


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def markings_to_json(markings) -> list:
    return [{"label": m.label, "a": m.a, "b": m.b} for m in sorted(markings)]


def markings_from_json(objs) -> list[Marking]:
    return [Marking(int(o["label"]), int(o["a"]), int(o["b"])) for o in objs]


def _dvec_json(J, d) -> dict:
    return {str(j): dj for j, dj in zip(J, d)}


def chamber_to_json(nu: ChamberIndex) -> dict:
    dom = nu.domain
    values = []
    for cell in dom.cells:
        for k in dom.balanced(cell):
            values.append({"J": list(k.J), "d": _dvec_json(k.J, k.d), "p": k.p,
                           "k1": k.k1, "k2": k.k2, "value": qstr(nu.values[k])})
    dm = set(dom.dmax.values())
    dmax = dm.pop() if len(dm) == 1 else {str(k): v for k, v in sorted(dom.dmax.items())}
    if not dom.dmax:
        dmax = 0
    return {"r": dom.params.r, "s": dom.params.s,
            "markings": markings_to_json(dom.markings), "dmax": dmax,
            "values": values}


def chamber_from_json(obj: dict) -> ChamberIndex:
    params = ModelParams(int(obj["r"]), int(obj["s"]))
    markings = markings_from_json(obj["markings"])
    dmax = obj.get("dmax", 0)
    if isinstance(dmax, dict):
        dmax = {int(k): int(v) for k, v in dmax.items()}
    dom = ChamberDomain(params, markings, dmax)
    values = {}
    for rec in obj["values"]:
        J = tuple(sorted(int(j) for j in rec["J"]))
        dd = rec.get("d", {})
        d = tuple(int(dd[str(j)]) for j in J)
        key = BalancedKey(J, d, int(rec["p"]))
        if key in values:
            raise ValueError(f"duplicate chamber value for {key}")
        values[key] = parse_q(rec["value"])
    return ChamberIndex(dom, values)


def group_to_json(g: GroupElement) -> list:
    out = []
    for f in g.factors:
        if not isinstance(f, GeneratorField):
            raise TypeError("only generator factors are serializable")
        out.append(f.as_dict())
    return out


def group_from_json(objs, params: ModelParams, markings) -> GroupElement:
    factors = []
    for rec in objs:
        J = tuple(sorted(int(j) for j in rec["J"]))
        dd = rec.get("d", {})
        d = tuple(int(dd.get(str(j), 0)) for j in J)
        factors.append(make_generator(params, markings, J, d, int(rec["p"]),
                                      parse_q(rec["c"])))
    return GroupElement(tuple(factors))


def _coeffs_json(ring, coeffs: dict) -> list:
    return [{"mono": ring.mono_to_json(m), "c": qstr(c)}
            for m, c in sorted(coeffs.items())]


def _coeffs_from(ring, recs) -> dict:
    out = {}
    for rec in recs:
        m = ring.mono_from_json(rec["mono"])
        if m is not None:
            out[m] = out.get(m, 0) + parse_q(rec["c"])
    return out


def _ring_json(ring) -> dict:
    return {"kind": ring.kind, "markings": markings_to_json(ring.markings)}


def _ring_from(obj, params):
    markings = markings_from_json(obj["markings"])
    return URing(markings) if obj["kind"] == "u" else SymRing(params, markings)


def series_to_json(W: PotentialSeries) -> dict:
    return {"r": W.params.r, "s": W.params.s, "ring": _ring_json(W.ring),
            "wmax": W.wmax,
            "terms": [{"k1": k1, "k2": k2, "coeff": _coeffs_json(W.ring, W.terms[(k1, k2)])}
                      for (k1, k2) in sorted(W.terms)]}


def series_from_json(obj) -> PotentialSeries:
    params = ModelParams(int(obj["r"]), int(obj["s"]))
    ring = _ring_from(obj["ring"], params)
    terms = {(int(t["k1"]), int(t["k2"])): _coeffs_from(ring, t["coeff"])
             for t in obj["terms"]}
    return PotentialSeries(params, ring, terms, obj.get("wmax"))


def hbar_to_json(H: HbarSeries) -> dict:
    return {"ring": _ring_json(H.ring),
            "terms": {str(n): _coeffs_json(H.ring, H.terms[n]) for n in sorted(H.terms)}}


def hbar_from_json(obj, params: ModelParams) -> HbarSeries:
    ring = _ring_from(obj["ring"], params)
    return HbarSeries(ring, {int(n): _coeffs_from(ring, recs)
                             for n, recs in obj["terms"].items()})
