"""Acceptance suite: ten exact checks, each with its own time budget.

Every test prints one PASS/FAIL line (visible even under captured output)
before asserting.
"""

import itertools
import random
import time
from fractions import Fraction

import pytest

from openfjrw.algebra import URing, psi_I
from openfjrw.bmodel import (build_potential, build_potential_sym,
                             extract_amplitudes, flat_head, period_integrals)
from openfjrw.chamber import (amplitude, build_minimal_chamber, check_axioms,
                              is_symmetric)
from openfjrw.combinatorics import Marking, ModelParams
from openfjrw.invariants import (InvariantCache, SignConvention,
                                 calibrate_convention, closed_trr_instances,
                                 random_group_element, verify_mirror_recursion,
                                 verify_open_trr)
from openfjrw.wallcross import (GeneratorField, GroupElement, act_on_chamber,
                                connect, preservation_check)

P33 = ModelParams(3, 3)
RS = [(2, 3), (3, 3), (3, 4)]
ACC3 = [Marking(1, 1, 1), Marking(2, 1, 1), Marking(3, 2, 2)]
N_RANDOM = 20


def report(capsys, n, title, ok, elapsed, limit, detail=""):
    status = "PASS" if ok and elapsed < limit else "FAIL"
    line = f"[acceptance {n:2d}] {status}  {title}  ({elapsed:.2f}s / {limit}s)"
    if detail:
        line += f"  {detail}"
    with capsys.disabled():
        print("\n" + line)
    assert ok, detail
    assert elapsed < limit, f"took {elapsed:.2f}s, limit {limit}s"


def all_twists(params):
    return [(a, b) for a in range(params.r) for b in range(params.s)]


@pytest.fixture(scope="module")
def transports():
    nu = build_minimal_chamber(P33, ACC3, 1)
    rng = random.Random(2024)
    gs = [random_group_element(nu.domain, rng) for _ in range(N_RANDOM)]
    return nu, gs


def test_1_forced_simple_invariants(capsys):
    t0 = time.perf_counter()
    bad = []
    for rs in RS:
        params = ModelParams(*rs)
        for a, b in all_twists(params):
            nu = build_minimal_chamber(params, [Marking(1, a, b)], 0)
            empty = [nu.values[k] for k in nu.domain.balanced(((), ()))]
            single = [nu.values[k] for k in nu.domain.balanced(((1,), (0,)))]
            if empty != [-1, -1] or any(v != 1 for v in single) or not single:
                bad.append((rs, (a, b), empty, single))
    report(capsys, 1, "forced simple invariants", not bad, time.perf_counter() - t0, 1,
           f"failures={bad[:3]}" if bad else "")


def test_2_singleton_amplitudes(capsys):
    t0 = time.perf_counter()
    bad, n = [], 0
    for rs in RS:
        params = ModelParams(*rs)
        for a, b in all_twists(params):
            nu = build_minimal_chamber(params, [Marking(1, a, b)], 4)
            rng = random.Random(a * 10 + b)
            others = [nu, act_on_chamber(random_group_element(nu.domain, rng), nu)]
            for x in others:
                for d in range(5):
                    n += 1
                    if amplitude(x, (1,), (d,)) != (-1) ** d:
                        bad.append((rs, (a, b), d))
    report(capsys, 2, "singleton amplitudes (-1)^d", not bad, time.perf_counter() - t0, 5,
           f"checked={n}" + (f" failures={bad[:3]}" if bad else ""))


def test_3_period_integral_identity(capsys):
    t0 = time.perf_counter()
    nu = build_minimal_chamber(P33, ACC3, 1)
    W = build_potential(nu)
    formal = extract_amplitudes(nu, period_integrals(W, formal=True))
    genuine = extract_amplitudes(nu, period_integrals(W))
    bad = [c for c in nu.domain.cells if c[0] and formal.get(c) != amplitude(nu, *c)]
    bad += [c for c, v in genuine.items() if v != amplitude(nu, *c)]
    cells = sum(1 for c in nu.domain.cells if c[0])
    report(capsys, 3, "period-integral identity", not bad and len(formal) == cells,
           time.perf_counter() - t0, 60,
           f"cells={cells} genuine-cycle cells={len(genuine)}" +
           (f" mismatches={bad[:3]}" if bad else ""))


def test_4_chamber_independence(capsys, transports):
    nu, gs = transports
    t0 = time.perf_counter()
    amps = {c: amplitude(nu, *c) for c in nu.domain.cells if c[0]}
    bad = []
    for i, g in enumerate(gs):
        nu2 = act_on_chamber(g, nu)
        if any(amplitude(nu2, *c) != v for c, v in amps.items()):
            bad.append(i)
    report(capsys, 4, "chamber independence", not bad, time.perf_counter() - t0, 60,
           f"elements={len(gs)} factors={[len(g.factors) for g in gs]}" +
           (f" failed={bad}" if bad else ""))


def test_5_torsor_round_trip(capsys, transports):
    nu, gs = transports
    t0 = time.perf_counter()
    bad = []
    for i, g in enumerate(gs):
        assert g.factors
        nu2 = act_on_chamber(g, nu)
        if act_on_chamber(connect(nu, nu2), nu) != nu2:
            bad.append((i, "round trip"))
        if nu2 == nu:
            bad.append((i, "fixed point"))
    report(capsys, 5, "torsor round trip and faithfulness", not bad,
           time.perf_counter() - t0, 60, f"failures={bad}" if bad else "")


def test_6_automorphism_preservation(capsys, transports):
    nu, gs = transports
    t0 = time.perf_counter()
    ring = URing(ACC3)
    dom = nu.domain
    singles = [GroupElement((GeneratorField(k, 1),)) for c in dom.cells if c[0]
               for k in dom.critical(c)]
    bad = []
    for i, g in enumerate(singles + gs):
        rep = preservation_check(g, P33, ring)
        if not rep.ok:
            bad.append((i, rep.failures[:2]))
        for f in g.factors:
            prof = dom.profile(f.key.cell)
            if P33.s * f.key.k1 + P33.r * f.key.k2 - P33.r - P33.s != prof.m - 9:
                bad.append((i, "weight"))
    report(capsys, 6, "automorphism preservation", not bad, time.perf_counter() - t0, 10,
           f"generators={len(singles)} products={len(gs)}" + (f" failures={bad[:3]}" if bad else ""))


def test_7_open_trr(capsys):
    t0 = time.perf_counter()
    cache = InvariantCache()
    twists = [(1, 1), (2, 2), (1, 2)]
    bad, n1, n2 = [], 0, 0
    for size in (1, 2, 3):
        for tw in itertools.combinations_with_replacement(twists, size):
            marks = [Marking(i + 1, *t) for i, t in enumerate(tw)]
            labels = [m.label for m in marks]
            for ds in itertools.product(range(2), repeat=size):
                d = dict(zip(labels, ds))
                for j1 in labels:
                    n1 += 1
                    if verify_open_trr(P33, marks, d, j1, cache=cache):
                        bad.append(("first", tw, ds, j1))
                    for j2 in labels:
                        if j2 == j1:
                            continue
                        n2 += 2
                        if verify_open_trr(P33, marks, d, j1, j2, cache=cache):
                            bad.append(("second", tw, ds, j1, j2))
                        if verify_mirror_recursion(P33, marks, d, j1, j2, cache=cache):
                            bad.append(("solved", tw, ds, j1, j2))
    report(capsys, 7, "open topological recursion", not bad, time.perf_counter() - t0, 300,
           f"first-identity={n1} second-identity={n2}" + (f" failures={bad[:3]}" if bad else ""))


def test_8_closed_trr_calibration(capsys):
    t0 = time.perf_counter()
    inst = closed_trr_instances(P33, n_values=(3, 4), d1=1)
    rep = calibrate_convention(P33, inst, InvariantCache())
    passing = [c for c, v in rep.items() if v["ok"]]
    failing = [c for c, v in rep.items() if v["nonzero"] or v["inconsistent"]]
    ok = len(passing) == 1 and len(failing) == len(SignConvention) - 1
    summary = " ".join(f"{c.value}:checked={v['checked']},nonzero={len(v['nonzero'])},"
                       f"inconsistent={len(v['inconsistent'])}" for c, v in rep.items())
    report(capsys, 8, f"closed TRR calibration -> {passing[0].value if passing else 'none'}",
           ok, time.perf_counter() - t0, 300, summary)


def test_9_symmetric_compatibility(capsys):
    t0 = time.perf_counter()
    marks = [Marking(1, 1, 1), Marking(2, 1, 1), Marking(3, 0, 1)]
    base = build_minimal_chamber(P33, marks, 1)
    # generators whose label set is fixed by the swap 1 <-> 2 give a
    # symmetric, non-minimal chamber index
    dom = base.domain
    fixed = [k for c in dom.cells if c[0] in ((3,), (1, 2), (1, 2, 3))
             and (c[0] == (3,) or c[1][0] == c[1][1]) for k in dom.critical(c)]
    rng = random.Random(9)
    g = GroupElement(tuple(GeneratorField(rng.choice(fixed), Fraction(rng.choice([1, -2, 3]), 2))
                           for _ in range(4)))
    nu = act_on_chamber(g, base)
    valid = check_axioms(nu).ok and is_symmetric(nu) and nu != base
    Wsym = build_potential_sym(nu)
    W = build_potential(nu)
    same = valid and Wsym.map_coefficients(psi_I, W.ring) == W
    heads = [flat_head(H, cyc, P33) for cyc, H in period_integrals(Wsym).items()]
    ok = same and all(h["ok"] for h in heads)
    report(capsys, 9, "symmetric/non-symmetric compatibility", ok,
           time.perf_counter() - t0, 30,
           f"symmetric index valid: {valid}, psi(Wsym)==W: {same}, flat heads ok on {sum(h['ok'] for h in heads)}/{len(heads)} cycles")


def test_10_worked_values(capsys):
    t0 = time.perf_counter()
    pair = build_minimal_chamber(P33, [Marking(1, 1, 1), Marking(2, 1, 1)], 0)
    single = build_minimal_chamber(P33, [Marking(1, 1, 1)], 1)
    a = amplitude(pair, (1, 2), (0, 0))
    v = single.value((1,), (1,), 0)
    ok = a == 1 and v == Fraction(-3, 2)
    report(capsys, 10, "worked values", ok, time.perf_counter() - t0, 1,
           f"A({{1,2}},0)={a} nu={v}")
