import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from openfjrw.algebra import HbarSeries, PotentialSeries, URing, psi_I
from openfjrw.bmodel import (ShapeError, build_potential, build_potential_sym,
                             cycle_labels, extract_amplitudes, flat_head,
                             period_integral, period_integrals, reduce_monomial)
from openfjrw.chamber import amplitude, build_minimal_chamber, symmetrize
from openfjrw.combinatorics import Marking, ModelParams, gamma_ratio, ordered_partitions

import oracles

P33 = ModelParams(3, 3)
ACC3 = [Marking(1, 1, 1), Marking(2, 1, 1), Marking(3, 2, 2)]


def test_reduce_examples():
    assert reduce_monomial(P33, 2, 2, (2, 2), formal=True) == (0, 1)
    assert reduce_monomial(P33, 3, 0, (0, 0)) == oracles.REDUCE_30_00
    assert reduce_monomial(P33, 1, 0, (0, 0)) is None
    with pytest.raises(ValueError):
        reduce_monomial(P33, 2, 2, (2, 2))


@given(st.sampled_from([(2, 3), (3, 3), (3, 4), (4, 5)]), st.integers(0, 12),
       st.integers(0, 12), st.data())
def test_integration_by_parts(rs, m1, m2, data):
    params = ModelParams(*rs)
    cyc = data.draw(st.sampled_from(cycle_labels(params, formal=True)))
    base = reduce_monomial(params, m1, m2, cyc, formal=True)
    up = reduce_monomial(params, m1 + params.r, m2, cyc, formal=True)
    if base is None:
        assert up is None
        return
    n, f = base
    assert up == (n + 1, -Fraction(m1 + 1, params.r) * f)


def test_potential_singleton():
    nu = build_minimal_chamber(P33, [Marking(1, 1, 1)], 1)
    assert build_potential(nu).terms == oracles.POTENTIAL_SINGLE


def test_potential_homogeneous():
    W = build_potential(build_minimal_chamber(P33, ACC3, 1))
    for k1, k2, mono, c in W.items():
        assert P33.weight(k1, k2) == 9 + W.ring.mono_weight(P33, mono)


def test_empty_potential():
    for rs in [(2, 3), (3, 4)]:
        params = ModelParams(*rs)
        W = build_potential(build_minimal_chamber(params, [], 0))
        assert W.terms == {(params.r, 0): {(): 1}, (0, params.s): {(): 1}}
        table = period_integrals(W, formal=True)
        for cyc, H in table.items():
            assert H.terms == ({0: {(): 1}} if cyc == (0, 0) else {})


def test_pair_period():
    R = URing([Marking(1, 1, 1), Marking(2, 1, 1)])
    W = PotentialSeries(P33, R, {(3, 0): {(): 1}, (0, 3): {(): 1},
                                  (1, 1): {((1, 0),): 1, ((2, 0),): 1}})
    H = period_integral(W, (2, 2), formal=True)
    assert H.mono_coefficients(((1, 0), (2, 0))) == oracles.PAIR_PERIOD
    nu = build_minimal_chamber(P33, R.markings, 0)
    assert build_potential(nu).terms == W.terms
    amps = extract_amplitudes(nu, {(2, 2): H})
    assert amps[((1, 2), (0, 0))] == oracles.AMP_PAIR_11


def test_period_identity_full_domain():
    nu = build_minimal_chamber(P33, ACC3, 1)
    table = period_integrals(build_potential(nu), formal=True)
    ext = extract_amplitudes(nu, table)
    assert len(ext) == len(nu.domain.cells) - 1
    for cell, v in ext.items():
        assert v == amplitude(nu, *cell)


def test_shape_error_on_wrong_cycle():
    nu = build_minimal_chamber(P33, [Marking(1, 1, 1)], 0)
    ring = URing(nu.markings)
    fake = HbarSeries(ring, {-1: {((1, 0),): Fraction(1)}})
    with pytest.raises(ShapeError):
        extract_amplitudes(nu, {(0, 0): fake})
    fake = HbarSeries(ring, {-3: {((1, 0),): Fraction(1)}})
    with pytest.raises(ShapeError):
        extract_amplitudes(nu, {(1, 1): fake})


def _amplitude_ordered_no_factorial(nu, J, d):
    dom = nu.domain
    prof = dom.profile((J, d))
    dmap = dict(zip(J, d))
    total = Fraction(0)
    for h in range(1, len(J) + 1):
        for blocks in ordered_partitions(J, h):
            lists = [nu.cell_terms((B, tuple(dmap[j] for j in B))) for B in blocks]
            for combo in itertools.product(*lists):
                K1 = sum(c[0] for c in combo)
                K2 = sum(c[1] for c in combo)
                prod = math.prod((c[2] for c in combo), start=Fraction(1))
                total += gamma_ratio(Fraction(1 + prof.rJ, 3), (K1 - prof.rJ) // 3) * \
                    gamma_ratio(Fraction(1 + prof.sJ, 3), (K2 - prof.sJ) // 3) * prod
    return total


def test_partition_weighting_is_pinned_by_periods():
    # the ordered sum without 1/h! disagrees with the period integrals
    nu = build_minimal_chamber(P33, ACC3, 1)
    ext = extract_amplitudes(nu, period_integrals(build_potential(nu), formal=True))
    wrong = [c for c in ext if _amplitude_ordered_no_factorial(nu, *c) != ext[c]]
    assert ((1, 2), (0, 0)) in wrong


def test_symmetric_potential_maps_to_potential():
    marks = [Marking(1, 1, 1), Marking(2, 1, 1), Marking(3, 0, 1)]
    nu = symmetrize(build_minimal_chamber(P33, marks, 1))
    Wsym = build_potential_sym(nu)
    W = build_potential(nu)
    assert Wsym.map_coefficients(psi_I, W.ring) == W
    for cyc, H in period_integrals(Wsym).items():
        assert flat_head(H, cyc, P33)["ok"]
    Hs = period_integrals(Wsym)
    Hu = period_integrals(W)
    for cyc in Hs:
        assert Hs[cyc].map_coefficients(psi_I, W.ring) == Hu[cyc]


def test_symmetric_needs_narrow_twists():
    nu = build_minimal_chamber(P33, [Marking(1, 2, 2)], 0)
    with pytest.raises(Exception):
        build_potential_sym(nu)
