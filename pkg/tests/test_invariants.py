import random
import threading
from fractions import Fraction

import pytest

from openfjrw.chamber import build_minimal_chamber
from openfjrw.combinatorics import (ClosedInsertion as CI, DoubleNegative, Marking,
                                    ModelParams)
from openfjrw.invariants import (DEFAULT_CONVENTION, InvariantCache,
                                 NoDistinguishedInsertion, SignConvention,
                                 calibrate_convention, closed_trr_instances,
                                 distinguished_values, ext_invariant,
                                 open_amplitude, random_group_element,
                                 verify_closed_trr, verify_mirror,
                                 verify_mirror_recursion, verify_open_trr)
from openfjrw.wallcross import act_on_chamber

P33 = ModelParams(3, 3)


def test_three_point_invariant():
    ins = [CI(-1, -1), CI(1, 1), CI(1, 1)]
    assert ext_invariant(P33, ins) == 1
    for conv in SignConvention:
        assert abs(ext_invariant(P33, ins, conv)) == 1


def test_forced_zeros():
    assert ext_invariant(P33, [CI(-1, -1, 1), CI(1, 1), CI(1, 1)]) == 0
    assert ext_invariant(P33, [CI(2, 0), CI(2, 0), CI(0, 1), CI(0, 0)]) == 0
    assert ext_invariant(P33, [CI(1, 1), CI(1, 1)]) == 0


def test_unsupported_inputs_raise():
    with pytest.raises(DoubleNegative):
        ext_invariant(P33, [CI(-1, 1), CI(-1, 1), CI(1, 1)])
    with pytest.raises(NoDistinguishedInsertion):
        ext_invariant(P33, [CI(-1, 0), CI(0, -1), CI(2, 2)])


def test_distinguished_choice_is_irrelevant():
    ins = [CI(1, 0), CI(1, 0), CI(1, 1), CI(1, 0)]
    vals = distinguished_values(P33, ins)
    assert len(vals) == 4 and len(set(vals)) == 1 and vals[0] != 0


@pytest.mark.parametrize("tw", [(1, 1), (2, 2), (1, 2), (0, 1)])
@pytest.mark.parametrize("d", [0, 1, 2])
def test_open_trr_single(tw, d):
    m = [Marking(1, *tw)]
    assert verify_open_trr(P33, m, {1: d}, 1) == 0
    assert open_amplitude(P33, [(*tw, d + 1)]) == -open_amplitude(P33, [(*tw, d)])


def test_open_trr_pairs():
    twists = [(1, 1), (2, 2), (1, 2)]
    for t1 in twists:
        for t2 in twists:
            m = [Marking(1, *t1), Marking(2, *t2)]
            for d1 in range(2):
                for d2 in range(2):
                    d = {1: d1, 2: d2}
                    assert verify_open_trr(P33, m, d, 1) == 0
                    assert verify_open_trr(P33, m, d, 1, 2) == 0
                    assert verify_mirror_recursion(P33, m, d, 1, 2) == 0


def test_closed_trr_calibration():
    inst = closed_trr_instances(P33)
    rep = calibrate_convention(P33, inst)
    assert rep[SignConvention.OPEN_MS]["ok"]
    assert not rep[SignConvention.MIRROR_A]["ok"]
    assert DEFAULT_CONVENTION is SignConvention.OPEN_MS
    bad = rep[SignConvention.MIRROR_A]["nonzero"][0][0]
    assert verify_closed_trr(P33, bad, SignConvention.MIRROR_A) != 0
    assert verify_closed_trr(P33, bad, SignConvention.OPEN_MS) == 0


def test_closed_trr_rejects_bad_first_insertion():
    with pytest.raises(ValueError):
        verify_closed_trr(P33, [CI(1, 1), CI(1, 1), CI(-1, -1)])


def test_verify_mirror_gauge_independent():
    marks = [Marking(1, 1, 1), Marking(2, 1, 1), Marking(3, 0, 1)]
    nu = build_minimal_chamber(P33, marks, 1)
    rep = verify_mirror(nu)
    assert rep["ok"]
    g = random_group_element(nu.domain, random.Random(3))
    assert verify_mirror(act_on_chamber(g, nu)) == rep


def test_cache_concurrent_reads():
    cache = InvariantCache()
    data = [(1, 1, 1), (1, 1, 0), (2, 2, 1)]
    want = open_amplitude(P33, data, InvariantCache())
    out = []

    def work():
        out.append(open_amplitude(P33, data, cache))

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert out == [want] * 8
