from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slitspace.menger import (
    base_isometry_check,
    base_point,
    build_menger,
    classify,
    covering_order,
    cube_dichotomy,
    face_square_slits,
    fiber,
    fiber_predicate,
    fiber_report_csv,
    fiber_spectrum,
    fiber_table,
    four_points_check,
    k5_witness,
    menger_sheets,
    spectra_distinguish,
)
from slitspace.slit_config import validate_sequence

H = F(1, 64)


@pytest.fixture(scope="module")
def single01():
    return build_menger([0, 1], 1, H)


@pytest.fixture(scope="module")
def double0():
    return build_menger([0], 0, F(1, 32), doubled=True)


def test_sheet_counts():
    sheets, reg = menger_sheets([0, 1], 1)
    assert len(sheets) == 2 * (1 + 64) and len(reg) == 65


def test_misaligned():
    with pytest.raises(ValueError, match="misaligned"):
        build_menger([0, 1], 1, F(1, 8))


@pytest.mark.parametrize(
    "b,e,label",
    [(0, 2, "Interval"), (1, 0, "Circle"), (1, 2, "L(1)"), (4, 2, "L(2)"), (3, 0, "Y(1)"), (9, 0, "Y(2)"), (2, 2, "Other")],
)
def test_classify(b, e, label):
    assert classify(b, e) == label


def slit_point_strategy():
    # points on generation-0 or generation-1 base slits, on the 1/64 grid
    gen0 = st.integers(16, 48).map(lambda i: (0, 0, 0, F(i, 64)))
    gen1 = st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 8)).map(
        lambda t: (1, t[0], t[1], F(t[1], 4) + F(1, 16) + F(t[2], 64))
    )
    return st.one_of(gen0, gen1)


@given(slit_point_strategy(), st.sampled_from([-1, 1]))
def test_predicate_matches_complex(single01, pt, side):
    j, a, _, y = pt
    s = F(1, 4**j)
    x = a * s + s / 2
    pred = fiber_predicate([0, 1], x, y, 1)
    endpoint = pred.reason == "endpoint"
    f = fiber(single01, base_point(single01, x, y, None if endpoint else side))
    assert f.betti == pred.cycles
    assert f.endpoints == 2


def test_double_betti_relation(single01):
    dd = single01.doubled_complex()
    for y, side in ((F(1, 4), None), (F(1, 2), 1), (F(3, 8), -1), (F(5, 16), 1)):
        single = fiber(single01, base_point(single01, F(1, 2), y, side)).betti
        assert fiber(dd, base_point(dd, F(1, 2), y, side)).betti == 2 * single + 1


def test_predicate_rejects_off_slit():
    with pytest.raises(ValueError):
        fiber_predicate([0], F(1, 4), F(1, 2))


def test_four_points_single_generation(double0):
    rep = four_points_check(double0, 0, 0, 0)
    assert rep.passed and rep.max_betti == 3 and rep.isomorphic


def test_four_points_with_finer_generation_is_not_maximal(single01):
    # generation-1 tubes cross the big slit's column with 4 cycles each
    rep = four_points_check(single01.doubled_complex(), 0, 0, 0)
    assert not rep.passed and rep.max_betti == 9 and rep.special_betti == (3, 3, 3, 3)


def test_four_points_finest_generation(single01):
    rep = four_points_check(single01.doubled_complex(), 1, 2, 1)
    assert rep.passed and rep.max_betti == 9


def test_base_isometry(single01):
    assert base_isometry_check(build_menger([0, 1], 1, F(1, 32)), samples=30).max_discrepancy == 0


def test_spectrum_values():
    spectrum = fiber_spectrum([0, 1], 1, H)
    assert spectrum.triples() == [(0, 3, 1), (1, 9, 16)]
    assert spectra_distinguish([0], [1], 1, F(1, 64))


def test_covering(single01):
    assert covering_order(single01, 1, F(1, 64)).max_order <= 2
    rows, ok = cube_dichotomy(single01, 1)
    assert ok
    with pytest.raises(ValueError):
        covering_order(single01, 1, F(1, 32))


def test_k5(single01):
    paths = k5_witness(build_menger([0, 1], 1, F(1, 16)))
    assert len(paths) == 10
    ends = {p.nodes[0] for p in paths.values()} | {p.nodes[-1] for p in paths.values()}
    assert len(ends) == 5


def test_fiber_table_cache_survives_doubling():
    mc = build_menger([0], 0, F(1, 16))
    t1 = fiber_table(mc.gc)
    dd = mc.doubled_complex()
    t2 = fiber_table(dd.gc)
    assert t2.comp.size == dd.gc.nnodes != t1.comp.size


def test_fiber_csv(double0):
    text = fiber_report_csv(double0, [(F(1, 2), F(1, 4), None), (F(1, 8), F(1, 8), None)])
    lines = text.splitlines()
    assert lines[1].endswith("3,0,Y(1)") and lines[2].endswith("1,0,Circle")


def test_face_square_slits_separated():
    seq = face_square_slits([0, 1], 1)
    assert len(seq) == 65
    rep = validate_sequence(seq)
    assert rep.disjoint_ok and rep.sigma > 0
