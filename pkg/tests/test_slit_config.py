from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from slitspace.slit_config import (
    BoxN,
    DyadicCube,
    Slit,
    SlitSequence,
    all_scales_check,
    as_fraction,
    dumps_sequence,
    dyadic_slits,
    format_rational,
    loads_sequence,
    menger_slit_faces,
    parse_rational,
    relative_distance,
    validate_sequence,
)

dyadic = st.builds(lambda p, q: F(p, 2**q), st.integers(-2**20, 2**20), st.integers(0, 30))


@given(dyadic)
def test_rational_round_trip(x):
    assert parse_rational(format_rational(x)) == x
    assert "/2^" in format_rational(x)


def test_parse_forms():
    assert parse_rational("3/2^4") == F(3, 16)
    assert parse_rational("1/3") == F(1, 3)
    assert parse_rational("-5") == -5
    assert as_fraction(0.375) == F(3, 8)
    with pytest.raises(ValueError):
        parse_rational("0.5x")


@pytest.mark.parametrize("n,k", [(2, 0), (2, 3), (3, 2)])
def test_dyadic_counts_and_order(n, k):
    seq = dyadic_slits([F(1, 2)] * (k + 1), n, k)
    assert len(seq) == sum(2 ** (n * g) for g in range(k + 1))
    sides = [s.sidelength for s in seq.slits]
    assert sides == sorted(sides, reverse=True)
    assert seq.level_of_generation(k - 1 if k else 0) == (sum(2 ** (n * g) for g in range(k)) if k else 1)


def test_dyadic_rejects_full_width():
    with pytest.raises(ValueError):
        dyadic_slits([F(1)], 2, 0)


@given(st.integers(0, 3), st.sampled_from([F(1, 2), F(1, 4), F(3, 4)]))
def test_dyadic_separation_is_scale_free(k, r):
    rep = validate_sequence(dyadic_slits([r] * (k + 1), 2, k))
    assert rep.disjoint_ok and rep.sorted_ok
    # relative separation does not degrade with depth for constant r
    base = validate_sequence(dyadic_slits([r], 2, 0)).sigma
    assert rep.sigma > 0
    assert rep.sigma <= base + 1e-12


def test_relative_distance_of_adjacent_slits():
    a = Slit(0, F(1, 4), (F(1, 2),), F(1, 2))
    b = Slit(0, F(3, 4), (F(1, 2),), F(1, 4))
    assert relative_distance(a, b) == pytest.approx(0.5 / 0.25)


def test_overlap_detected():
    box = BoxN.unit(2)
    seq = SlitSequence(box, (Slit(0, F(1, 2), (F(1, 2),), F(1, 2)), Slit(0, F(1, 2), (F(5, 8),), F(1, 4))))
    assert not validate_sequence(seq).disjoint_ok


def test_unsorted_rejected():
    box = BoxN.unit(2)
    with pytest.raises(ValueError):
        SlitSequence(box, (Slit(0, F(1, 4), (F(1, 2),), F(1, 4)), Slit(0, F(3, 4), (F(1, 2),), F(1, 2))))


@given(st.integers(0, 2), st.sampled_from([2, 4]))
def test_scaling_preserves_relative_separation(k, lam):
    seq = dyadic_slits([F(1, 2)] * (k + 1), 2, k)
    assert validate_sequence(seq.scaled(lam)).sigma == pytest.approx(validate_sequence(seq).sigma)


def test_json_round_trip():
    seq = dyadic_slits([F(1, 2), F(1, 4)], 3, 1)
    back = loads_sequence(dumps_sequence(seq))
    assert back.slits == seq.slits and back.box == seq.box


def test_similarity_maps_unit_cube_onto_dyadic_cube():
    Q = DyadicCube(2, 2, (1, 3))
    assert Q.similarity((0, 0)) == (F(1, 4), F(3, 4))
    assert Q.similarity((1, 1)) == (F(1, 2), F(1))


def test_all_scales_for_constant_r():
    seq = dyadic_slits([F(1, 2)] * 4, 2, 3)
    assert all_scales_check(seq, C=8, samples=200).passed


def test_menger_faces_share_family():
    faces = menger_slit_faces([0, 1], 1)
    assert len({id(v) for v in faces.values()}) == 1
    seq = faces["z=0"]
    assert len(seq) == 1 + 16
    assert seq.slits[0].sidelength == F(1, 2)
    assert all(s.sidelength == F(1, 8) for s in seq.slits[1:])
