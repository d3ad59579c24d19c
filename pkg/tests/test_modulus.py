from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slitspace.collar import DensityField
from slitspace.grid_complex import build_complex, build_slit_complex, double
from slitspace.modulus import (
    ConnectOppositeFaces,
    FiberLoops,
    InadmissibleDensityError,
    NonVerticalBand,
    VerticalLines,
    brute_force_modulus,
    coordinate_projection_map,
    discrete_modulus,
    length_floor_bound,
    projection_inequality_check,
    upper_via_density,
    vertical_product_modulus,
)
from slitspace.slit_config import BoxN, Slit, SlitSequence, dyadic_slits

LR = ConnectOppositeFaces()


def test_bounds_bracket_and_tolerance():
    gc = build_slit_complex(dyadic_slits([F(1, 2)] * 2, 2, 1), 5, F(1, 32))
    m = discrete_modulus(gc, LR, tol=0.01)
    assert m.lower <= m.upper <= m.lower / 0.99**2 * (1 + 1e-9)


@pytest.mark.parametrize("method", ["cutting-plane", "flow"])
def test_methods_agree(method):
    gc = build_slit_complex(dyadic_slits([F(1, 2)], 2, 0), 1, F(1, 16))
    ref = discrete_modulus(gc, LR, tol=0.01, method="cutting-plane")
    m = discrete_modulus(gc, LR, tol=0.01, method=method)
    assert m.lower <= ref.upper * (1 + 1e-9) and ref.lower <= m.upper * (1 + 1e-9)


def test_rectangle_modulus():
    # a 2 x 1 rectangle crossed the long way: mod_2 = 1/2 (cell-exact for straight rows)
    gc = build_complex(BoxN(((0, 2), (0, 1))), F(1, 16), [])
    m = discrete_modulus(gc, LR, tol=0.005)
    assert m.lower <= 0.5 <= m.upper * (1 + 1e-9)


def test_conformal_invariance_under_scaling_p2():
    seq = SlitSequence(BoxN.unit(2), (Slit(0, F(1, 2), (F(1, 2),), F(1, 2)),))
    a = discrete_modulus(build_slit_complex(seq, 1, F(1, 16)), LR, tol=0.002)
    b = discrete_modulus(build_slit_complex(seq.scaled(2), 1, F(1, 8)), LR, tol=0.002)
    assert a.lower <= b.upper * (1 + 1e-9) and b.lower <= a.upper * (1 + 1e-9)


def test_monotone_in_slits():
    seq = dyadic_slits([F(1, 2)] * 3, 2, 2)
    prev = np.inf
    for k in range(3):
        m = discrete_modulus(build_slit_complex(seq, seq.level_of_generation(k), F(1, 32)), LR, tol=0.01)
        assert m.lower <= prev
        prev = m.upper


@given(st.sampled_from([F(1, 4), F(1, 2), F(3, 4)]), st.sampled_from([F(1, 4), F(1, 2), F(3, 4)]), st.sampled_from([0, 1]))
def test_brute_force_oracle_matches(off, c, axis):
    seq = SlitSequence(BoxN.unit(2), (Slit(axis, off, (c,), F(1, 2)),))
    brute, _ = brute_force_modulus(seq, 1, F(1, 4))
    m = discrete_modulus(build_slit_complex(seq, 1, F(1, 4)), LR, tol=1e-10, method="cutting-plane")
    assert abs(m.value - brute) <= 1e-6


def test_vertical_lines_product_formula():
    seq = dyadic_slits([F(1, 2)] * 2, 2, 1)
    gc = build_slit_complex(seq, 5, F(1, 16))
    m = discrete_modulus(gc, VerticalLines(0), p=2, tol=1e-6)
    assert m.value == pytest.approx(vertical_product_modulus(gc, 0, 2), rel=1e-5)


def test_vertical_lines_are_a_subfamily():
    gc = build_slit_complex(dyadic_slits([F(1, 2)], 2, 0), 1, F(1, 16))
    assert vertical_product_modulus(gc, 0, 2) <= discrete_modulus(gc, LR, tol=0.01).upper


def test_band_family_needs_divisible_grid():
    gc = build_complex(BoxN.unit(2), F(1, 4), [])
    with pytest.raises(ValueError):
        discrete_modulus(gc, NonVerticalBand(2, 0))


def test_band_modulus_unslit():
    gc = build_complex(BoxN.unit(2), F(1, 16), [])
    # band of width 1/4: mod_2 = 1 / (1/4) = 4
    m = discrete_modulus(gc, NonVerticalBand(1, 1), tol=0.01)
    assert m.lower <= 4 * (1 + 1e-9) and m.upper >= 4 * (1 - 0.03)


def test_fiber_loops_double():
    gc = double(build_complex(BoxN.unit(2), F(1, 8), []), "top_bottom")
    m = discrete_modulus(gc, FiberLoops(), p=2, tol=1e-6)
    # 8 loops of length 2 over disjoint cells: 8 * (1/8) / 2
    assert m.value == pytest.approx(0.5, rel=1e-5)


def test_empty_family():
    seq = SlitSequence(BoxN.unit(2), (Slit(0, F(1, 2), (F(1, 2),), F(1)),))
    m = discrete_modulus(build_slit_complex(seq, 1, F(1, 8)), LR)
    assert m.empty and m.value == 0


def test_invalid_parameters():
    gc = build_complex(BoxN.unit(2), F(1, 8), [])
    for kw in ({"p": 0.5}, {"tol": 0.0}, {"tol": 0.5}, {"method": "magic"}):
        with pytest.raises(ValueError):
            discrete_modulus(gc, LR, **kw)


def test_inadmissible_density_reported():
    gc = build_complex(BoxN.unit(2), F(1, 8), [])
    rho = DensityField(np.full(gc.ncells, 0.5), gc.cell_volume)
    with pytest.raises(InadmissibleDensityError) as e:
        upper_via_density(gc, rho, LR, 2)
    assert e.value.length == pytest.approx(0.5)
    ok = DensityField(np.ones(gc.ncells), gc.cell_volume)
    assert upper_via_density(gc, ok, LR, 2) == pytest.approx(1.0)
    assert length_floor_bound(1.0, 1.0, 2) == 1.0


def test_p1_is_lp():
    gc = build_complex(BoxN.unit(2), F(1, 8), [])
    m = discrete_modulus(gc, LR, p=1, tol=0.01)
    assert m.lower <= 1 + 1e-9 and m.upper >= 0.99


def test_identity_projection_inequality():
    seq = dyadic_slits([F(1, 2)] * 2, 2, 1)
    fine = build_slit_complex(seq, 5, F(1, 16))
    coarse = build_slit_complex(seq, 1, F(1, 16))
    chk = projection_inequality_check(fine, LR, coarse, LR, coordinate_projection_map(fine, coarse), tol=0.01)
    assert chk.holds
