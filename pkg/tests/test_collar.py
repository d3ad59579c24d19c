from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slitspace.collar import (
    DensityField,
    admissibility_min,
    buffer_bound,
    collar_box,
    curve_surgery,
    decompose,
    discretization_slack,
    divergence_report,
    label_grid,
    omitted_box,
    random_paths,
    residual_measure,
    residual_product,
    rho_eps,
    select_collars,
)
from slitspace.grid_complex import build_slit_complex
from slitspace.slit_config import BoxN, Slit, SlitSequence, dyadic_slits, validate_sequence


def carpet(k, n=2):
    seq = dyadic_slits([F(1, 2)] * (k + 1), n, k)
    return seq.with_sigma(validate_sequence(seq).sigma)


@given(st.integers(0, 2), st.sampled_from([F(1, 4), F(1, 8)]), st.sampled_from(["largest", "first-fit"]))
def test_partition_identity(k, eps, strategy):
    seq = carpet(k)
    dec = decompose(seq, select_collars(seq, eps, strategy), eps, F(1, 128))
    assert dec.H_R + dec.H_B + dec.H_O == seq.box.volume
    nR, nB, nO = dec.counts()
    assert (nR + nB + nO) * dec.cell_volume == 1


@given(st.integers(0, 2), st.sampled_from([F(1, 4), F(1, 8)]))
def test_buffer_identity(k, eps):
    seq = carpet(k)
    dec = decompose(seq, select_collars(seq, eps), eps, F(1, 128))
    bb = buffer_bound(dec)
    assert bb.identity_holds and bb.holds


def test_collar_geometry():
    s = Slit(0, F(1, 2), (F(1, 2),), F(1, 2))
    assert collar_box(s, F(1, 4)) == ((F(1, 2), F(5, 8)), (F(1, 4), F(3, 4)))
    assert omitted_box(s, F(1, 4)) == ((F(1, 2), F(5, 8)), (F(3, 8), F(5, 8)))


def test_eps_must_be_below_sigma():
    seq = carpet(1)
    with pytest.raises(ValueError, match="exit"):
        select_collars(seq, F(1, 2) + F(1, 4))


def test_misaligned_resolution():
    seq = carpet(1)
    with pytest.raises(ValueError, match="misaligned"):
        decompose(seq, select_collars(seq, F(1, 8)), F(1, 8), F(1, 16))


def test_overlapping_collars_rejected():
    box = BoxN.unit(2)
    seq = SlitSequence(box, (Slit(0, F(1, 4), (F(1, 2),), F(1, 2)), Slit(0, F(5, 16), (F(1, 2),), F(1, 2))), sigma=0.1)
    with pytest.raises(ValueError, match="overlap"):
        decompose(seq, [0, 1], F(1, 4), F(1, 64))


def test_strategies_skip_overlaps():
    box = BoxN.unit(2)
    seq = SlitSequence(box, (Slit(0, F(1, 4), (F(1, 2),), F(1, 2)), Slit(0, F(5, 16), (F(1, 2),), F(1, 2))), sigma=0.5)
    assert select_collars(seq, F(1, 4)) == [0]


@pytest.mark.parametrize("eps", [F(1, 4), F(1, 8)])
def test_rho_eps_admissible(eps):
    seq = carpet(1)
    h = F(1, 64)
    dec = decompose(seq, select_collars(seq, eps), eps, h)
    rho = rho_eps(dec)
    gc = build_slit_complex(seq, len(seq), h)
    rep = admissibility_min(gc, rho, dec)
    assert rep.min_length >= 1 - discretization_slack(h, 2)
    assert rep.buffer_ok
    assert rho.mass(2) == pytest.approx(float(dec.H_R + dec.H_B))


def test_density_field_validation():
    with pytest.raises(ValueError):
        DensityField(np.array([-1.0]), 1.0)
    f = DensityField(np.array([1.0, 2.0]), 0.5)
    assert f.mass(2) == pytest.approx(2.5)
    with pytest.raises(ValueError):
        f.values[0] = 3


@given(st.integers(0, 1000))
def test_surgery_on_random_paths(seed):
    seq = carpet(1)
    h = F(1, 32)
    gc = build_slit_complex(seq, len(seq), h)
    dec = decompose(seq, select_collars(seq, F(1, 4)), F(1, 4), h)
    for cells in random_paths(gc, 3, seed):
        for i in range(len(dec.selected) + 1):
            res = curve_surgery(gc, cells, dec, i)
            assert res.length_ok and res.columns_covered


def test_surgery_rejects_slit_crossing():
    seq = carpet(0)
    h = F(1, 16)
    gc = build_slit_complex(seq, 1, h)
    dec = decompose(seq, select_collars(seq, F(1, 4)), F(1, 4), h)
    row = np.arange(16) * 16 + 8  # straight through the slit at y = 1/2
    with pytest.raises(ValueError, match="slit"):
        curve_surgery(gc, row, dec, 1)


def test_residual_product_exact():
    assert residual_product([F(1, 2)] * 3, F(1, 4), 2, 2) == F(15, 16) ** 3
    with pytest.raises(ValueError):
        residual_product([F(1, 2)], F(3, 8), 2, 0)


@pytest.mark.parametrize("k", range(4))
def test_residual_measure_bounded_by_product(k):
    seq = carpet(k)
    H, dec = residual_measure(seq, F(1, 4), F(1, 256), k)
    assert H <= residual_product([F(1, 2)] * (k + 1), F(1, 4), 2, k)
    # selected collars are disjoint: each removes eps * l^2
    removed = sum(F(1, 4) * seq.slits[i].sidelength ** 2 for i in dec.selected)
    assert H == 1 - removed


def test_divergence_report_trends():
    rows = divergence_report([F(1, 2)] * 10, 2, 9)
    assert rows[-1][1] == pytest.approx(2.5) and rows[-1][2] < rows[0][2]
    geo = divergence_report([F(1, 2 ** (i + 1)) for i in range(10)], 2, 9)
    assert geo[-1][1] < 1 / 3 and geo[-1][2] > 0.9


def test_label_grid_letters():
    seq = carpet(0)
    dec = decompose(seq, [0], F(1, 4), F(1, 16))
    text = label_grid(dec)
    assert set(text.replace("\n", "")) == {"R", "B", "O"}
    assert len(text.splitlines()) == 16
