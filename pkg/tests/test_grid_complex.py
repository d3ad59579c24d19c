import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slitspace.grid_complex import (
    KAPPA,
    PointRef,
    ahlfors_scan,
    build_complex,
    build_slit_complex,
    double,
    geodesic_distance,
    geodesic_path,
    project,
)
from slitspace.slit_config import BoxN, Slit, SlitSequence, dyadic_slits

H8 = F(1, 8)


def big_slit():
    return SlitSequence(BoxN.unit(2), (Slit(0, F(1, 2), (F(1, 2),), F(1, 2)),))


def test_unslit_counts():
    gc = build_complex(BoxN.unit(2), H8, [])
    assert gc.ncells == 64 and gc.nnodes == 81


def test_slit_duplicates_interior_vertices_only():
    gc = build_slit_complex(big_slit(), 1, H8)
    # y in (1/4, 3/4) at x = 1/2: three interior grid vertices, each doubled
    assert gc.nnodes == 81 + 3
    assert len(gc.nodes_at(gc.grid_index((F(1, 2), F(1, 4))))) == 1


def test_side_tags_required_on_slit():
    gc = build_slit_complex(big_slit(), 1, H8)
    with pytest.raises(ValueError, match="ambiguous"):
        gc.resolve(PointRef((F(1, 2), F(1, 2))))
    assert gc.resolve(PointRef((F(1, 2), F(1, 2)), {0: 1})) != gc.resolve(PointRef((F(1, 2), F(1, 2)), {0: -1}))


def test_misaligned_resolution():
    with pytest.raises(ValueError, match="misaligned"):
        build_slit_complex(dyadic_slits([F(1, 2)] * 3, 2, 2), 21, H8)


@given(st.integers(0, 8), st.integers(0, 8), st.integers(0, 8), st.integers(0, 8))
def test_unslit_distance_bounds(a, b, c, d):
    gc = build_complex(BoxN.unit(2), H8, [])
    p, q = (F(a, 8), F(b, 8)), (F(c, 8), F(d, 8))
    dist = geodesic_distance(gc, PointRef(p), PointRef(q))
    euclid = math.dist([float(x) for x in p], [float(x) for x in q])
    # the 8-neighbour metric sits between Euclidean and KAPPA-inflated Euclidean
    assert euclid - 1e-12 <= dist <= KAPPA[2] * euclid + 1e-12


def test_detour_around_slit():
    gc = build_slit_complex(big_slit(), 1, F(1, 16))
    c = (F(1, 2), F(1, 2))
    assert geodesic_distance(gc, PointRef(c, {0: -1}), PointRef(c, {0: 1})) == pytest.approx(0.5, abs=1e-12)


def test_distances_scale_with_box():
    seq = big_slit()
    a = build_slit_complex(seq, 1, F(1, 16))
    b = build_slit_complex(seq.scaled(2), 1, F(1, 8))
    p, q = PointRef((F(1, 2), F(1, 2)), {0: -1}), PointRef((F(1, 2), F(1, 2)), {0: 1})
    p2, q2 = PointRef((F(1), F(1)), {0: -1}), PointRef((F(1), F(1)), {0: 1})
    assert geodesic_distance(b, p2, q2) == pytest.approx(2 * geodesic_distance(a, p, q))


def test_path_is_connected_walk():
    gc = build_slit_complex(big_slit(), 1, H8)
    path = geodesic_path(gc, PointRef((F(3, 8), F(1, 2))), PointRef((F(5, 8), F(1, 2))))
    u, v, _ = gc.edges
    edges = set(zip(u.tolist(), v.tolist()))
    for a, b in zip(path.nodes, path.nodes[1:]):
        assert (min(a, b), max(a, b)) in edges


def test_projection_merges_sheets():
    seq = dyadic_slits([F(1, 2)] * 2, 2, 1)
    fine = build_slit_complex(seq, len(seq), F(1, 16))
    p = PointRef((F(1, 4), F(1, 4)), {1: 1})
    q = project(fine, p, 1)
    assert q.tag(1) is None and q.tag(0) is None
    assert p.coords == q.coords


def test_double_boundary_glue():
    gc = build_complex(BoxN.unit(2), H8, [])
    dd = double(gc)
    boundary = 4 * 8
    assert dd.nnodes == 2 * gc.nnodes - boundary
    assert dd.ncells == 2 * gc.ncells
    with pytest.raises(ValueError):
        double(dd)


def test_ahlfors_flat_square():
    gc = build_complex(BoxN.unit(2), F(1, 32), [])
    rep = ahlfors_scan(gc, 50, [1 / 8, 1 / 4], seed=3)
    assert rep.spread <= 4.5
    with pytest.raises(ValueError):
        ahlfors_scan(gc, 5, [1 / 32], seed=0)


def test_ahlfors_deterministic():
    gc = build_complex(BoxN.unit(2), F(1, 16), [])
    assert ahlfors_scan(gc, 20, [1 / 4], seed=5) == ahlfors_scan(gc, 20, [1 / 4], seed=5)
