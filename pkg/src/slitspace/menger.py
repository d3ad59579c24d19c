"""Finite-level slit Menger complexes, their fibers, coverings and a K5 witness.

For a dyadic cube ``Q`` of side ``s = 4^-j`` with lower corner ``(a, b, c) s``
the generation-j sheets are

* tube: the plane ``y = (b + 1/2) s`` over ``x in [a s, (a+1) s]``,
  ``z in [(c + 1/4) s, (c + 3/4) s]``;
* cross: the plane ``x = (a + 1/2) s`` over the union of the band
  ``y in [(b + 1/4) s, (b + 3/4) s]`` (all z in Q) and the band
  ``z in [(c + 1/4) s, (c + 3/4) s]`` (all y in Q).

Fibers are the connected components of the vertical (last-axis) edges.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import networkx as nx
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra

from .grid_complex import (
    KAPPA,
    MAX_CELLS,
    GridComplex,
    PathInComplex,
    PointRef,
    Sheet,
    build_complex,
    build_slit_complex,
    double,
)
from .slit_config import BoxN, Slit, SlitSequence, as_fraction, menger_slit_faces

__all__ = [
    "MengerComplex",
    "FiberGraph",
    "FiberTable",
    "Prediction",
    "FiberSpectrum",
    "FourPointsReport",
    "IsometryReport",
    "CoveringReport",
    "build_menger",
    "menger_sheets",
    "base_carpet",
    "base_isometry_check",
    "base_point",
    "fiber_table",
    "fiber",
    "classify",
    "fiber_predicate",
    "four_points_check",
    "fiber_spectrum",
    "spectra_distinguish",
    "covering_order",
    "cube_dichotomy",
    "k5_witness",
    "face_square_slits",
    "fiber_report_csv",
]


def _gens(A: Iterable[int], k: int) -> tuple[int, ...]:
    gens = sorted({int(j) for j in A})
    if any(j < 0 for j in gens):
        raise ValueError("generations must be nonnegative")
    return tuple(j for j in gens if j <= k)


def menger_sheets(A: Iterable[int], k: int) -> tuple[list[Sheet], dict[tuple[int, tuple[int, int, int]], dict[str, int]]]:
    """Tube and cross sheets for every cube of generation 2j, j in A, j <= k."""
    sheets: list[Sheet] = []
    registry: dict[tuple[int, tuple[int, int, int]], dict[str, int]] = {}
    for j in _gens(A, k):
        s = Fraction(1, 4**j)
        q = s / 4
        for a, b, c in itertools.product(range(4**j), repeat=3):
            x0, y0, z0 = a * s, b * s, c * s
            tube = Sheet(1, y0 + s / 2, (((x0, x0 + s), (z0 + q, z0 + 3 * q)),), f"tube{j}:{a},{b},{c}")
            cross = Sheet(
                0,
                x0 + s / 2,
                (((y0 + q, y0 + 3 * q), (z0, z0 + s)), ((y0, y0 + s), (z0 + q, z0 + 3 * q))),
                f"cross{j}:{a},{b},{c}",
            )
            registry[(j, (a, b, c))] = {"tube": len(sheets), "cross": len(sheets) + 1}
            sheets.extend([tube, cross])
    return sheets, registry


@dataclass(frozen=True, eq=False)
class MengerComplex:
    A: tuple[int, ...]
    k: int
    gc: GridComplex
    registry: dict

    @property
    def doubled(self) -> bool:
        return self.gc.doubled

    @property
    def generations(self) -> tuple[int, ...]:
        return _gens(self.A, self.k)

    def doubled_complex(self) -> "MengerComplex":
        return MengerComplex(self.A, self.k, double(self.gc, "top_bottom"), self.registry)


def build_menger(A: Iterable[int], k: int, h, max_cells: int = MAX_CELLS, doubled: bool = False) -> MengerComplex:
    """Torn unit-cube complex with the sheets of generations j in A, j <= k."""
    h = as_fraction(h)
    A = tuple(sorted({int(j) for j in A}))
    gens = _gens(A, k)
    if gens and (Fraction(1, 4 ** (gens[-1] + 1)) / h).denominator != 1:
        raise ValueError(f"resolution misaligned: h = {h} must divide 4^-{gens[-1]}/4")
    sheets, registry = menger_sheets(A, k)
    gc = build_complex(BoxN.unit(3), h, sheets, level=len(sheets), max_cells=max_cells)
    gc.meta["menger"] = (A, k)
    mc = MengerComplex(A, k, gc, registry)
    return mc.doubled_complex() if doubled else mc


# ---- base carpet ---------------------------------------------------------------


def base_carpet(mc: MengerComplex) -> GridComplex:
    """The z = 0 face as a planar slit complex at the same resolution."""
    gens = mc.generations
    seq = menger_slit_faces(gens, max(gens))["z=0"] if gens else SlitSequence(BoxN.unit(2))
    return build_slit_complex(seq, len(seq.slits), mc.gc.h)


def _base_map(gc2: GridComplex, gc3: GridComplex) -> np.ndarray:
    """3D node over each planar node: the z = 0 copy with the same incident cells."""
    inc3 = gc3.node_cells
    ci3 = gc3.cell_index
    shape2 = gc2.shape
    base = np.nonzero((gc3.node_grid[:, 2] == 0) & (gc3.node_layer == 0) | (gc3.node_grid[:, 2] == 0) & gc3.node_glued)[0]
    key3 = {}
    for v in base:
        cells = inc3.indices[inc3.indptr[v]:inc3.indptr[v + 1]]
        cells = cells[cells < gc3.ncells_layer]
        flat = np.ravel_multi_index((ci3[cells, 0], ci3[cells, 1]), shape2)
        key3[(tuple(gc3.node_grid[v, :2]), tuple(sorted(flat.tolist())))] = int(v)
    inc2 = gc2.node_cells
    out = np.full(gc2.nnodes, -1, dtype=np.int64)
    for w in range(gc2.nnodes):
        cells = inc2.indices[inc2.indptr[w]:inc2.indptr[w + 1]]
        out[w] = key3.get((tuple(gc2.node_grid[w]), tuple(sorted(cells.tolist()))), -1)
    if np.any(out < 0):
        raise AssertionError("base face of the 3D complex does not match the planar carpet")
    return out


@dataclass(frozen=True)
class IsometryReport:
    pairs: int
    max_discrepancy: float
    slack: float

    @property
    def passed(self) -> bool:
        return self.max_discrepancy <= self.slack


def base_isometry_check(mc: MengerComplex, samples: int = 100, seed: int = 0, pairs: Sequence[tuple[int, int]] | None = None) -> IsometryReport:
    """Compare 3D torn distances between base vertices with planar carpet distances."""
    if mc.doubled:
        raise ValueError("use the single complex")
    gc2 = base_carpet(mc)
    m = _base_map(gc2, mc.gc)
    rng = np.random.default_rng(seed)
    if pairs is None:
        pairs = [tuple(int(x) for x in rng.integers(0, gc2.nnodes, 2)) for _ in range(samples)]
    worst = 0.0
    by_src: dict[int, list[int]] = {}
    for u, v in pairs:
        by_src.setdefault(u, []).append(v)
    for u, vs in by_src.items():
        d2 = gc2.distances(u)
        d3 = mc.gc.distances(int(m[u]))
        for v in vs:
            worst = max(worst, abs(float(d2[v]) - float(d3[m[v]])))
    return IsometryReport(len(pairs), worst, KAPPA[3] * mc.gc.hf)


def base_point(mc: MengerComplex, x, y, side: int | None = None, layer: int = 0) -> PointRef:
    """PointRef for the base vertex (x, y, 0); ``side`` picks the x-side of a cross sheet."""
    x, y = as_fraction(x), as_fraction(y)
    tags = {}
    if side is not None:
        sid = _base_cross(mc, x, y)
        if sid is None:
            raise ValueError(f"({x}, {y}) is not on a base slit")
        tags[sid] = side
    return PointRef((x, y, Fraction(0)), tags, layer)


def _base_cross(mc: MengerComplex, x: Fraction, y: Fraction) -> int | None:
    for j in mc.generations:
        s = Fraction(1, 4**j)
        a = (x - s / 2) / s
        if a.denominator != 1 or not 0 <= a < 4**j:
            continue
        b = math.floor(y / s)
        for bb in {min(b, 4**j - 1), b - 1}:
            if 0 <= bb < 4**j and bb * s + s / 4 <= y <= bb * s + 3 * s / 4:
                return mc.registry[(j, (int(a), bb, 0))]["cross"]
    return None


# ---- fibers ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FiberTable:
    """Component id of every node under vertical edges, with per-component invariants."""

    comp: np.ndarray
    vertices: np.ndarray
    edges: np.ndarray
    endpoints: np.ndarray
    eu: np.ndarray
    ev: np.ndarray

    def betti(self, node: int) -> int:
        c = self.comp[node]
        return int(self.edges[c] - self.vertices[c] + 1)

    def invariants(self, node: int) -> tuple[int, int]:
        return self.betti(node), int(self.endpoints[self.comp[node]])


def fiber_table(gc: GridComplex) -> FiberTable:
    cached = gc.meta.get("_fiber_table")
    if cached is not None and cached[0] == gc.nnodes:
        return cached[1]
    n = gc.dim
    top = 1 << (n - 1)  # corner bit of the last axis
    cc = gc.cell_corners
    us, vs = [], []
    for c in range(2**n):
        if c & top:
            continue
        us.append(cc[:, c])
        vs.append(cc[:, c | top])
    u = np.concatenate(us)
    v = np.concatenate(vs)
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    key = np.unique(lo * gc.nnodes + hi)
    eu, ev = key // gc.nnodes, key % gc.nnodes
    G = sp.csr_matrix((np.ones(eu.size), (eu, ev)), shape=(gc.nnodes, gc.nnodes))
    k, comp = connected_components(G, directed=False)
    V = np.bincount(comp, minlength=k)
    E = np.bincount(comp[eu], minlength=k)
    deg = np.bincount(eu, minlength=gc.nnodes) + np.bincount(ev, minlength=gc.nnodes)
    ends = np.bincount(comp, weights=(deg == 1), minlength=k).astype(np.int64)
    table = FiberTable(comp, V, E, ends, eu, ev)
    gc.meta["_fiber_table"] = (gc.nnodes, table)
    return table


def _check_corner_order(gc: GridComplex) -> None:
    # corner bit a is the offset along axis a
    g0 = gc.node_grid[gc.cell_corners[0, 0]]
    g1 = gc.node_grid[gc.cell_corners[0, 1 << (gc.dim - 1)]]
    if not (g1[-1] == g0[-1] + 1 and np.all(g1[:-1] == g0[:-1])):
        raise AssertionError("unexpected corner ordering")


@dataclass(frozen=True, eq=False)
class FiberGraph:
    nodes: tuple[int, ...]
    graph: nx.MultiGraph
    betti: int
    endpoints: int
    label: str


def classify(betti: int, endpoints: int) -> str:
    if betti == 0 and endpoints == 2:
        return "Interval"
    if betti == 1 and endpoints == 0:
        return "Circle"
    m = _log4(betti)
    if endpoints == 2 and m is not None:
        return f"L({m + 1})"
    if endpoints == 0 and (betti - 1) % 2 == 0:
        m = _log4((betti - 1) // 2)
        if m is not None:
            return f"Y({m + 1})"
    return "Other"


def _log4(x: int) -> int | None:
    if x <= 0:
        return None
    m = 0
    while x % 4 == 0:
        x //= 4
        m += 1
    return m if x == 1 else None


def _contract(G: nx.MultiGraph) -> nx.MultiGraph:
    G = nx.MultiGraph(G)
    for v in list(G.nodes):
        if G.degree(v) != 2 or G.number_of_edges(v, v):
            continue
        (_, a), (_, b) = list(G.edges(v))
        if a == v or b == v:
            continue
        G.remove_node(v)
        G.add_edge(a, b)
    return G


def fiber(mc: MengerComplex, p: PointRef) -> FiberGraph:
    """Contracted and classified fiber through the base vertex ``p``."""
    gc = mc.gc
    _check_corner_order(gc)
    if p.coords[2] != 0:
        raise ValueError("fibers are addressed by base points (z = 0)")
    node = gc.resolve(p)
    t = fiber_table(gc)
    members = np.nonzero(t.comp == t.comp[node])[0]
    mask = np.isin(t.eu, members)
    G = nx.MultiGraph()
    G.add_nodes_from(members.tolist())
    G.add_edges_from(zip(t.eu[mask].tolist(), t.ev[mask].tolist()))
    betti, ends = t.invariants(node)
    return FiberGraph(tuple(members.tolist()), _contract(G), betti, ends, classify(betti, ends))


@dataclass(frozen=True)
class Prediction:
    generation: int
    cyclic: bool
    cycles: int
    reason: str
    sheet_generation: int | None = None


def fiber_predicate(A: Iterable[int], x, y, k: int | None = None) -> Prediction:
    """Closed-form fiber type over the base point (x, y) of a slit of generation i in A.

    endpoint or midpoint of the slit: 4^i cycles; y = odd / (2 4^j) for some
    j > i in A: 4^j cycles (one tube crossing per cube of the column);
    otherwise an interval.
    """
    x, y = as_fraction(x), as_fraction(y)
    gens = _gens(A, k if k is not None else max(A, default=0))
    for i in gens:
        s = Fraction(1, 4**i)
        a = (x - s / 2) / s
        if a.denominator != 1 or not 0 <= a < 4**i:
            continue
        b = math.floor(y / s)
        for bb in (b, b - 1):
            if not 0 <= bb < 4**i:
                continue
            yc = bb * s + s / 2
            if abs(y - yc) > s / 4:
                continue
            if abs(y - yc) == s / 4:
                return Prediction(i, True, 4**i, "endpoint")
            if y == yc:
                return Prediction(i, True, 4**i, "midpoint")
            for j in gens:
                if j > i and (y * 2 * 4**j).denominator == 1 and (y * 2 * 4**j).numerator % 2 == 1:
                    return Prediction(i, True, 4**j, "tube", j)
            return Prediction(i, False, 0, "interval")
    raise ValueError(f"({x}, {y}) is not on a base slit")


def _slit_points(mc: MengerComplex, j: int, a: int, b: int):
    """Base PointRefs along the generation-j slit of square (a, b): endpoints once, interior on both sides."""
    s = Fraction(1, 4**j)
    h = mc.gc.h
    x = a * s + s / 2
    lo, hi = b * s + s / 4, b * s + 3 * s / 4
    out = []
    y = lo
    while y <= hi:
        for layer in range(mc.gc.layers):
            if y in (lo, hi):
                out.append(((x, y, None, layer), base_point(mc, x, y, None, layer)))
            else:
                for side in (-1, 1):
                    out.append(((x, y, side, layer), base_point(mc, x, y, side, layer)))
        y += h
    return out


@dataclass(frozen=True)
class FourPointsReport:
    passed: bool
    max_betti: int
    argmax: tuple
    special_betti: tuple[int, ...]
    isomorphic: bool
    scanned: int


def four_points_check(mc: MengerComplex, j: int, a: int, b: int) -> FourPointsReport:
    """Check that the four special base points of a slit are exactly the maximal-betti fibers."""
    if not mc.doubled:
        raise ValueError("the check runs on the double")
    if j not in mc.generations:
        raise ValueError(f"generation {j} not built")
    t = fiber_table(mc.gc)
    s = Fraction(1, 4**j)
    x = a * s + s / 2
    special = {(x, b * s + s / 4, None), (x, b * s + 3 * s / 4, None), (x, b * s + s / 2, -1), (x, b * s + s / 2, 1)}
    best = -1
    arg: set = set()
    pts = _slit_points(mc, j, a, b)
    seen_nodes = {}
    for key, p in pts:
        node = mc.gc.resolve(p)
        bt = t.betti(node)
        comp = int(t.comp[node])
        pk = key[:3]
        if comp in seen_nodes and seen_nodes[comp] != pk:
            pass
        seen_nodes.setdefault(comp, pk)
        if bt > best:
            best, arg = bt, {pk}
        elif bt == best:
            arg.add(pk)
    graphs = [fiber(mc, base_point(mc, *sp_)) for sp_ in sorted(special, key=str)]
    iso = all(nx.is_isomorphic(nx.Graph(graphs[0].graph), nx.Graph(g.graph)) and _same_multi(graphs[0].graph, g.graph) for g in graphs[1:])
    return FourPointsReport(arg == special, best, tuple(sorted(arg, key=str)), tuple(g.betti for g in graphs), bool(iso), len(pts))


def _same_multi(G: nx.MultiGraph, H: nx.MultiGraph) -> bool:
    return sorted(d for _, d in G.degree()) == sorted(d for _, d in H.degree()) and G.number_of_edges() == H.number_of_edges()


@dataclass(frozen=True)
class FiberSpectrum:
    entries: tuple[tuple[int, int], ...]

    def triples(self) -> list[tuple[int, int, int]]:
        return sorted((g, b, m) for (g, b), m in Counter(self.entries).items())

    def restricted(self, max_gen: int) -> "FiberSpectrum":
        return FiberSpectrum(tuple(e for e in self.entries if e[0] <= max_gen))

    def __eq__(self, other) -> bool:
        return isinstance(other, FiberSpectrum) and self.triples() == other.triples()

    def __hash__(self) -> int:
        return hash(tuple(self.triples()))


def fiber_spectrum(A: Iterable[int], k: int, h, mc: MengerComplex | None = None) -> FiberSpectrum:
    """(slit generation, max double-fiber betti over the four special points) per base slit."""
    if mc is None:
        mc = build_menger(A, k, h, doubled=True)
    if not mc.doubled:
        mc = mc.doubled_complex()
    t = fiber_table(mc.gc)
    entries = []
    for j in mc.generations:
        s = Fraction(1, 4**j)
        for a, b in itertools.product(range(4**j), repeat=2):
            x = a * s + s / 2
            pts = [(x, b * s + s / 4, None), (x, b * s + 3 * s / 4, None), (x, b * s + s / 2, -1), (x, b * s + s / 2, 1)]
            entries.append((j, max(t.betti(mc.gc.resolve(base_point(mc, *q))) for q in pts)))
    return FiberSpectrum(tuple(entries))


def spectra_distinguish(A: Iterable[int], B: Iterable[int], k: int, h) -> bool:
    return fiber_spectrum(A, k, h) != fiber_spectrum(B, k, h)


def fiber_report_csv(mc: MengerComplex, points: Sequence[tuple]) -> str:
    """Rows (x, y, side, layer, betti, endpoints, label) for base points (x, y, side[, layer])."""
    t = fiber_table(mc.gc)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "side", "layer", "betti", "endpoints", "label"])
    for q in points:
        x, y, side = q[:3]
        layer = q[3] if len(q) > 3 else 0
        node = mc.gc.resolve(base_point(mc, x, y, side, layer))
        b, e = t.invariants(node)
        w.writerow([str(as_fraction(x)), str(as_fraction(y)), "" if side is None else side, layer, b, e, classify(b, e)])
    return buf.getvalue()


# ---- coverings -----------------------------------------------------------------


def _cover_cells(gc: GridComplex, n: int):
    """Cells of each cube Q(x, 4^-n / 2), x in (4^-n Z)^3, keyed by the integer centre."""
    side = Fraction(1, 4**n)
    per = side / gc.h
    if per.denominator != 1 or per.numerator % 2:
        raise ValueError(f"resolution misaligned: h = {gc.h} must divide 4^-{n}/2")
    half = per.numerator // 2
    idx = gc.cell_index[: gc.ncells_layer]
    # cell i lies in the cube centred at lattice point m iff |i + 1/2 - m per| < half
    key = np.floor((idx + half) / per.numerator).astype(np.int64)
    out: dict[tuple[int, ...], np.ndarray] = {}
    flat = np.ravel_multi_index(tuple(key.T), (4**n + 1,) * gc.dim)
    order = np.argsort(flat, kind="stable")
    bounds = np.searchsorted(flat[order], np.arange((4**n + 1) ** gc.dim + 1))
    for f in range((4**n + 1) ** gc.dim):
        cells = order[bounds[f]:bounds[f + 1]]
        if cells.size:
            out[tuple(int(c) for c in np.unravel_index(f, (4**n + 1,) * gc.dim))] = cells
    return out


def _cells_to_nodes(gc: GridComplex, cells: np.ndarray) -> np.ndarray:
    return np.unique(gc.cell_corners[cells].ravel())


@dataclass(frozen=True)
class CoveringReport:
    max_order: int
    order_counts: dict
    epsilon: float


def covering_order(mc: MengerComplex, n: int, eps) -> CoveringReport:
    """Maximal number of eps-neighbourhoods (torn metric) of Q_n cubes containing a vertex."""
    gc = mc.gc
    eps = float(as_fraction(eps))
    if not eps < 4.0 ** (-(n + 1)) / 2:
        raise ValueError("epsilon must be below 4^-(n+1)/2")
    count = np.zeros(gc.nnodes, dtype=np.int32)
    for cells in _cover_cells(gc, n).values():
        nodes = _cells_to_nodes(gc, cells)
        d = dijkstra(gc.graph, directed=False, indices=nodes, min_only=True, limit=eps)
        count += (d < eps).astype(np.int32)
    return CoveringReport(int(count.max()), dict(Counter(count.tolist())), eps)


def cube_dichotomy(mc: MengerComplex, n: int, slack: float = 0.0):
    """For every pair of Q_n cubes at sup-distance 4^-n between centres: adjacency or torn distance.

    Returns rows (m, m', 'adjacent' | 'distance', value) and whether every
    non-adjacent pair is at distance >= 4^-(n+1) - slack.
    """
    gc = mc.gc
    cubes = _cover_cells(gc, n)
    nodes = {m: _cells_to_nodes(gc, c) for m, c in cubes.items()}
    bound = 4.0 ** (-(n + 1))
    rows = []
    ok = True
    keys = sorted(nodes)
    for m in keys:
        d = None
        for mm in keys:
            if mm <= m or max(abs(x - y) for x, y in zip(m, mm)) != 1:
                continue
            diff = sum(x != y for x, y in zip(m, mm))
            if diff == 1:
                rows.append((m, mm, "adjacent", 0.0))
                continue
            if d is None:
                d = dijkstra(gc.graph, directed=False, indices=nodes[m], min_only=True, limit=2 * bound)
            val = float(d[nodes[mm]].min())
            rows.append((m, mm, "distance", val))
            if val < bound - slack - 1e-12:
                ok = False
    return rows, ok


# ---- K5 ----------------------------------------------------------------------


def _route(gc: GridComplex, start: int, end: int, allowed: np.ndarray, used: np.ndarray) -> list[int]:
    """Shortest route through allowed, unused vertices; axis steps except at the two ends."""
    u, v, L = gc.edges
    ok_u = (allowed[u] & ~used[u]) | (u == start) | (u == end)
    ok_v = (allowed[v] & ~used[v]) | (v == start) | (v == end)
    axis = L <= gc.hf * (1 + 1e-9)
    ends = np.isin(u, [start, end]) | np.isin(v, [start, end])
    keep = ok_u & ok_v & (axis | ends)
    G = sp.csr_matrix((L[keep], (u[keep], v[keep])), shape=(gc.nnodes, gc.nnodes))
    d, pred = dijkstra(G, directed=False, indices=start, return_predecessors=True)
    if not np.isfinite(d[end]):
        raise ValueError(f"K5 route blocked between vertices {start} and {end} at h = {gc.h}")
    path = [end]
    while path[-1] != start:
        path.append(int(pred[path[-1]]))
    return path[::-1]


def k5_witness(mc: MengerComplex) -> dict[str, PathInComplex]:
    """Ten pairwise internally disjoint vertex paths joining the corners a, b, c, d, e."""
    gc = mc.gc
    if mc.doubled:
        raise ValueError("use the single complex")
    if gc.h > Fraction(1, 16):
        raise ValueError("K5 witness needs h <= 1/16")
    N = gc.shape[0]
    g = gc.node_grid
    corner = {
        "a": (0, 0, 0),
        "b": (N, 0, 0),
        "c": (0, N, 0),
        "d": (0, 0, N),
        "e": (N, N, N),
    }
    node = {}
    for name, idx in corner.items():
        c = gc.nodes_at(idx)
        if len(c) != 1:
            raise ValueError(f"corner {name} is split")
        node[name] = int(c[0])
    used = np.zeros(gc.nnodes, dtype=bool)
    for v in node.values():
        used[v] = True
    paths: dict[str, list[int]] = {}

    def line(fixed: dict[int, int]) -> np.ndarray:
        m = np.ones(gc.nnodes, dtype=bool)
        for ax, val in fixed.items():
            m &= g[:, ax] == val
        return m

    def take(name, a, b, allowed):
        p = _route(gc, node[a] if isinstance(a, str) else a, node[b] if isinstance(b, str) else b, allowed, used)
        used[p] = True
        paths.setdefault(name, []).extend(p if not paths.get(name) else p[1:])
        return p

    take("ab", "a", "b", line({1: 0, 2: 0}))
    take("ac", "a", "c", line({0: 0, 2: 0}))
    take("ad", "a", "d", line({0: 0, 1: 0}))
    mid = _single(gc, (N, N, 0))
    take("be", "b", mid, line({0: N, 2: 0}))
    take("be", mid, "e", line({0: N, 1: N}))
    mid = _single(gc, (0, N, N))
    take("ce", "c", mid, line({0: 0, 1: N}))
    take("ce", mid, "e", line({1: N, 2: N}))
    mid = _single(gc, (N, 0, N))
    take("de", "d", mid, line({1: 0, 2: N}))
    take("de", mid, "e", line({0: N, 2: N}))
    q = N // 4
    lo, hi = _single(gc, (q, q, 0)), _single(gc, (q, q, N))
    take("ae", "a", lo, line({2: 0}) & (g[:, 0] <= q) & (g[:, 1] <= q))
    take("ae", lo, hi, line({0: q, 1: q}))
    take("ae", hi, "e", line({2: N}))
    take("bc", "b", "c", line({2: 0}))
    take("cd", "c", "d", line({0: 0}))
    take("db", "d", "b", line({1: 0}))
    out = {}
    coords = g * gc.hf
    for name, p in paths.items():
        seg = np.linalg.norm(np.diff(coords[p], axis=0), axis=1).sum()
        out[name] = PathInComplex(tuple(int(x) for x in p), float(seg))
    ends = set(node.values())
    for (n1, p1), (n2, p2) in itertools.combinations(out.items(), 2):
        shared = (set(p1.nodes) & set(p2.nodes)) - ends
        if shared:
            raise AssertionError(f"K5 paths {n1} and {n2} share interior vertices")
    return out


def _single(gc: GridComplex, idx) -> int:
    c = gc.nodes_at(idx)
    if len(c) != 1:
        raise ValueError(f"vertex {idx} is split; choose another resolution")
    return int(c[0])


# ---- square slit families in the cube -------------------------------------------


def face_square_slits(A: Iterable[int], k: int, kind: str = "cross") -> SlitSequence:
    """Largest squares of the sheets: side s/2 centred at each cube centre.

    ``cross`` squares lie in planes x = const (normal axis 0), ``tube`` squares
    in planes y = const (normal axis 1).
    """
    axis = {"cross": 0, "tube": 1}[kind]
    slits = []
    for j in _gens(A, k):
        s = Fraction(1, 4**j)
        for idx in itertools.product(range(4**j), repeat=3):
            c = tuple(i * s + s / 2 for i in idx)
            slits.append(Slit(axis, c[axis], tuple(v for b, v in enumerate(c) if b != axis), s / 2, j, idx))
    slits.sort(key=lambda t: (-t.sidelength, t.generation, t.index))
    return SlitSequence(BoxN.unit(3), tuple(slits))
