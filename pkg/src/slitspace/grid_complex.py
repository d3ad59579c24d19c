"""Torn grid complexes discretizing slit-domain completions and their doubles.

A complex lives on the cell grid of a box at resolution ``h``.  Tearing sheets
mark (n-1)-faces of the grid; a grid vertex splits into one copy per connected
cluster of its incident cells, where two incident cells are linked when they
share an untorn face.  This yields two copies on slit interiors, a single copy
on slit boundaries and up to four copies where two sheets cross.

Edges join every pair of corner copies of a cell (8-neighbour stencil in 2D,
26-neighbour in 3D) with Euclidean length, so no edge crosses a torn face.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra

from .slit_config import BoxN, Slit, SlitSequence, as_fraction, format_rational

__all__ = [
    "KAPPA",
    "MAX_CELLS",
    "Sheet",
    "PointRef",
    "PathInComplex",
    "GridComplex",
    "AhlforsReport",
    "build_complex",
    "build_slit_complex",
    "geodesic_distance",
    "geodesic_path",
    "project",
    "double",
    "ahlfors_scan",
    "measure_comparability",
    "dumps_complex",
    "distance_matrix_csv",
]

#: Worst ratio of stencil length to Euclidean length over all directions.
#: 2D: sqrt(4 - 2 sqrt 2); 3D: numerical maximum of ((a-b) + sqrt2 (b-c) + sqrt3 c)/|(a,b,c)|.
KAPPA = {2: math.sqrt(4 - 2 * math.sqrt(2)), 3: 1.1280928108}

MAX_CELLS = 2**24


@dataclass(frozen=True)
class Sheet:
    """A tearing set inside the hyperplane ``x[normal_axis] = offset``.

    ``rects`` is a union of closed boxes in the tangent coordinates (axes other
    than the normal one, in increasing order).
    """

    normal_axis: int
    offset: Fraction
    rects: tuple[tuple[tuple[Fraction, Fraction], ...], ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "offset", as_fraction(self.offset))
        object.__setattr__(
            self,
            "rects",
            tuple(tuple((as_fraction(lo), as_fraction(hi)) for lo, hi in r) for r in self.rects),
        )

    @classmethod
    def from_slit(cls, s: Slit, label: str = "") -> "Sheet":
        bounds = s.as_box().bounds
        rect = tuple(b for a, b in enumerate(bounds) if a != s.normal_axis)
        return cls(s.normal_axis, s.offset, (rect,), label)

    def contains(self, coords: Sequence[Fraction]) -> bool:
        if coords[self.normal_axis] != self.offset:
            return False
        tangent = [c for a, c in enumerate(coords) if a != self.normal_axis]
        return any(all(lo <= t <= hi for t, (lo, hi) in zip(tangent, r)) for r in self.rects)


@dataclass(frozen=True)
class PointRef:
    """A grid point of a complex, with optional side tags and layer."""

    coords: tuple[Fraction, ...]
    side: tuple[tuple[int, int], ...] = ()
    layer: int = 0

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(as_fraction(c) for c in self.coords))
        side = self.side.items() if isinstance(self.side, Mapping) else self.side
        side = tuple(sorted((int(k), int(v)) for k, v in side))
        if any(v not in (-1, 1) for _, v in side):
            raise ValueError("side tags must be +1 or -1")
        object.__setattr__(self, "side", side)

    def tag(self, sheet: int) -> int | None:
        return dict(self.side).get(sheet)


@dataclass(frozen=True)
class PathInComplex:
    nodes: tuple[int, ...]
    length: float

    def __len__(self) -> int:
        return len(self.nodes)


def _check_aligned(value: Fraction, h: Fraction, what: str) -> int:
    q = value / h
    if q.denominator != 1:
        raise ValueError(f"resolution misaligned: {what} = {value} is not a multiple of h = {h}")
    return int(q)


def _tear(box: BoxN, h: Fraction, shape: tuple[int, ...], sheets: Sequence[Sheet]):
    n = len(shape)
    torn = [np.zeros(tuple(N + 1 if b == a else N for b, N in enumerate(shape)), dtype=bool) for a in range(n)]
    for s in sheets:
        a = s.normal_axis
        lo_a = box.intervals[a][0]
        p = _check_aligned(s.offset - lo_a, h, "sheet offset")
        if not 0 <= p <= shape[a]:
            raise ValueError("sheet outside the box")
        tangent = [b for b in range(n) if b != a]
        for rect in s.rects:
            idx: list = [slice(None)] * n
            idx[a] = p
            for b, (lo, hi) in zip(tangent, rect):
                i0 = _check_aligned(lo - box.intervals[b][0], h, "sheet bound")
                i1 = _check_aligned(hi - box.intervals[b][0], h, "sheet bound")
                idx[b] = slice(max(i0, 0), min(i1, shape[b]))
            torn[a][tuple(idx)] = True
    return torn


def _vertex_copies(shape: tuple[int, ...], torn):
    """Cluster (cell, corner) pairs into vertex copies.

    Returns ``cell_corners`` (ncells, 2^n) and ``node_grid`` (nnodes, n).
    """
    n = len(shape)
    K = 2**n
    ncell = math.prod(shape)
    cid = np.arange(ncell, dtype=np.int64).reshape(shape)
    rows, cols = [], []
    for a in range(n):
        lo = [slice(None)] * n
        hi = [slice(None)] * n
        lo[a] = slice(0, shape[a] - 1)
        hi[a] = slice(1, shape[a])
        face = [slice(None)] * n
        face[a] = slice(1, shape[a])
        open_face = ~torn[a][tuple(face)]
        lower = cid[tuple(lo)][open_face]
        upper = cid[tuple(hi)][open_face]
        for beta in range(K):
            if beta >> a & 1:
                rows.append(lower * K + beta)
                cols.append(upper * K + (beta ^ (1 << a)))
    total = ncell * K
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
    else:
        r = c = np.zeros(0, dtype=np.int64)
    adj = sp.coo_matrix((np.ones(r.size, dtype=np.int8), (r, c)), shape=(total, total)).tocsr()
    ncomp, labels = connected_components(adj, directed=False)
    # grid vertex of every (cell, corner) pair
    cell_multi = np.stack(np.unravel_index(np.arange(ncell), shape), axis=1)
    bits = np.array([[beta >> a & 1 for a in range(n)] for beta in range(K)], dtype=np.int64)
    vshape = tuple(N + 1 for N in shape)
    vert = np.ravel_multi_index(
        tuple((cell_multi[:, None, a] + bits[None, :, a]).ravel() for a in range(n)), vshape
    )
    first = np.full(ncomp, total, dtype=np.int64)
    np.minimum.at(first, labels, np.arange(total))
    comp_vertex = vert[first]
    order = np.lexsort((first, comp_vertex))
    new_id = np.empty(ncomp, dtype=np.int64)
    new_id[order] = np.arange(ncomp)
    cell_corners = new_id[labels].reshape(ncell, K)
    node_grid = np.stack(np.unravel_index(comp_vertex[order], vshape), axis=1)
    return cell_corners, node_grid


@dataclass(frozen=True, eq=False)
class GridComplex:
    box: BoxN
    h: Fraction
    shape: tuple[int, ...]
    torn: tuple[np.ndarray, ...]
    sheets: tuple[Sheet, ...]
    cell_corners: np.ndarray
    node_grid: np.ndarray
    node_layer: np.ndarray
    node_glued: np.ndarray
    layers: int = 1
    glue: str | None = None
    level: int = 0
    measure_scale: float = 1.0
    meta: dict = field(default_factory=dict)

    # ---- sizes and geometry --------------------------------------------------
    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def doubled(self) -> bool:
        return self.layers == 2

    @property
    def ncells_layer(self) -> int:
        return math.prod(self.shape)

    @property
    def ncells(self) -> int:
        return self.ncells_layer * self.layers

    @property
    def nnodes(self) -> int:
        return self.node_grid.shape[0]

    @property
    def hf(self) -> float:
        return float(self.h)

    @property
    def cell_volume(self) -> float:
        return self.hf**self.dim * self.measure_scale

    @cached_property
    def origin(self) -> np.ndarray:
        return np.array([float(a) for a, _ in self.box.intervals])

    @cached_property
    def node_coords(self) -> np.ndarray:
        return self.origin + self.node_grid * self.hf

    @cached_property
    def cell_index(self) -> np.ndarray:
        """Multi-index (per layer) of every cell, shape (ncells, n)."""
        idx = np.stack(np.unravel_index(np.arange(self.ncells_layer), self.shape), axis=1)
        return np.tile(idx, (self.layers, 1))

    @cached_property
    def cell_centers(self) -> np.ndarray:
        return self.origin + (self.cell_index + 0.5) * self.hf

    def with_measure_scale(self, lam: float) -> "GridComplex":
        from dataclasses import replace

        return replace(self, measure_scale=self.measure_scale * lam)

    # ---- lookup --------------------------------------------------------------
    @cached_property
    def _vflat(self) -> np.ndarray:
        vshape = tuple(N + 1 for N in self.shape)
        return np.ravel_multi_index(tuple(self.node_grid.T), vshape)

    @cached_property
    def _vorder(self) -> np.ndarray:
        return np.argsort(self._vflat, kind="stable")

    def grid_index(self, coords: Sequence) -> tuple[int, ...]:
        idx = []
        for (a, b), c, N in zip(self.box.intervals, coords, self.shape):
            q = (as_fraction(c) - a) / self.h
            if q.denominator != 1 or not 0 <= q <= N:
                raise ValueError(f"point {tuple(map(str, coords))} is not a vertex of the grid")
            idx.append(int(q))
        return tuple(idx)

    def nodes_at(self, grid_idx: Sequence[int]) -> np.ndarray:
        vshape = tuple(N + 1 for N in self.shape)
        v = np.ravel_multi_index(tuple(grid_idx), vshape)
        lo = np.searchsorted(self._vflat[self._vorder], v, side="left")
        hi = np.searchsorted(self._vflat[self._vorder], v, side="right")
        return np.sort(self._vorder[lo:hi])

    @cached_property
    def node_cells(self) -> sp.csr_matrix:
        """Incidence matrix nodes x cells."""
        K = self.cell_corners.shape[1]
        cells = np.repeat(np.arange(self.ncells), K)
        return sp.csr_matrix(
            (np.ones(cells.size, dtype=np.int8), (self.cell_corners.ravel(), cells)),
            shape=(self.nnodes, self.ncells),
        )

    def incident_cells(self, node: int) -> np.ndarray:
        m = self.node_cells
        return m.indices[m.indptr[node]:m.indptr[node + 1]]

    def node_side(self, node: int, sheet: int) -> int:
        """+1 / -1 if all incident cells lie on one side of the sheet's plane, else 0."""
        s = self.sheets[sheet]
        plane = int((s.offset - self.box.intervals[s.normal_axis][0]) / self.h)
        ca = self.cell_index[self.incident_cells(node), s.normal_axis]
        if np.all(ca >= plane):
            return 1
        if np.all(ca < plane):
            return -1
        return 0

    def resolve(self, p: PointRef) -> int:
        cand = self.nodes_at(self.grid_index(p.coords))
        cand = [v for v in cand if self.node_glued[v] or self.node_layer[v] == p.layer]
        for sheet, sign in p.side:
            if not 0 <= sheet < len(self.sheets):
                raise ValueError(f"unknown sheet {sheet}")
            strict = [v for v in cand if self.node_side(v, sheet) == sign]
            if strict:
                cand = strict
            else:
                s = self.sheets[sheet]
                plane = int((s.offset - self.box.intervals[s.normal_axis][0]) / self.h)
                loose = []
                for v in cand:
                    ca = self.cell_index[self.incident_cells(v), s.normal_axis]
                    if np.any((ca >= plane) if sign > 0 else (ca < plane)):
                        loose.append(v)
                cand = loose
        if not cand:
            raise ValueError(f"no vertex copy matches {p}")
        if len(cand) > 1:
            raise ValueError(f"ambiguous point {p}: side tag required ({len(cand)} copies)")
        return int(cand[0])

    def point_of(self, node: int) -> PointRef:
        """A PointRef that resolves back to ``node``."""
        coords = tuple(a + self.h * int(i) for (a, _), i in zip(self.box.intervals, self.node_grid[node]))
        layer = 0 if self.node_glued[node] else int(self.node_layer[node])
        tags = {}
        for v in self.nodes_at(self.node_grid[node]):
            if v == node:
                continue
            if not self.node_glued[v] and not self.node_glued[node] and self.node_layer[v] != self.node_layer[node]:
                continue
            for sid in self.sheets_through(coords):
                side = self.node_side(node, sid)
                if side and self.node_side(v, sid) != side:
                    tags[sid] = side
        return PointRef(coords, tags, layer)

    def sheets_through(self, coords: Sequence[Fraction]) -> list[int]:
        return [i for i, s in enumerate(self.sheets) if s.contains(coords)]

    # ---- edges ---------------------------------------------------------------
    @cached_property
    def edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Deduplicated vertex edges (u < v) with Euclidean lengths."""
        n = self.dim
        K = 2**n
        cc = self.cell_corners
        us, vs, ls = [], [], []
        for i, j in itertools.combinations(range(K), 2):
            u, v = cc[:, i], cc[:, j]
            lo, hi = np.minimum(u, v), np.maximum(u, v)
            us.append(lo)
            vs.append(hi)
            ls.append(np.full(lo.size, int(bin(i ^ j).count("1")), dtype=np.int8))
        u = np.concatenate(us)
        v = np.concatenate(vs)
        m = np.concatenate(ls)
        key = u * self.nnodes + v
        key, first = np.unique(key, return_index=True)
        u, v, m = u[first], v[first], m[first]
        return u, v, self.hf * np.sqrt(m.astype(float))

    @cached_property
    def graph(self) -> sp.csr_matrix:
        """Upper-triangular weighted adjacency; use with ``directed=False``."""
        u, v, w = self.edges
        return sp.csr_matrix((w, (u, v)), shape=(self.nnodes, self.nnodes))

    def distances(self, sources, limit: float = np.inf) -> np.ndarray:
        return dijkstra(self.graph, directed=False, indices=sources, limit=limit)

    # ---- cell graph (for curve families) ------------------------------------
    def cell_edges(self, respect_tears: bool = True):
        """Neighbour pairs of cells (one layer) whose centre segment avoids every closed torn face."""
        return _cell_edges(self.shape, self.torn if respect_tears else None, self.hf)

    def face_plane(self, sheet: int) -> int:
        s = self.sheets[sheet]
        return int((s.offset - self.box.intervals[s.normal_axis][0]) / self.h)

    @cached_property
    def registry(self) -> dict[int, dict[int, np.ndarray]]:
        """Per sheet: node ids of its + and - vertex sheets (relative interior copies)."""
        out = {}
        inc = self.node_cells
        for sid, s in enumerate(self.sheets):
            a = s.normal_axis
            plane = self.face_plane(sid)
            on_plane = np.nonzero(self.node_grid[:, a] == plane)[0]
            coords = self.node_grid[on_plane] * self.hf + self.origin
            inside = np.zeros(on_plane.size, dtype=bool)
            tangent = [b for b in range(self.dim) if b != a]
            for rect in s.rects:
                ok = np.ones(on_plane.size, dtype=bool)
                for b, (lo, hi) in zip(tangent, rect):
                    ok &= (coords[:, b] >= float(lo) - 1e-12) & (coords[:, b] <= float(hi) + 1e-12)
                inside |= ok
            nodes = on_plane[inside]
            sub = inc[nodes]
            ca = self.cell_index[sub.indices, a]
            row = np.repeat(np.arange(nodes.size), np.diff(sub.indptr))
            plus = np.bincount(row, weights=(ca >= plane), minlength=nodes.size)
            tot = np.diff(sub.indptr)
            out[sid] = {1: nodes[plus == tot], -1: nodes[plus == 0]}
        return out


def _cell_edges(shape, torn, h):
    n = len(shape)
    ncell = math.prod(shape)
    cid = np.arange(ncell, dtype=np.int64).reshape(shape)
    us, vs, ls = [], [], []
    for d in itertools.product((-1, 0, 1), repeat=n):
        nz = [a for a in range(n) if d[a] != 0]
        if not nz or d[nz[0]] < 0:
            continue
        src = [slice(0, N - 1) if d[a] > 0 else slice(1, N) if d[a] < 0 else slice(None) for a, N in enumerate(shape)]
        dst = [slice(1, N) if d[a] > 0 else slice(0, N - 1) if d[a] < 0 else slice(None) for a, N in enumerate(shape)]
        cut = np.zeros(cid[tuple(src)].shape, dtype=bool)
        if torn is not None:
            for a in nz:
                others = [b for b in nz if b != a]
                for choice in itertools.product((0, 1), repeat=len(others)):
                    idx = [slice(None)] * n
                    idx[a] = slice(1, shape[a])
                    for b, c in zip(others, choice):
                        idx[b] = dst[b] if c else src[b]
                    cut |= torn[a][tuple(idx)]
        keep = ~cut
        us.append(cid[tuple(src)][keep])
        vs.append(cid[tuple(dst)][keep])
        ls.append(np.full(int(keep.sum()), h * math.sqrt(len(nz))))
    return np.concatenate(us), np.concatenate(vs), np.concatenate(ls)


def build_complex(box: BoxN, h, sheets: Sequence[Sheet], level: int | None = None, max_cells: int = MAX_CELLS) -> GridComplex:
    """Torn complex of ``box`` at resolution ``h`` cut along ``sheets``."""
    h = as_fraction(h)
    if h <= 0:
        raise ValueError("h must be positive")
    shape = tuple(_check_aligned(b - a, h, "box side") for a, b in box.intervals)
    for a, _ in box.intervals:
        _check_aligned(a, h, "box corner")
    ncell = math.prod(shape)
    if ncell > max_cells:
        suggested = h * 2 ** math.ceil(math.log2(ncell / max_cells) / len(shape))
        raise ValueError(f"cell cap exceeded: {ncell} cells > {max_cells}; try h = {format_rational(suggested)}")
    sheets = tuple(sheets)
    torn = _tear(box, h, shape, sheets)
    cc, grid = _vertex_copies(shape, torn)
    nn = grid.shape[0]
    return GridComplex(
        box=box,
        h=h,
        shape=shape,
        torn=tuple(torn),
        sheets=sheets,
        cell_corners=cc,
        node_grid=grid,
        node_layer=np.zeros(nn, dtype=np.int8),
        node_glued=np.zeros(nn, dtype=bool),
        level=len(sheets) if level is None else level,
    )


def build_slit_complex(seq: SlitSequence, level: int, h, max_cells: int = MAX_CELLS) -> GridComplex:
    """Complex realizing the completion of the slit domain of the first ``level`` slits."""
    if not 0 <= level <= len(seq.slits):
        raise ValueError(f"level {level} outside [0, {len(seq.slits)}]")
    sheets = [Sheet.from_slit(s, f"slit{i}") for i, s in enumerate(seq.slits[:level])]
    gc = build_complex(seq.box, h, sheets, level=level, max_cells=max_cells)
    gc.meta["sequence"] = seq
    return gc


def geodesic_distance(gc: GridComplex, p: PointRef, q: PointRef) -> float:
    s, t = gc.resolve(p), gc.resolve(q)
    return float(gc.distances(s)[t])


def geodesic_path(gc: GridComplex, p: PointRef, q: PointRef) -> PathInComplex:
    s, t = gc.resolve(p), gc.resolve(q)
    dist, pred = dijkstra(gc.graph, directed=False, indices=s, return_predecessors=True)
    if not np.isfinite(dist[t]):
        raise ValueError("points lie in different components")
    nodes = [t]
    while nodes[-1] != s:
        nodes.append(int(pred[nodes[-1]]))
    return PathInComplex(tuple(reversed(nodes)), float(dist[t]))


def project(gc_fine: GridComplex, p: PointRef, level: int) -> PointRef:
    """tau_{level, j}: forget the sides of slits beyond ``level``."""
    if level > gc_fine.level:
        raise ValueError("target level exceeds the source level")
    return PointRef(p.coords, tuple((s, v) for s, v in p.side if s < level), p.layer)


def double(gc: GridComplex, glue: str = "boundary") -> GridComplex:
    """Glue two copies of ``gc`` along the outer boundary or the top/bottom faces."""
    if gc.doubled:
        raise ValueError("complex is already doubled")
    grid = gc.node_grid
    N = np.array(gc.shape)
    if glue == "boundary":
        on = np.any((grid == 0) | (grid == N), axis=1)
    elif glue == "top_bottom":
        on = (grid[:, -1] == 0) | (grid[:, -1] == N[-1])
    else:
        raise ValueError(f"unknown glue selector {glue!r}")
    nn = gc.nnodes
    twin = np.arange(nn)
    twin[~on] = nn + np.arange(int((~on).sum()))
    from dataclasses import replace

    out = replace(
        gc,
        cell_corners=np.concatenate([gc.cell_corners, twin[gc.cell_corners]]),
        node_grid=np.concatenate([grid, grid[~on]]),
        node_layer=np.concatenate([np.zeros(nn, dtype=np.int8), np.ones(int((~on).sum()), dtype=np.int8)]),
        node_glued=np.concatenate([on, np.zeros(int((~on).sum()), dtype=bool)]),
        layers=2,
        glue=glue,
        meta=dict(gc.meta),
    )
    return out


@dataclass(frozen=True)
class AhlforsReport:
    min_ratio: float
    max_ratio: float
    samples: tuple[tuple[int, float, float], ...]

    @property
    def spread(self) -> float:
        return self.max_ratio / self.min_ratio


def ball_measure(gc: GridComplex, dist: np.ndarray, r: float) -> float:
    """Volume of cells whose mean corner distance is at most ``r``."""
    cd = dist[gc.cell_corners].mean(axis=1)
    return float(np.count_nonzero(cd <= r + 1e-12)) * gc.cell_volume


def ahlfors_scan(gc: GridComplex, samples: int, radii: Sequence[float], seed: int = 0) -> AhlforsReport:
    """Ratios mu(B(x, r)) / r^n for ``samples`` random (vertex, radius) pairs."""
    radii = [float(r) for r in radii]
    if min(radii) <= 2 * gc.hf:
        raise ValueError("radii must exceed 2h")
    rng = np.random.default_rng(seed)
    centers = rng.integers(0, gc.nnodes, size=samples)
    rs = rng.choice(radii, size=samples)
    out = []
    for c in np.unique(centers):
        dist = gc.distances(int(c), limit=max(radii) * 1.5)
        for r in rs[centers == c]:
            out.append((int(c), float(r), ball_measure(gc, dist, r) / r**gc.dim))
    ratios = [x[2] for x in out]
    return AhlforsReport(min(ratios), max(ratios), tuple(out))


def measure_comparability(gc_j: GridComplex, cells: Iterable[int], level: int) -> tuple[float, float]:
    """(H(E), H(tau_level(E))) for a union of cells.

    Projections merge slit sheets only, which carry no cells, so the image of a
    cell set is the same cell set.
    """
    if level > gc_j.level:
        raise ValueError("target level exceeds the source level")
    E = np.unique(np.asarray(list(cells), dtype=np.int64))
    if E.size and (E.min() < 0 or E.max() >= gc_j.ncells):
        raise ValueError("cell index out of range")
    H = E.size * gc_j.cell_volume
    image = np.unique(E)
    return H, image.size * gc_j.cell_volume


def dumps_complex(gc: GridComplex) -> str:
    """Plain-text summary: resolution, counts and duplicated sheets per slit."""
    reg = gc.registry
    obj = {
        "dim": gc.dim,
        "h": format_rational(gc.h),
        "box": [[format_rational(a), format_rational(b)] for a, b in gc.box.intervals],
        "cells": gc.ncells,
        "grid_vertices": math.prod(N + 1 for N in gc.shape),
        "vertex_copies": gc.nnodes,
        "doubled": gc.doubled,
        "glue": gc.glue,
        "level": gc.level,
        "sheets": [
            {
                "id": i,
                "label": s.label,
                "axis": s.normal_axis,
                "offset": format_rational(s.offset),
                "plus_copies": int(reg[i][1].size),
                "minus_copies": int(reg[i][-1].size),
            }
            for i, s in enumerate(gc.sheets)
        ],
    }
    return json.dumps(obj, indent=1) + "\n"


def distance_matrix_csv(gc: GridComplex, points: Sequence[PointRef]) -> str:
    nodes = [gc.resolve(p) for p in points]
    D = gc.distances(nodes)[:, nodes]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["point"] + [f"p{i}" for i in range(len(nodes))])
    for i, row in enumerate(D):
        w.writerow([f"p{i}"] + [f"{x:.12g}" for x in row])
    return buf.getvalue()
