"""Discrete p-modulus of curve families on torn grid complexes.

Densities live on cells.  A curve is a walk through neighbouring cells whose
centre segments avoid every closed torn face; its rho-length is the sum over
steps of ``|step| * (rho(u) + rho(v)) / 2`` plus half a cell of ``rho`` at each
end (the distance from the start or end face to the first or last centre).

The modulus is computed by constraint generation: a shortest-path separation
oracle produces violated curves, and the density is recomputed from the dual of
``min sum v rho^p  s.t.  A rho >= 1`` over the active curves.  Any dual point gives
a certified lower bound and any density divided by its shortest curve length a
certified upper bound.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog, minimize, nnls
from scipy.sparse.csgraph import dijkstra
from scipy.sparse.linalg import spsolve

from .collar import DensityField
from .grid_complex import GridComplex
from .slit_config import SlitSequence, as_fraction

log = logging.getLogger(__name__)

__all__ = [
    "ConnectOppositeFaces",
    "VerticalLines",
    "NonVerticalBand",
    "FiberLoops",
    "CurveFamilySpec",
    "ModulusResult",
    "InadmissibleDensityError",
    "band_interval",
    "family_oracle",
    "discrete_modulus",
    "upper_via_density",
    "length_floor_bound",
    "vertical_product_modulus",
    "brute_force_modulus",
    "coordinate_projection_map",
    "projection_inequality_check",
    "nonvertical_sweep",
]


@dataclass(frozen=True)
class ConnectOppositeFaces:
    """Curves joining the faces ``x[axis] = a`` and ``x[axis] = b``."""

    axis: int = 0
    avoid_slits: bool = True


@dataclass(frozen=True)
class VerticalLines:
    """Straight axis-parallel segments crossing the box without meeting a slit."""

    axis: int = 0


@dataclass(frozen=True)
class NonVerticalBand:
    """Curves whose projection to ``axis`` contains the dyadic interval J_{k,j}."""

    k: int
    j: int
    axis: int = 0


@dataclass(frozen=True)
class FiberLoops:
    """Loops formed by the straight last-axis columns over base cells, in every layer."""

    base_cells: tuple[int, ...] | None = None


CurveFamilySpec = Union[ConnectOppositeFaces, VerticalLines, NonVerticalBand, FiberLoops]


def band_interval(box, k: int, j: int, axis: int = 0) -> tuple[Fraction, Fraction]:
    if not 0 <= j < 2 ** (k + 1):
        raise ValueError(f"band index j = {j} outside [0, 2^{k + 1})")
    a, b = box.intervals[axis]
    w = (b - a) / 2 ** (k + 1)
    return a + w * j, a + w * (j + 1)


class InadmissibleDensityError(ValueError):
    def __init__(self, length: float, path):
        super().__init__(f"density is not admissible: curve of rho-length {length:.6g} < 1")
        self.length = length
        self.path = path


# ---- separation oracles -------------------------------------------------------


class _GraphOracle:
    """Cell paths from a source column to a target column (optionally within a slab)."""

    def __init__(self, gc: GridComplex, axis: int, lo: int, hi: int, respect_tears: bool = True):
        if gc.doubled:
            raise ValueError("path families are defined on single complexes")
        self.gc = gc
        self.nc = gc.ncells
        self.h = gc.hf
        u, v, L = gc.cell_edges(respect_tears)
        col = gc.cell_index[:, axis]
        inside = (col >= lo) & (col <= hi)
        keep = inside[u] & inside[v]
        u, v, L = u[keep], v[keep], L[keep]
        self.sources = np.nonzero(col == lo)[0]
        self.targets = np.nonzero(col == hi)[0]
        S = self.nc
        rows = np.concatenate([u, v, np.full(self.sources.size, S)])
        cols = np.concatenate([v, u, self.sources])
        lens = np.concatenate([L, L, np.full(self.sources.size, self.h / 2)])
        half = np.concatenate([np.full(2 * u.size, 0.5), np.zeros(self.sources.size)])
        order = np.lexsort((cols, rows))
        self._rows, self._cols, self._lens, self._half = rows[order], cols[order], lens[order], half[order]
        self._indptr = np.searchsorted(self._rows, np.arange(S + 2))
        self.edge_u, self.edge_v, self.edge_len = u, v, L
        self._nbr = None

    def _graph(self, rho: np.ndarray, eta: float) -> sp.csr_matrix:
        r = np.append(rho, 0.0)
        data = self._lens * (self._half * r[self._rows] + (1 - self._half) * r[self._cols] + eta)
        return sp.csr_matrix((data, self._cols, self._indptr), shape=(self.nc + 1, self.nc + 1))

    def shortest(self, rho: np.ndarray, eta: float):
        dist, pred = dijkstra(self._graph(rho, eta), indices=self.nc, return_predecessors=True)
        end = dist[self.targets] + self.h / 2 * (rho[self.targets] + eta)
        return end, pred

    def trace(self, pred: np.ndarray, t: int) -> np.ndarray:
        path = [t]
        while True:
            p = pred[path[-1]]
            if p == self.nc or p < 0:
                break
            path.append(int(p))
        return np.array(path[::-1], dtype=np.int64)

    def weights(self, cells: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        steps = np.linalg.norm(self.gc.cell_index[cells[1:]] - self.gc.cell_index[cells[:-1]], axis=1) * self.h
        w = np.zeros(cells.size)
        w[:-1] += steps / 2
        w[1:] += steps / 2
        w[0] += self.h / 2
        w[-1] += self.h / 2
        idx, inv = np.unique(cells, return_inverse=True)
        return idx, np.bincount(inv, weights=w)

    def candidates(self, rho: np.ndarray, eta: float, threshold: float, max_new: int):
        end, pred = self.shortest(rho, eta)
        if not np.isfinite(end).any():
            return None
        order = np.argsort(end, kind="stable")
        out = []
        for t in order:
            if len(out) >= max_new or not np.isfinite(end[t]):
                break
            cells = self.trace(pred, int(self.targets[t]))
            idx, w = self.weights(cells)
            length = float(w @ rho[idx])
            if length < threshold:
                out.append((cells, idx, w, length))
        return out

    def certify(self, rho: np.ndarray):
        end, pred = self.shortest(rho, 0.0)
        if not np.isfinite(end).any():
            return math.inf, None
        t = int(np.argmin(end))
        return float(end[t]), self.trace(pred, int(self.targets[t]))

    def empty(self) -> bool:
        end, _ = self.shortest(np.zeros(self.nc), 1.0)
        return not np.isfinite(end).any()


class _LinesOracle:
    """A finite family of fixed cell sets (straight lines or loops) with per-cell weights."""

    def __init__(self, gc: GridComplex, lines: list[np.ndarray], weight: float):
        self.gc = gc
        self.nc = gc.ncells
        self.lines = lines
        if lines:
            rows = np.repeat(np.arange(len(lines)), [l.size for l in lines])
            cols = np.concatenate(lines)
            self.M = sp.csr_matrix((np.full(cols.size, weight), (rows, cols)), shape=(len(lines), self.nc))
        else:
            self.M = sp.csr_matrix((0, self.nc))

    def candidates(self, rho, eta, threshold, max_new):
        if not self.lines:
            return None
        lens = self.M @ rho
        order = np.argsort(lens, kind="stable")
        out = []
        for i in order[:max_new]:
            if lens[i] >= threshold:
                break
            row = self.M.getrow(int(i))
            out.append((self.lines[i], row.indices, row.data, float(lens[i])))
        return out

    def certify(self, rho):
        if not self.lines:
            return math.inf, None
        lens = self.M @ rho
        i = int(np.argmin(lens))
        return float(lens[i]), self.lines[i]

    def empty(self) -> bool:
        return not self.lines


def _straight_lines(gc: GridComplex, axis: int, layers: Sequence[int] = (0,), base: np.ndarray | None = None):
    n = gc.dim
    shape = gc.shape
    others = [b for b in range(n) if b != axis]
    face = [slice(None)] * n
    face[axis] = slice(1, shape[axis])
    blocked = gc.torn[axis][tuple(face)].any(axis=axis)
    cid = np.arange(gc.ncells_layer).reshape(shape)
    lines = []
    base_set = None if base is None else set(int(b) for b in base)
    for flat, oidx in enumerate(itertools.product(*(range(shape[b]) for b in others))):
        if blocked[oidx] or (base_set is not None and flat not in base_set):
            continue
        sl = [slice(None)] * n
        for b, i in zip(others, oidx):
            sl[b] = i
        line = cid[tuple(sl)]
        lines.append(np.concatenate([line + L * gc.ncells_layer for L in layers]))
    return lines


def family_oracle(gc: GridComplex, family: CurveFamilySpec):
    if isinstance(family, ConnectOppositeFaces):
        return _GraphOracle(gc, family.axis, 0, gc.shape[family.axis] - 1, family.avoid_slits)
    if isinstance(family, NonVerticalBand):
        parts = 2 ** (family.k + 1)
        N = gc.shape[family.axis]
        if N % parts:
            raise ValueError("resolution too coarse for the band")
        w = N // parts
        return _GraphOracle(gc, family.axis, family.j * w, (family.j + 1) * w - 1)
    if isinstance(family, VerticalLines):
        if gc.doubled:
            raise ValueError("straight-line families are defined on single complexes")
        return _LinesOracle(gc, _straight_lines(gc, family.axis), gc.hf)
    if isinstance(family, FiberLoops):
        base = None if family.base_cells is None else np.asarray(family.base_cells)
        lines = _straight_lines(gc, gc.dim - 1, range(gc.layers), base)
        return _LinesOracle(gc, lines, gc.hf)
    raise TypeError(f"unknown family {family!r}")


# ---- dual solves --------------------------------------------------------------


def _dual_value(A: sp.csr_matrix, v: np.ndarray, p: float, lam: np.ndarray):
    u = A.T @ lam
    rho = (u / (p * v)) ** (1.0 / (p - 1))
    return float(lam.sum() - (1 - 1 / p) * (u * rho).sum()), rho


def _solve_lbfgs(A, v, p, lam0, scale):
    def fg(mu):
        lam = scale * mu
        u = A.T @ lam
        rho = (u / (p * v)) ** (1.0 / (p - 1))
        f = -lam.sum() + (1 - 1 / p) * (u * rho).sum()
        g = scale * (A @ rho - 1.0)
        return f, g

    res = minimize(
        fg,
        lam0 / scale,
        jac=True,
        method="L-BFGS-B",
        bounds=[(0, None)] * A.shape[0],
        options={"maxiter": 20000, "maxfun": 40000, "ftol": 1e-16, "gtol": 1e-13, "maxcor": 30},
    )
    return np.maximum(res.x, 0) * scale


def _solve_ldp(A, v):
    """Exact projection for p = 2 (least-distance programming via NNLS)."""
    At = (A.multiply(1 / np.sqrt(v)[None, :])).T.toarray()
    m = A.shape[0]
    E = np.vstack([At, np.ones((1, m))])
    f = np.zeros(E.shape[0])
    f[-1] = 1.0
    u, _ = nnls(E, f, maxiter=50 * m + 1000)
    denom = 1.0 - u.sum()
    if denom <= 0:
        raise RuntimeError("projection failed: constraints reported infeasible")
    return 2 * u / denom


def _solve_lp(A, v):
    res = linprog(v, A_ub=-A, b_ub=-np.ones(A.shape[0]), bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"LP solve failed: {res.message}")
    return float(res.fun), res.x


@dataclass(frozen=True)
class ModulusResult:
    lower: float
    upper: float
    density: DensityField
    active_paths: int
    iterations: int
    p: float
    tol: float
    empty: bool = False
    wall_time: float = 0.0

    @property
    def value(self) -> float:
        return 0.5 * (self.lower + self.upper)


def discrete_modulus(
    gc: GridComplex,
    family: CurveFamilySpec,
    p: float = 2.0,
    tol: float = 0.01,
    max_iter: int = 500,
    max_new: int = 1024,
    exact_limit: int = 1_000_000,
    method: str = "auto",
) -> ModulusResult:
    """Certified bounds for the discrete p-modulus of ``family`` on ``gc``.

    Both methods stop once the shortest family member has rho-length at least
    ``1 - tol``.

    ``cutting-plane``: violated shortest members are added as constraints and
    the density is re-projected.  For p = 2 the projection is exact
    (least-distance NNLS) while the dense system has at most ``exact_limit``
    entries, otherwise the dual is solved by L-BFGS-B.  p = 1 uses an LP.

    ``flow`` (path families, p >= 2): the dual is a minimum over unit flows of
    ``F = sum v^(1-q) u^q`` with ``u`` the per-cell length usage; it is solved
    by reweighted electrical flows.  A unit flow certifies ``F^-(p-1)`` from
    below, and ``rho = (u/v)^(q-1) / F`` divided by its shortest length from
    above.

    ``auto``: for planar path families with p >= 2, ``flow`` on torn
    complexes; on untorn boxes a few cutting-plane rounds first (the extremal
    density is constant there), falling back to ``flow``.  Everything else
    uses ``cutting-plane``.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    if not 0 < tol <= 0.1:
        raise ValueError("tol must lie in (0, 0.1]")
    if method not in ("auto", "flow", "cutting-plane"):
        raise ValueError(f"unknown method {method!r}")
    t0 = time.perf_counter()
    oracle = family_oracle(gc, family)
    nc = gc.ncells
    vol = np.full(nc, gc.cell_volume)
    if oracle.empty():
        zero = DensityField(np.zeros(nc), gc.cell_volume)
        return ModulusResult(0.0, 0.0, zero, 0, 0, p, 0.0, True, time.perf_counter() - t0)
    graph = isinstance(oracle, _GraphOracle)
    if method == "flow":
        if not graph or p < 2:
            raise ValueError("the flow method needs a path family and p >= 2")
        return _flow_modulus(gc, oracle, p, tol, max_iter, t0)
    if method == "auto" and graph and p >= 2 and gc.dim == 2:
        if any(t.any() for t in gc.torn):
            return _flow_modulus(gc, oracle, p, tol, max_iter, t0)
        res = _cutting_plane(gc, oracle, p, tol, 4, max_new, exact_limit, t0)
        if res.tol <= tol:
            return res
        return _flow_modulus(gc, oracle, p, tol, max_iter, t0)
    return _cutting_plane(gc, oracle, p, tol, max_iter, max_new, exact_limit, t0)


def _cutting_plane(gc, oracle, p, tol, max_iter, max_new, exact_limit, t0) -> ModulusResult:
    nc = gc.ncells
    vol = np.full(nc, gc.cell_volume)
    eta = 1e-9
    rows: list[tuple[np.ndarray, np.ndarray]] = []
    seen: set[bytes] = set()
    lam = np.zeros(0)
    rho = np.zeros(nc)
    scale = p * gc.cell_volume / gc.hf
    lower = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        cands = oracle.candidates(rho, eta * max(1.0, float(rho.max(initial=0.0))), 1 - tol / 2, max_new)
        fresh = []
        for cells, idx, w, _ in cands or []:
            key = idx.tobytes() + w.tobytes()
            if key not in seen:
                seen.add(key)
                fresh.append((idx, w))
        if not fresh:
            break
        rows.extend(fresh)
        lam = np.concatenate([lam, np.zeros(len(fresh))])
        A = _rows_matrix(rows, nc)
        if p == 1:
            lower, rho = _solve_lp(A, vol)
        elif p == 2 and A.shape[0] * (nc + 1) <= exact_limit:
            lam = _solve_ldp(A, vol)
            lower, rho = _dual_value(A, vol, p, lam)
        else:
            lam = _solve_lbfgs(A, vol, p, lam, scale)
            lower, rho = _dual_value(A, vol, p, lam)
        log.debug("iter %d: %d paths, lower %.6g, %.2fs", it, len(rows), lower, time.perf_counter() - t0)
    length, _ = oracle.certify(rho)
    mass = float((vol * rho**p).sum())
    if not np.isfinite(length) or length <= 0:
        raise RuntimeError("separation failed to produce a positive certificate")
    upper = mass / length**p
    density = DensityField(rho / length, gc.cell_volume)
    return ModulusResult(
        lower=min(lower, upper),
        upper=upper,
        density=density,
        active_paths=len(rows),
        iterations=it,
        p=p,
        tol=max(0.0, 1 - length),
        wall_time=time.perf_counter() - t0,
    )


def _flow_modulus(gc: GridComplex, oracle: "_GraphOracle", p: float, tol: float, max_iter: int, t0: float) -> ModulusResult:
    nc, h = gc.ncells, gc.hf
    v = np.full(nc, gc.cell_volume)
    q = p / (p - 1)
    src, dst = nc, nc + 1
    S, T = oracle.sources, oracle.targets
    eu, ev, L = oracle.edge_u, oracle.edge_v, oracle.edge_len
    a = np.concatenate([eu, np.full(S.size, src), T])
    b = np.concatenate([ev, S, np.full(T.size, dst)])
    # each edge charges half its length to each cell end; source and sink edges charge h/2
    c1 = np.concatenate([eu, S, T])
    w1 = np.concatenate([L / 2, np.full(S.size + T.size, h / 2)])
    two = np.arange(eu.size)
    c2, w2 = ev, L / 2
    W = np.bincount(c1, weights=w1, minlength=nc) + np.bincount(c2, weights=w2, minlength=nc)
    th1 = w1 / W[c1]
    th2 = w2 / W[c2]
    s_c = np.ones(nc)
    active = W > 0
    tau = None
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([a, b, b, a])
    best = None
    it = 0
    for it in range(1, max_iter + 1):
        scale = (q / 2) * v ** (1 - q) * s_c ** (q - 2)
        r = scale[c1] * w1**2 / th1
        r[two] += scale[c2] * w2**2 / th2
        g = 1.0 / r
        lap = sp.csr_matrix((np.concatenate([g, g, -g, -g]), (rows, cols)), shape=(nc + 2, nc + 2))
        inner = lap[:nc][:, :nc].tocsc()
        rhs = -np.asarray(lap[:nc][:, src].todense()).ravel()
        keep = active | (rhs != 0)
        phi = np.zeros(nc + 2)
        phi[src] = 1.0
        idx = np.nonzero(keep)[0]
        phi[idx] = spsolve(inner[idx][:, idx], rhs[idx])
        f = g * (phi[a] - phi[b])
        current = f[a == src].sum()
        if not current > 0:
            raise RuntimeError("flow solve produced no current")
        af = np.abs(f / current)
        u = np.bincount(c1, weights=w1 * af, minlength=nc) + np.bincount(c2, weights=w2 * af[two], minlength=nc)
        Fv = float((v ** (1 - q) * u**q).sum())
        rho = (u / v) ** (q - 1) / Fv
        length, _ = oracle.certify(rho)
        lower = Fv ** (-(p - 1))
        mass = float((v * rho**p).sum())
        log.debug("flow %d: lower %.6g, length %.6g, %.2fs", it, lower, length, time.perf_counter() - t0)
        if best is None or length > best[0]:
            best = (length, lower, rho, mass)
        if length >= 1 - tol:
            break
        if tau is None:
            tau = float(af.mean())
        uu = np.maximum(u, 1e-300)
        th1 = (w1 * af + tau * w1) / (uu[c1] + tau * W[c1])
        th2 = (w2 * af[two] + tau * w2) / (uu[c2] + tau * W[c2])
        s_c = np.where(u > 0, u, tau * W + 1e-300)
        tau *= 0.5
    length, lower, rho, mass = best
    upper = mass / length**p
    return ModulusResult(
        lower=min(lower, upper),
        upper=upper,
        density=DensityField(rho / length, gc.cell_volume),
        active_paths=0,
        iterations=it,
        p=p,
        tol=max(0.0, 1 - length),
        wall_time=time.perf_counter() - t0,
    )


def _rows_matrix(rows, nc):
    indptr = np.cumsum([0] + [r[0].size for r in rows])
    return sp.csr_matrix(
        (np.concatenate([r[1] for r in rows]), np.concatenate([r[0] for r in rows]), indptr),
        shape=(len(rows), nc),
    )


def upper_via_density(gc: GridComplex, rho: DensityField, family: CurveFamilySpec, p: float, slack: float = 0.0) -> float:
    """mass(rho, p) after verifying admissibility up to ``slack``."""
    length, path = family_oracle(gc, family).certify(rho.values)
    if length < 1 - slack - 1e-12:
        raise InadmissibleDensityError(length, path)
    return rho.mass(p)


def length_floor_bound(measure: float, L: float, p: float) -> float:
    """mu(A) / L^p: the mass of rho = 1/L on A."""
    if L <= 0:
        raise ValueError("length floor must be positive")
    return measure / L**p


def vertical_product_modulus(gc: GridComplex, k: int, p: float) -> float:
    """H^{n-1}(shadow) / (b_k - a_k)^{p-1} for the straight axis-k segments."""
    lines = _straight_lines(gc, k)
    shadow = len(lines) * gc.hf ** (gc.dim - 1) * gc.measure_scale
    return shadow / float(gc.box.side(k)) ** (p - 1)


# ---- brute-force oracle ------------------------------------------------------


def _segment_hits_box(p0, p1, box) -> bool:
    """Exact test whether the closed segment p0-p1 meets the closed box."""
    t0, t1 = Fraction(0), Fraction(1)
    for a, b, (lo, hi) in zip(p0, p1, box):
        d = b - a
        if d == 0:
            if a < lo or a > hi:
                return False
            continue
        ta, tb = (lo - a) / d, (hi - a) / d
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
        if t0 > t1:
            return False
    return True


def brute_force_modulus(seq: SlitSequence, level: int, h, p: float = 2.0, max_paths: int = 200_000):
    """mod_p of the left-right family by enumerating simple cell paths.

    Built from the slit geometry alone.  Paths touch the first column only at
    their start and the last column only at their end; every other simple path
    dominates one of these coordinatewise, so the constraint set is equivalent.
    Returns ``(value, number_of_paths)``.
    """
    import cvxopt

    h = as_fraction(h)
    n = seq.dim
    shape = tuple(int((b - a) / h) for a, b in seq.box.intervals)
    cells = list(itertools.product(*(range(N) for N in shape)))
    index = {c: i for i, c in enumerate(cells)}
    origin = [a for a, _ in seq.box.intervals]
    boxes = [s.as_box().bounds for s in seq.slits[:level]]

    def center(c):
        return tuple(o + h * (i + Fraction(1, 2)) for o, i in zip(origin, c))

    nbrs: dict[int, list[tuple[int, float]]] = {i: [] for i in range(len(cells))}
    for c in cells:
        for d in itertools.product((-1, 0, 1), repeat=n):
            if not any(d):
                continue
            e = tuple(x + y for x, y in zip(c, d))
            if e not in index:
                continue
            if any(_segment_hits_box(center(c), center(e), b) for b in boxes):
                continue
            nbrs[index[c]].append((index[e], float(h) * math.sqrt(sum(x * x for x in d))))
    first = [index[c] for c in cells if c[0] == 0]
    last = {index[c] for c in cells if c[0] == shape[0] - 1}
    col0 = {index[c] for c in cells if c[0] == 0}
    hf = float(h)
    rows = []

    def dfs(path, steps, on):
        node = path[-1]
        if node in last and len(path) > 0:
            w = np.zeros(len(cells))
            w[path[0]] += hf / 2
            w[node] += hf / 2
            for (a, b), s in zip(zip(path, path[1:]), steps):
                w[a] += s / 2
                w[b] += s / 2
            rows.append(w)
            if len(rows) > max_paths:
                raise RuntimeError("too many simple paths for brute force")
            return
        for nxt, s in nbrs[node]:
            if nxt in on or nxt in col0:
                continue
            on.add(nxt)
            path.append(nxt)
            steps.append(s)
            dfs(path, steps, on)
            steps.pop()
            path.pop()
            on.discard(nxt)

    for s in first:
        dfs([s], [], {s})
    if not rows:
        return 0.0, 0
    A = np.array(rows)
    vol = hf**n
    m, nc = A.shape
    if p != 2:
        raise ValueError("brute-force oracle supports p = 2")
    P = cvxopt.matrix(2 * vol * np.eye(nc))
    q = cvxopt.matrix(np.zeros(nc))
    G = cvxopt.matrix(np.vstack([-A, -np.eye(nc)]))
    hvec = cvxopt.matrix(np.concatenate([-np.ones(m), np.zeros(nc)]))
    opts = {"show_progress": False, "abstol": 1e-13, "reltol": 1e-13, "feastol": 1e-13, "maxiters": 200}
    sol = cvxopt.solvers.qp(P, q, G, hvec, options=opts)
    x = np.array(sol["x"]).ravel()
    return float(vol * (x**2).sum()), m


# ---- projections ---------------------------------------------------------------


def coordinate_projection_map(gc_src: GridComplex, gc_dst: GridComplex, drop_axis: int | None = None) -> np.ndarray:
    """Cell map of a coordinate projection (or the identity when ``drop_axis`` is None)."""
    if gc_src.h != gc_dst.h:
        raise ValueError("complexes must share the resolution")
    idx = gc_src.cell_index
    if drop_axis is None:
        if gc_src.shape != gc_dst.shape:
            raise ValueError("identity map needs equal shapes")
        return np.arange(gc_src.ncells) % gc_dst.ncells_layer
    keep = [a for a in range(gc_src.dim) if a != drop_axis]
    if tuple(gc_src.shape[a] for a in keep) != gc_dst.shape:
        raise ValueError("projected shape does not match the target complex")
    return np.ravel_multi_index(tuple(idx[:, a] for a in keep), gc_dst.shape)


@dataclass(frozen=True)
class ProjectionCheck:
    holds: bool
    source: ModulusResult
    target: ModulusResult
    pullback_length: float
    pullback_mass: float
    bound: float


def projection_inequality_check(
    gc_src: GridComplex,
    family_src: CurveFamilySpec,
    gc_dst: GridComplex,
    family_dst: CurveFamilySpec,
    cell_map: np.ndarray,
    C: float = 1.0,
    L: float = 1.0,
    p: float = 2.0,
    tol: float = 0.01,
) -> ProjectionCheck:
    """Check mod_p(src) <= C L^p mod_p(dst) and the pulled-back density.

    The target density ``rho`` is pulled back as ``L * rho o tau``; it must be
    admissible for the source family with mass at most ``C L^p mass(rho)``.
    """
    src = discrete_modulus(gc_src, family_src, p, tol)
    dst = discrete_modulus(gc_dst, family_dst, p, tol)
    pulled = L * dst.density.values[cell_map]
    length, _ = family_oracle(gc_src, family_src).certify(pulled)
    mass = float((pulled**p).sum() * gc_src.cell_volume)
    bound = C * L**p * dst.upper
    holds = src.lower <= bound * (1 + 1e-9) and mass <= C * L**p * dst.density.mass(p) * (1 + 1e-9) and length >= 1 - 1e-9
    return ProjectionCheck(bool(holds), src, dst, length, mass, bound)


# ---- non-vertical bands ------------------------------------------------------


@dataclass(frozen=True)
class BandRow:
    k: int
    j: int
    epsilon: Fraction
    delta: Fraction
    selected: int
    bound: float
    modulus_upper: float | None


def nonvertical_sweep(
    seq: SlitSequence,
    level: int,
    h,
    k_max: int,
    eps_list: Sequence,
    delta_list: Sequence = (0,),
    p: float = 2.0,
    strategy: str = "largest",
    compute_modulus: bool = True,
    tol: float = 0.02,
) -> list[BandRow]:
    """Collar bounds for the band families Gamma(J_{k,j}), k <= k_max.

    For each band J = (alpha, beta) and inner margin delta, collars are selected
    among the slits whose collars lie in ``alpha + delta <= x <= beta - delta``;
    the density 1/(beta - alpha) off their omitted regions, restricted to the
    slab over J, has mass ``(beta - alpha)^-p (H(slab) - H(O))``.
    """
    from .collar import decompose, select_collars

    from .grid_complex import build_slit_complex

    h = as_fraction(h)
    base = seq.prefix(level)
    gc = build_slit_complex(base, level, h)
    rows = []
    for k in range(k_max + 1):
        for j in range(2 ** (k + 1)):
            alpha, beta = band_interval(seq.box, k, j)
            width = beta - alpha
            slab_cross = seq.box.volume / seq.box.side(0)
            mod_upper = None
            if compute_modulus:
                mod_upper = discrete_modulus(gc, NonVerticalBand(k, j), p, tol).upper
            for eps in eps_list:
                eps = as_fraction(eps)
                for delta in delta_list:
                    delta = as_fraction(delta)
                    inner = [
                        i
                        for i, s in enumerate(base.slits)
                        if s.offset >= alpha + delta and s.offset + eps * s.sidelength <= beta - delta
                    ]
                    chosen = select_collars(base, eps, strategy, candidates=inner)
                    dec = decompose(base, chosen, eps, h)
                    omitted = dec.omitted_measure
                    bound = float(width) ** (-p) * float(slab_cross * width - omitted)
                    rows.append(BandRow(k, j, eps, delta, len(chosen), bound, mod_upper))
    return rows
