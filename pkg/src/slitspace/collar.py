"""Collars, buffers, omitted regions and the indicator density built from them.

The collar of a slit ``s`` with normal axis ``a`` at offset ``x`` is the box
``[x, x + eps l(s)]`` along ``a`` times the slit's own cross-section.  Its
omitted region keeps the full normal width but shrinks every tangent interval
to the middle ``(1 - 2 eps) l(s)``; the buffer is the rest of the collar.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse.csgraph import dijkstra
import scipy.sparse as sp

from .grid_complex import KAPPA, GridComplex
from .slit_config import SlitSequence, as_fraction, validate_sequence

__all__ = [
    "DensityField",
    "CollarDecomposition",
    "AdmissibilityReport",
    "BufferBound",
    "SurgeryResult",
    "collar_box",
    "omitted_box",
    "select_collars",
    "decompose",
    "rho_eps",
    "discretization_slack",
    "admissibility_min",
    "buffer_bound",
    "curve_surgery",
    "random_paths",
    "residual_product",
    "residual_measure",
    "divergence_report",
    "collar_sweep_csv",
    "label_grid",
]

R, B, O = 0, 1, 2
_LETTERS = "RBO"


@dataclass(frozen=True, eq=False)
class DensityField:
    """A nonnegative density, one value per cell (flat cell order of the complex)."""

    values: np.ndarray
    cell_volume: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("density values must be finite")
        if np.any(v < 0):
            raise ValueError("density values must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_mass", {})

    def mass(self, p: float) -> float:
        if p not in self._mass:
            self._mass[p] = float((self.values**p).sum() * self.cell_volume)
        return self._mass[p]

    def scaled(self, c: float) -> "DensityField":
        return DensityField(self.values * c, self.cell_volume)

    @classmethod
    def indicator(cls, mask: np.ndarray, value: float, cell_volume: float) -> "DensityField":
        return cls(np.where(np.ravel(mask), value, 0.0), cell_volume)


def collar_box(s, eps) -> tuple[tuple[Fraction, Fraction], ...]:
    eps = as_fraction(eps)
    out = list(s.as_box().bounds)
    out[s.normal_axis] = (s.offset, s.offset + eps * s.sidelength)
    return tuple(out)


def omitted_box(s, eps) -> tuple[tuple[Fraction, Fraction], ...]:
    eps = as_fraction(eps)
    half = (1 - 2 * eps) * s.sidelength / 2
    out = []
    tangent = iter(s.center)
    for b in range(s.dim):
        if b == s.normal_axis:
            out.append((s.offset, s.offset + eps * s.sidelength))
        else:
            c = next(tangent)
            out.append((c - half, c + half))
    return tuple(out)


def _integer_bounds(boxes: Sequence[Sequence[tuple[Fraction, Fraction]]]):
    den = 1
    for box in boxes:
        for lo, hi in box:
            den = math.lcm(den, lo.denominator, hi.denominator)
    lo = np.array([[int(l * den) for l, _ in box] for box in boxes], dtype=object)
    hi = np.array([[int(u * den) for _, u in box] for box in boxes], dtype=object)
    if den < 2**40:
        lo, hi = lo.astype(np.int64), hi.astype(np.int64)
    return lo, hi


def _sigma(seq: SlitSequence) -> float:
    return seq.sigma if seq.sigma > 0 else validate_sequence(seq).sigma


def select_collars(seq: SlitSequence, eps, strategy: str = "largest", candidates: Iterable[int] | None = None) -> list[int]:
    """Greedy maximal family of slits with pairwise essentially disjoint collars.

    ``largest`` scans by nonincreasing length (ties by generation, then index);
    ``first-fit`` scans by position in the sequence.  Overlap means a common
    interior point; shared faces are allowed.
    """
    eps = as_fraction(eps)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    if seq.slits and eps >= _sigma(seq):
        raise ValueError("collar may exit box")
    pool = list(range(len(seq.slits))) if candidates is None else sorted(set(candidates))
    if strategy == "largest":
        pool.sort(key=lambda i: (-seq.slits[i].sidelength, seq.slits[i].generation, seq.slits[i].index, i))
    elif strategy != "first-fit":
        raise ValueError(f"unknown strategy {strategy!r}")
    if not pool:
        return []
    lo, hi = _integer_bounds([collar_box(seq.slits[i], eps) for i in pool])
    chosen: list[int] = []
    taken = np.zeros(len(pool), dtype=bool)
    for k, i in enumerate(pool):
        if taken.any():
            clash = np.all((lo[k] < hi[taken]) & (lo[taken] < hi[k]), axis=1)
            if clash.any():
                continue
        taken[k] = True
        chosen.append(i)
    return chosen


@dataclass(frozen=True, eq=False)
class CollarDecomposition:
    seq: SlitSequence
    epsilon: Fraction
    h: Fraction
    selected: tuple[int, ...]
    labels: np.ndarray
    owner: np.ndarray
    collar_ranges: tuple[tuple[tuple[int, int], ...], ...]
    omitted_ranges: tuple[tuple[tuple[int, int], ...], ...]
    H_R: Fraction
    H_B: Fraction
    H_O: Fraction

    @property
    def shape(self) -> tuple[int, ...]:
        return self.labels.shape

    @property
    def dim(self) -> int:
        return self.labels.ndim

    @property
    def cell_volume(self) -> Fraction:
        return self.h**self.dim

    @property
    def H_collars(self) -> Fraction:
        return self.H_B + self.H_O

    @property
    def omitted_measure(self) -> Fraction:
        return self.H_O

    def cells(self, kind: str, i: int | None = None) -> np.ndarray:
        """Flat cell ids labelled ``kind`` ("R", "B", "O" or "collar"), optionally for selected slit ``i``."""
        lab = self.labels.ravel()
        if kind == "collar":
            mask = lab != R
        else:
            mask = lab == _LETTERS.index(kind)
        if i is not None:
            mask &= self.owner.ravel() == i
        return np.nonzero(mask)[0]

    def counts(self) -> tuple[int, int, int]:
        c = np.bincount(self.labels.ravel(), minlength=3)
        return int(c[R]), int(c[B]), int(c[O])

    def buffer_components(self, i: int) -> list[np.ndarray]:
        """Connected pieces of the buffer of selected slit ``i`` (two in the plane)."""
        from scipy.ndimage import label as nd_label

        mask = (self.labels == B) & (self.owner == i)
        lab, k = nd_label(mask)
        return [np.flatnonzero(lab.ravel() == j) for j in range(1, k + 1)]

    def t_row(self, i: int) -> np.ndarray:
        """Cells of the deterministic top interval: the lowest-index collar row."""
        s = self.seq.slits[self.selected[i]]
        ranges = list(self.collar_ranges[i])
        for b in s.tangent_axes:
            lo, _ = ranges[b]
            ranges[b] = (lo, lo + 1)
        return _box_cells(ranges, self.shape)

    def normal_axis(self, i: int) -> int:
        return self.seq.slits[self.selected[i]].normal_axis


def _box_cells(ranges, shape) -> np.ndarray:
    grids = np.meshgrid(*[np.arange(lo, hi) for lo, hi in ranges], indexing="ij")
    return np.ravel_multi_index(tuple(g.ravel() for g in grids), shape)


def _cell_range(box_bounds, origin, h, what):
    out = []
    for (lo, hi), o in zip(box_bounds, origin):
        a, b = (lo - o) / h, (hi - o) / h
        if a.denominator != 1 or b.denominator != 1:
            raise ValueError(f"resolution misaligned: {what} is not a union of cells at h = {h}")
        out.append((int(a), int(b)))
    return tuple(out)


def decompose(seq: SlitSequence, indices: Sequence[int], eps, h) -> CollarDecomposition:
    """Exact cell partition of the box into residual, buffer and omitted cells."""
    eps, h = as_fraction(eps), as_fraction(h)
    box = seq.box
    origin = [a for a, _ in box.intervals]
    shape = tuple(int((b - a) / h) for a, b in box.intervals)
    for a, b in box.intervals:
        if ((b - a) / h).denominator != 1:
            raise ValueError(f"resolution misaligned: box side {b - a} at h = {h}")
    labels = np.zeros(shape, dtype=np.int8)
    owner = np.full(shape, -1, dtype=np.int32)
    cr, orr = [], []
    H_C = H_O = Fraction(0)
    n = seq.dim
    for k, i in enumerate(indices):
        s = seq.slits[i]
        c = _cell_range(collar_box(s, eps), origin, h, f"collar of slit {i}")
        o = _cell_range(omitted_box(s, eps), origin, h, f"omitted region of slit {i}")
        cs = tuple(slice(a, b) for a, b in c)
        os_ = tuple(slice(a, b) for a, b in o)
        if np.any(labels[cs] != R):
            raise ValueError(f"collars overlap at slit {i}")
        labels[cs] = B
        labels[os_] = O
        owner[cs] = k
        cr.append(c)
        orr.append(o)
        H_C += eps * s.sidelength**n
        H_O += eps * s.sidelength * ((1 - 2 * eps) * s.sidelength) ** (n - 1)
    dec = CollarDecomposition(
        seq=seq,
        epsilon=eps,
        h=h,
        selected=tuple(indices),
        labels=labels,
        owner=owner,
        collar_ranges=tuple(cr),
        omitted_ranges=tuple(orr),
        H_R=box.volume - H_C,
        H_B=H_C - H_O,
        H_O=H_O,
    )
    nR, nB, nO = dec.counts()
    cv = dec.cell_volume
    if (nR * cv, nB * cv, nO * cv) != (dec.H_R, dec.H_B, dec.H_O):
        raise AssertionError("cell counts disagree with the exact measures")
    return dec


def rho_eps(dec: CollarDecomposition, axis: int = 0, upto: int | None = None) -> DensityField:
    """1/(b - a) off the omitted regions (of the first ``upto`` selected slits)."""
    a, b = dec.seq.box.intervals[axis]
    om = dec.labels == O
    if upto is not None:
        om &= (dec.owner >= 0) & (dec.owner < upto)
    return DensityField.indicator(~om, 1.0 / float(b - a), float(dec.cell_volume))


def discretization_slack(h, n: int, width=1) -> float:
    """delta(h) = 2 h kappa_n / (b - a)."""
    return 2 * float(as_fraction(h)) * KAPPA[n] / float(as_fraction(width))


@dataclass(frozen=True)
class AdmissibilityReport:
    min_length: float
    delta: float
    admissible: bool
    witness: np.ndarray | None
    buffer_ok: bool


def _witness_weights(gc: GridComplex, cells: np.ndarray) -> np.ndarray:
    steps = np.linalg.norm(gc.cell_index[cells[1:]] - gc.cell_index[cells[:-1]], axis=1) * gc.hf
    w = np.zeros(cells.size)
    w[:-1] += steps / 2
    w[1:] += steps / 2
    w[0] += gc.hf / 2
    w[-1] += gc.hf / 2
    return w


def _buffer_paid(gc: GridComplex, dec: CollarDecomposition, rho: np.ndarray, cells: np.ndarray, slack: float) -> bool:
    """Every collar visit that reaches an omitted region and enters or leaves off the
    right face pays at least eps l / (b - a) inside the collar, up to ``slack``."""
    w = _witness_weights(gc, cells)
    own = dec.owner.ravel()[cells]
    lab = dec.labels.ravel()[cells]
    width = float(dec.seq.box.side(0))
    j = 0
    while j < cells.size:
        k = own[j]
        if k < 0:
            j += 1
            continue
        e = j
        while e + 1 < cells.size and own[e + 1] == k:
            e += 1
        if (lab[j : e + 1] == O).any():
            a = dec.normal_axis(k)
            last = dec.collar_ranges[k][a][1] - 1
            col = gc.cell_index[cells, a]
            right_in = j > 0 and col[j - 1] > last
            right_out = e + 1 < cells.size and col[e + 1] > last
            if not (right_in and right_out):
                s = dec.seq.slits[dec.selected[k]]
                need = float(dec.epsilon * s.sidelength) / width
                if float(w[j : e + 1] @ rho[cells[j : e + 1]]) < need - slack - 1e-12:
                    return False
        j = e + 1
    return True


def admissibility_min(gc: GridComplex, rho: DensityField, dec: CollarDecomposition | None = None, axis: int = 0) -> AdmissibilityReport:
    """Exact minimum rho-length over the left-to-right cell paths of ``gc``."""
    from .modulus import ConnectOppositeFaces, family_oracle

    length, witness = family_oracle(gc, ConnectOppositeFaces(axis)).certify(rho.values)
    delta = discretization_slack(gc.h, gc.dim, gc.box.side(axis))
    ok = True
    if dec is not None and witness is not None:
        ok = _buffer_paid(gc, dec, rho.values, witness, delta)
    return AdmissibilityReport(length, delta, bool(length >= 1 - delta - 1e-12), witness, ok)


@dataclass(frozen=True)
class BufferBound:
    H_B: Fraction
    factor: Fraction
    bound: Fraction
    identity_holds: bool
    holds: bool


def buffer_bound(dec: CollarDecomposition) -> BufferBound:
    """H(B) = (1 - (1 - 2 eps)^(n-1)) H(collars) <= (1 - (1 - 2 eps)^(n-1)) vol."""
    factor = 1 - (1 - 2 * dec.epsilon) ** (dec.dim - 1)
    bound = factor * dec.seq.box.volume
    return BufferBound(dec.H_B, factor, bound, dec.H_B == factor * dec.H_collars, dec.H_B <= bound)


# ---- curve surgery -------------------------------------------------------------


@dataclass(frozen=True)
class SurgeryResult:
    cells: np.ndarray
    weights: np.ndarray
    cases: tuple[int, ...]
    length_before: float
    length_after: float
    columns_covered: bool

    @property
    def length_ok(self) -> bool:
        return self.length_before >= self.length_after - 1e-12


def _check_in_family(gc: GridComplex, cells: np.ndarray) -> None:
    n = gc.ncells
    key = gc.meta.get("_cell_edge_keys")
    if key is None:
        u, v, _ = gc.cell_edges(True)
        key = gc.meta["_cell_edge_keys"] = set((u * n + v).tolist())
    a, b = np.minimum(cells[:-1], cells[1:]), np.maximum(cells[:-1], cells[1:])
    for x, y in zip(a.tolist(), b.tolist()):
        if x != y and x * n + y not in key:
            raise ValueError("not in Γ_𝒮: path crosses a slit")


def _r_crossings(gc: GridComplex, dec: CollarDecomposition, k: int, cells: np.ndarray) -> np.ndarray:
    """Step positions whose centre segment crosses the right face of collar ``k``."""
    a = dec.normal_axis(k)
    ranges = dec.collar_ranges[k]
    plane = ranges[a][1]
    idx = gc.cell_index[cells]
    c1, c2 = idx[:-1], idx[1:]
    straddle = np.minimum(c1[:, a], c2[:, a]) < plane
    straddle &= np.maximum(c1[:, a], c2[:, a]) >= plane
    mid2 = c1 + c2 + 1
    inside = straddle
    for b in range(gc.dim):
        if b == a:
            continue
        lo, hi = ranges[b]
        inside = inside & (mid2[:, b] >= 2 * lo) & (mid2[:, b] <= 2 * hi)
    return np.nonzero(inside)[0]


def curve_surgery(gc: GridComplex, path, dec: CollarDecomposition, i: int, axis: int = 0) -> SurgeryResult:
    """Modify a left-to-right cell path at the first ``i`` selected collars.

    Per collar: untouched if the path avoids its omitted region; the whole
    collar part replaced by the top interval when the omitted region is met
    before the right face is crossed; otherwise the omitted part is deleted.
    """
    cells = np.asarray(getattr(path, "nodes", path), dtype=np.int64)
    if not 0 <= i <= len(dec.selected):
        raise ValueError(f"level {i} outside [0, {len(dec.selected)}]")
    _check_in_family(gc, cells)
    w = _witness_weights(gc, cells)
    own = dec.owner.ravel()[cells]
    lab = dec.labels.ravel()[cells]
    keep = np.ones(cells.size, dtype=bool)
    extra = []
    cases = []
    for k in range(i):
        visits = np.nonzero((own == k) & (lab == O))[0]
        if visits.size == 0:
            cases.append(1)
            continue
        cross = _r_crossings(gc, dec, k, cells)
        # a crossing at step j lands at position j + 1
        if cross.size == 0 or visits[0] <= cross[0]:
            cases.append(2)
            keep &= own != k
            extra.append(dec.t_row(k))
        else:
            cases.append(3)
            keep &= ~((own == k) & (lab == O))
    rho = rho_eps(dec, axis, upto=i).values
    out_cells = np.concatenate([cells[keep]] + extra) if extra else cells[keep]
    out_w = np.concatenate([w[keep]] + [np.full(t.size, gc.hf) for t in extra]) if extra else w[keep]
    before = float(w @ rho[cells])
    after = float(out_w @ rho[out_cells])
    cols = np.unique(gc.cell_index[out_cells, axis])
    covered = cols.size == gc.shape[axis]
    return SurgeryResult(out_cells, out_w, tuple(cases), before, after, bool(covered))


def random_paths(gc: GridComplex, count: int, seed: int = 0, waypoints: int = 3, axis: int = 0) -> list[np.ndarray]:
    """Left-to-right cell walks from randomly weighted shortest paths through random waypoints."""
    rng = np.random.default_rng(seed)
    u, v, L = gc.cell_edges(True)
    n = gc.ncells
    col = gc.cell_index[:, axis]
    left = np.nonzero(col == 0)[0]
    right = np.nonzero(col == gc.shape[axis] - 1)[0]
    out = []
    for _ in range(count):
        wts = L * rng.exponential(1.0, L.size) + 1e-12
        G = sp.csr_matrix((np.concatenate([wts, wts]), (np.concatenate([u, v]), np.concatenate([v, u]))), shape=(n, n))
        stops = [rng.choice(left)] + list(rng.integers(0, n, rng.integers(0, waypoints + 1))) + [rng.choice(right)]
        walk = [int(stops[0])]
        ok = True
        for s, t in zip(stops, stops[1:]):
            _, pred = dijkstra(G, indices=int(s), return_predecessors=True)
            if t != s and pred[t] < 0:
                ok = False
                break
            leg = [int(t)]
            while leg[-1] != s:
                leg.append(int(pred[leg[-1]]))
            walk.extend(leg[::-1][1:])
        if ok:
            out.append(np.array(walk, dtype=np.int64))
    return out


# ---- residual measure ------------------------------------------------------


def _is_power_of_half(x: Fraction) -> bool:
    return x.numerator == 1 and x.denominator & (x.denominator - 1) == 0 and x.denominator > 1


def residual_product(r: Sequence, eps, n: int, k: int) -> Fraction:
    """prod_{i=0}^{k} (1 - eps r_i^n), exact."""
    eps = as_fraction(eps)
    if not _is_power_of_half(eps):
        raise ValueError("epsilon must be a power of 1/2")
    if len(r) <= k:
        raise ValueError(f"need r_0..r_{k}")
    out = Fraction(1)
    for x in r[: k + 1]:
        out *= 1 - eps * as_fraction(x) ** n
    return out


def residual_measure(seq: SlitSequence, eps, h, k: int, strategy: str = "largest") -> tuple[Fraction, CollarDecomposition]:
    """Exact pixel measure of the box minus the selected collars of generations <= k."""
    level = seq.level_of_generation(k)
    sub = seq.prefix(level)
    sub = sub.with_sigma(_sigma(seq))
    chosen = select_collars(sub, eps, strategy)
    dec = decompose(sub, chosen, eps, h)
    nR, _, _ = dec.counts()
    return nR * dec.cell_volume, dec


def divergence_report(r: Sequence, n: int, K: int, eps=Fraction(1, 4)) -> list[tuple[int, float, float]]:
    """Rows (k, sum_{i<=k} r_i^n, prod_{i<=k} (1 - eps r_i^n))."""
    eps = float(as_fraction(eps))
    rows = []
    s, prod = 0.0, 1.0
    for k in range(K + 1):
        x = float(r[k]) ** n
        s += x
        prod *= 1 - eps * x
        rows.append((k, s, prod))
    return rows


def collar_sweep_csv(seq: SlitSequence, level: int, h, eps_list: Sequence, p: float = 2.0, strategy: str = "largest") -> str:
    """CSV rows (eps, H(R), H(B), H(O), mass, min admissible length) for each eps."""
    from .grid_complex import build_slit_complex

    gc = build_slit_complex(seq, level, h)
    sub = seq.prefix(level).with_sigma(_sigma(seq))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["eps", "H_R", "H_B", "H_O", "mass", "min_length"])
    for eps in eps_list:
        eps = as_fraction(eps)
        dec = decompose(sub, select_collars(sub, eps, strategy), eps, h)
        rho = rho_eps(dec)
        rep = admissibility_min(gc, rho)
        w.writerow([str(eps), str(dec.H_R), str(dec.H_B), str(dec.H_O), f"{rho.mass(p):.12g}", f"{rep.min_length:.12g}"])
    return buf.getvalue()


def label_grid(dec: CollarDecomposition) -> str:
    """Planar decompositions as rows of R/B/O letters, highest row first."""
    if dec.dim != 2:
        raise ValueError("label grids are drawn for planar decompositions only")
    return "\n".join("".join(_LETTERS[v] for v in dec.labels[:, y]) for y in range(dec.shape[1] - 1, -1, -1)) + "\n"
