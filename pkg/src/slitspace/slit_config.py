"""Boxes, slits and slit sequences with exact dyadic coordinates.

Axes are numbered from 0.  A slit is a closed axis-perpendicular (n-1)-cube
``{x_a = offset} x prod [c_b - l/2, c_b + l/2]`` where ``a`` is its normal axis
and ``b`` runs over the remaining axes in increasing order.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "as_fraction",
    "format_rational",
    "parse_rational",
    "is_dyadic",
    "BoxN",
    "ClosedBox",
    "BoxBoundary",
    "Slit",
    "SlitSequence",
    "DyadicCube",
    "SeparationReport",
    "ScalesReport",
    "relative_distance",
    "validate_sequence",
    "dyadic_slits",
    "all_scales_check",
    "menger_slit_faces",
    "save_sequence",
    "load_sequence",
    "dumps_sequence",
    "loads_sequence",
]

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(?:2\^(\d+)|(\d+)))?\s*$")


def as_fraction(x) -> Fraction:
    """Convert ints, Fractions, binary floats or rational strings exactly."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise ValueError(f"non-finite coordinate {x!r}")
        return Fraction(float(x))
    return Fraction(x)


def is_dyadic(x) -> bool:
    d = as_fraction(x).denominator
    return d & (d - 1) == 0


def format_rational(x) -> str:
    """Serialize as ``"p/2^q"`` (dyadic) or ``"p/q"`` otherwise."""
    x = as_fraction(x)
    d = x.denominator
    if d & (d - 1) == 0:
        return f"{x.numerator}/2^{d.bit_length() - 1}"
    return f"{x.numerator}/{d}"


def parse_rational(s: str) -> Fraction:
    m = _RATIONAL_RE.match(s)
    if m is None:
        raise ValueError(f"not a rational literal: {s!r}")
    num = int(m.group(1))
    if m.group(2) is not None:
        return Fraction(num, 2 ** int(m.group(2)))
    if m.group(3) is not None:
        return Fraction(num, int(m.group(3)))
    return Fraction(num)


def _frac_tuple(xs: Iterable) -> tuple[Fraction, ...]:
    return tuple(as_fraction(x) for x in xs)


@dataclass(frozen=True)
class ClosedBox:
    """Closed axis-aligned box; degenerate sides are allowed."""

    bounds: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        b = tuple((as_fraction(lo), as_fraction(hi)) for lo, hi in self.bounds)
        for lo, hi in b:
            if lo > hi:
                raise ValueError(f"empty box side [{lo}, {hi}]")
        object.__setattr__(self, "bounds", b)

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def diameter(self) -> float:
        return math.sqrt(float(sum((hi - lo) ** 2 for lo, hi in self.bounds)))

    def distance_sq(self, other: "ClosedBox") -> Fraction:
        total = Fraction(0)
        for (a0, a1), (b0, b1) in zip(self.bounds, other.bounds):
            gap = max(b0 - a1, a0 - b1, Fraction(0))
            total += gap * gap
        return total

    def intersects_open(self, other: "ClosedBox") -> bool:
        """True when the open interiors overlap (face contact does not count)."""
        return all(a0 < b1 and b0 < a1 for (a0, a1), (b0, b1) in zip(self.bounds, other.bounds))

    def contains(self, other: "ClosedBox") -> bool:
        return all(a0 <= b0 and b1 <= a1 for (a0, a1), (b0, b1) in zip(self.bounds, other.bounds))

    def scaled(self, lam) -> "ClosedBox":
        lam = as_fraction(lam)
        return ClosedBox(tuple((lo * lam, hi * lam) for lo, hi in self.bounds))


@dataclass(frozen=True)
class BoxN:
    """Open box ``prod (a_i, b_i)``."""

    intervals: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        iv = tuple((as_fraction(a), as_fraction(b)) for a, b in self.intervals)
        if len(iv) < 2:
            raise ValueError("box dimension must be at least 2")
        for a, b in iv:
            if not a < b:
                raise ValueError(f"degenerate interval ({a}, {b})")
        object.__setattr__(self, "intervals", iv)

    @classmethod
    def unit(cls, n: int) -> "BoxN":
        return cls(tuple((Fraction(0), Fraction(1)) for _ in range(n)))

    @property
    def dim(self) -> int:
        return len(self.intervals)

    @property
    def volume(self) -> Fraction:
        v = Fraction(1)
        for a, b in self.intervals:
            v *= b - a
        return v

    @property
    def center(self) -> tuple[Fraction, ...]:
        return tuple((a + b) / 2 for a, b in self.intervals)

    def side(self, axis: int) -> Fraction:
        a, b = self.intervals[axis]
        return b - a

    def closure(self) -> ClosedBox:
        return ClosedBox(self.intervals)

    @property
    def diameter(self) -> float:
        return self.closure().diameter


@dataclass(frozen=True)
class BoxBoundary:
    """The boundary sphere of a box, as a point-set descriptor."""

    box: BoxN

    @property
    def diameter(self) -> float:
        return self.box.diameter


@dataclass(frozen=True)
class Slit:
    normal_axis: int
    offset: Fraction
    center: tuple[Fraction, ...]
    sidelength: Fraction
    generation: int = 0
    index: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "offset", as_fraction(self.offset))
        object.__setattr__(self, "center", _frac_tuple(self.center))
        object.__setattr__(self, "sidelength", as_fraction(self.sidelength))
        object.__setattr__(self, "index", tuple(int(i) for i in self.index))
        if self.sidelength <= 0:
            raise ValueError("slit sidelength must be positive")
        if not 0 <= self.normal_axis <= len(self.center):
            raise ValueError(f"normal axis {self.normal_axis} out of range")

    @property
    def dim(self) -> int:
        return len(self.center) + 1

    @property
    def tangent_axes(self) -> tuple[int, ...]:
        return tuple(b for b in range(self.dim) if b != self.normal_axis)

    @property
    def diameter(self) -> float:
        return float(self.sidelength) * math.sqrt(self.dim - 1)

    def as_box(self) -> ClosedBox:
        half = self.sidelength / 2
        bounds = []
        tangent = iter(self.center)
        for b in range(self.dim):
            if b == self.normal_axis:
                bounds.append((self.offset, self.offset))
            else:
                c = next(tangent)
                bounds.append((c - half, c + half))
        return ClosedBox(tuple(bounds))

    def scaled(self, lam) -> "Slit":
        lam = as_fraction(lam)
        return replace(
            self,
            offset=self.offset * lam,
            center=tuple(c * lam for c in self.center),
            sidelength=self.sidelength * lam,
        )


def _sort_key(s: Slit):
    return (-s.sidelength, s.generation, s.index)


@dataclass(frozen=True)
class SlitSequence:
    box: BoxN
    slits: tuple[Slit, ...] = ()
    sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "slits", tuple(self.slits))
        closure = self.box.closure()
        for s in self.slits:
            if s.dim != self.box.dim:
                raise ValueError("slit dimension does not match box")
            if not closure.contains(s.as_box()):
                raise ValueError(f"slit {s} leaves the box")
        for a, b in zip(self.slits, self.slits[1:]):
            if a.sidelength < b.sidelength:
                raise ValueError("slits must be sorted by nonincreasing sidelength")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    def __len__(self) -> int:
        return len(self.slits)

    @property
    def dim(self) -> int:
        return self.box.dim

    def prefix(self, k: int) -> "SlitSequence":
        if not 0 <= k <= len(self.slits):
            raise ValueError(f"level {k} outside [0, {len(self.slits)}]")
        return replace(self, slits=self.slits[:k])

    def level_of_generation(self, g: int) -> int:
        """Number of leading slits whose generation is at most ``g``."""
        return sum(1 for s in self.slits if s.generation <= g)

    def with_sigma(self, sigma: float) -> "SlitSequence":
        return replace(self, sigma=float(sigma))

    def scaled(self, lam) -> "SlitSequence":
        lam = as_fraction(lam)
        box = BoxN(tuple((a * lam, b * lam) for a, b in self.box.intervals))
        return SlitSequence(box, tuple(s.scaled(lam) for s in self.slits), self.sigma)


@dataclass(frozen=True)
class DyadicCube:
    dim: int
    generation: int
    index: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "index", tuple(int(i) for i in self.index))
        if len(self.index) != self.dim or self.generation < 0:
            raise ValueError("bad dyadic cube")
        if any(not 0 <= i < 2**self.generation for i in self.index):
            raise ValueError("dyadic index out of range")

    @property
    def sidelength(self) -> Fraction:
        return Fraction(1, 2**self.generation)

    @property
    def center(self) -> tuple[Fraction, ...]:
        l = self.sidelength
        return tuple(l * i + l / 2 for i in self.index)

    def as_box(self) -> ClosedBox:
        l = self.sidelength
        return ClosedBox(tuple((l * i, l * (i + 1)) for i in self.index))

    def similarity(self, point: Sequence) -> tuple[Fraction, ...]:
        """T_Q: the orientation-preserving similarity of [0,1]^n onto Q."""
        l = self.sidelength
        return tuple(l * i + l * as_fraction(x) for i, x in zip(self.index, point))

    @classmethod
    def all(cls, dim: int, generation: int):
        for idx in itertools.product(range(2**generation), repeat=dim):
            yield cls(dim, generation, idx)


def _as_box(E) -> ClosedBox:
    if isinstance(E, ClosedBox):
        return E
    if isinstance(E, Slit):
        return E.as_box()
    if isinstance(E, DyadicCube):
        return E.as_box()
    if isinstance(E, BoxN):
        return E.closure()
    raise TypeError(f"unsupported point-set descriptor {type(E).__name__}")


def _boundary_distance(box: ClosedBox, outer: BoxN) -> Fraction:
    # box lies inside the closed outer box
    return min(
        min(lo - a, b - hi) for (lo, hi), (a, b) in zip(box.bounds, outer.intervals)
    )


def relative_distance(E, F) -> float:
    """dist(E, F) / min(diam E, diam F) with Euclidean distance and diameter.

    ``E`` and ``F`` are boxes, slits, dyadic cubes or a :class:`BoxBoundary`.
    """
    dE, dF = E.diameter, F.diameter
    if dE <= 0 or dF <= 0:
        raise ValueError("degenerate set")
    if isinstance(E, BoxBoundary) and isinstance(F, BoxBoundary):
        return 0.0 if E == F else math.nan
    if isinstance(F, BoxBoundary):
        E, F = F, E
    if isinstance(E, BoxBoundary):
        inner = _as_box(F)
        outer = E.box
        inside = outer.closure().contains(inner)
        dist = float(_boundary_distance(inner, outer)) if inside else 0.0
        return dist / min(dE, dF)
    return math.sqrt(float(_as_box(E).distance_sq(_as_box(F)))) / min(dE, dF)


@dataclass(frozen=True)
class SeparationReport:
    min_pairwise: float
    min_boundary: float
    sorted_ok: bool
    disjoint_ok: bool
    truncation_generation: int | None
    count: int

    @property
    def sigma(self) -> float:
        return min(self.min_pairwise, self.min_boundary)


def _integer_boxes(seq: SlitSequence):
    """Slit boxes as int64 arrays over a common denominator."""
    boxes = [s.as_box().bounds for s in seq.slits]
    denom = 1
    for b in boxes:
        for lo, hi in b:
            denom = math.lcm(denom, lo.denominator, hi.denominator)
    for a, b in seq.box.intervals:
        denom = math.lcm(denom, a.denominator, b.denominator)
    arr = np.array([[[int(lo * denom), int(hi * denom)] for lo, hi in b] for b in boxes], dtype=np.int64)
    outer = np.array([[int(a * denom), int(b * denom)] for a, b in seq.box.intervals], dtype=np.int64)
    if denom > 2**24:
        raise ValueError("coordinates too fine for exact integer separation test")
    return arr.reshape(len(boxes), seq.dim, 2), outer


def validate_sequence(seq: SlitSequence) -> SeparationReport:
    """Minimal pairwise and boundary relative distances plus condition flags.

    Use ``seq.with_sigma(report.sigma)`` to obtain the validated sequence.
    """
    m = len(seq.slits)
    sorted_ok = all(a.sidelength >= b.sidelength for a, b in zip(seq.slits, seq.slits[1:]))
    gens = [s.generation for s in seq.slits]
    trunc = max(gens) if gens else None
    if m == 0:
        return SeparationReport(math.inf, math.inf, sorted_ok, True, trunc, 0)
    boxes, outer = _integer_boxes(seq)
    lo, hi = boxes[:, :, 0], boxes[:, :, 1]
    diam_sq = ((hi - lo) ** 2).sum(axis=1)
    bdist = np.minimum(lo - outer[None, :, 0], outer[None, :, 1] - hi).min(axis=1)
    min_boundary = float(np.min(np.maximum(bdist, 0) / np.sqrt(diam_sq)))
    best_sq = math.inf
    disjoint = True
    for i in range(m - 1):
        gap = np.maximum(np.maximum(lo[i + 1:] - hi[i], lo[i] - hi[i + 1:]), 0)
        d_sq = (gap**2).sum(axis=1)
        if np.any(d_sq == 0):
            disjoint = False
        ratio = d_sq / np.minimum(diam_sq[i], diam_sq[i + 1:])
        best_sq = min(best_sq, float(ratio.min()))
    return SeparationReport(
        math.sqrt(best_sq), min_boundary, sorted_ok, disjoint, trunc, m
    )


def dyadic_slits(r: Sequence, n: int, max_gen: int) -> SlitSequence:
    """The dyadic family S_r truncated at generation ``max_gen``."""
    if n < 2:
        raise ValueError("dimension must be at least 2")
    rs = [as_fraction(x) for x in r]
    if len(rs) <= max_gen:
        raise ValueError(f"need r_0..r_{max_gen}, got {len(rs)} values")
    for i, x in enumerate(rs):
        if not 0 <= x < 1:
            raise ValueError(f"r_{i} = {x} outside [0, 1)")
    slits = []
    for g in range(max_gen + 1):
        if rs[g] == 0:
            continue
        length = rs[g] / 2**g
        for cube in DyadicCube.all(n, g):
            c = cube.center
            slits.append(Slit(0, c[0], c[1:], length, generation=g, index=cube.index))
    slits.sort(key=_sort_key)
    return SlitSequence(BoxN.unit(n), tuple(slits))


@dataclass(frozen=True)
class ScalesReport:
    passed: bool
    worst_ratio: float
    worst_ball: tuple[tuple[float, ...], float] | None
    r_min: float
    samples: int


def all_scales_check(
    seq: SlitSequence, C: float, samples: int, r_min: float | None = None, seed: int = 0
) -> ScalesReport:
    """Sample balls B(x, r) inside the box and look for a slit s in B with diam s >= r/C.

    Radii are log-uniform in ``[r_min, min side / 2]``; ``r_min`` defaults to four
    times the smallest slit sidelength (the truncation scale).
    """
    if C < 1:
        raise ValueError("C must be at least 1")
    if not seq.slits:
        return ScalesReport(False, math.inf, None, r_min or 0.0, samples)
    if r_min is None:
        r_min = 4 * float(min(s.sidelength for s in seq.slits))
    lo_box = np.array([float(a) for a, _ in seq.box.intervals])
    hi_box = np.array([float(b) for _, b in seq.box.intervals])
    r_max = float(min(hi_box - lo_box)) / 2
    if r_min > r_max:
        raise ValueError("r_min exceeds the largest ball that fits in the box")
    slo = np.array([[float(lo) for lo, _ in s.as_box().bounds] for s in seq.slits])
    shi = np.array([[float(hi) for _, hi in s.as_box().bounds] for s in seq.slits])
    diam = np.array([s.diameter for s in seq.slits])
    rng = np.random.default_rng(seed)
    worst, worst_ball = 0.0, None
    for _ in range(samples):
        r = math.exp(rng.uniform(math.log(r_min), math.log(r_max)))
        x = rng.uniform(lo_box + r, hi_box - r)
        far = np.sqrt((np.maximum(np.abs(slo - x), np.abs(shi - x)) ** 2).sum(axis=1))
        inside = far <= r
        ratio = r / diam[inside].max() if inside.any() else math.inf
        if ratio > worst:
            worst, worst_ball = float(ratio), (tuple(x.tolist()), r)
    return ScalesReport(bool(worst <= C), float(worst), worst_ball, float(r_min), samples)


MENGER_FACES = ("z=0", "y=0", "x=0")


def menger_slit_faces(A: Iterable[int], max_gen: int) -> dict[str, SlitSequence]:
    """Face slit families of the slit Menger space M(A).

    Every face carries the same planar family (normal axis 0 in face coordinates):
    for i in A, slits at x = (2k+1)/(2*4^i) with |y - (2l+1)/(2*4^i)| <= 4^-(i+1).
    Face coordinates are (x, y) on z=0, (x, z) on y=0 and (y, z) on x=0.
    """
    gens = sorted(set(int(i) for i in A))
    if any(i < 0 or i > max_gen for i in gens):
        raise ValueError(f"A must lie in [0, {max_gen}]")
    slits = []
    for i in gens:
        q = Fraction(1, 4**i)
        for k, l in itertools.product(range(4**i), repeat=2):
            slits.append(
                Slit(0, q * k + q / 2, (q * l + q / 2,), q / 2, generation=i, index=(k, l))
            )
    seq = SlitSequence(BoxN.unit(2), tuple(slits))
    return {face: seq for face in MENGER_FACES}


# ---- serialization -------------------------------------------------------------


def _seq_to_obj(seq: SlitSequence) -> dict:
    return {
        "dim": seq.dim,
        "box": [[format_rational(a), format_rational(b)] for a, b in seq.box.intervals],
        "sigma": seq.sigma,
        "entries": [
            {
                "axis": s.normal_axis,
                "offset": format_rational(s.offset),
                "center": [format_rational(c) for c in s.center],
                "sidelength": format_rational(s.sidelength),
                "generation": s.generation,
                "index": list(s.index),
            }
            for s in seq.slits
        ],
    }


def dumps_sequence(seq: SlitSequence) -> str:
    return json.dumps(_seq_to_obj(seq), indent=1) + "\n"


def loads_sequence(text: str) -> SlitSequence:
    obj = json.loads(text)
    try:
        box = BoxN(tuple((parse_rational(a), parse_rational(b)) for a, b in obj["box"]))
        if int(obj["dim"]) != box.dim:
            raise ValueError("dim does not match box")
        slits = tuple(
            Slit(
                int(e["axis"]),
                parse_rational(e["offset"]),
                tuple(parse_rational(c) for c in e["center"]),
                parse_rational(e["sidelength"]),
                int(e.get("generation", 0)),
                tuple(e.get("index", ())),
            )
            for e in obj["entries"]
        )
    except KeyError as exc:
        raise ValueError(f"slit file missing key {exc}") from None
    return SlitSequence(box, slits, float(obj.get("sigma", 0.0)))


def save_sequence(seq: SlitSequence, path) -> None:
    Path(path).write_text(dumps_sequence(seq))


def load_sequence(path) -> SlitSequence:
    return loads_sequence(Path(path).read_text())
