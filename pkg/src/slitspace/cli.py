"""Command-line front end.

Usage: ``slitspace <command> [--config FILE] [--set key=value ...] [--out FILE]
[--seed N] [--threads N] [--max-cells N]``.

Config files hold one ``key = value`` pair per line; ``#`` starts a comment.
Rationals are written ``p/2^q`` (or ``p/q``), lists are comma separated.
Keys:

    command     optional; must match the subcommand when given
    dim         box dimension for dyadic families (default 2)
    r           dyadic r-sequence, e.g. ``1/2^1, 1/2^1``; a single value repeats
    slits_file  JSON slit sequence (instead of r)
    menger      Menger generation set A, e.g. ``0, 1``
    level       largest slit generation k
    levels      generations to sweep (default 0..level)
    h           resolution, a power of 1/2
    eps         collar thickness list
    p, tol      modulus exponent and relative gap
    strategy    collar selection: largest | first-fit
    modulus     yes | no; add solver upper bounds to collar rows
    n           covering scale 4^-n
    samples     sample count for ahlfors
    radii       ahlfors radii
    target      ahlfors complex: carpet | menger
    fiber_gen   fibers: scan base slits up to this generation (default 0)
    criteria    report: subset of criteria
    save        slits: also write the sequence as JSON here
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from . import __version__
from .slit_config import (
    BoxN,
    SlitSequence,
    dyadic_slits,
    format_rational,
    is_dyadic,
    load_sequence,
    parse_rational,
    save_sequence,
    validate_sequence,
)

log = logging.getLogger("slitspace")

COMMANDS = ("slits", "modulus", "collar", "residual", "fibers", "covering", "ahlfors", "k5", "report")


class ConfigError(ValueError):
    pass


def _rat(v: str) -> Fraction:
    return parse_rational(v)


def _rat_list(v: str) -> list[Fraction]:
    return [parse_rational(x) for x in v.split(",") if x.strip()]


def _int_list(v: str) -> list[int]:
    return [int(x) for x in v.split(",") if x.strip()]


def _yes(v: str) -> bool:
    if v.lower() in ("yes", "true", "1"):
        return True
    if v.lower() in ("no", "false", "0"):
        return False
    raise ValueError(f"expected yes or no, got {v!r}")


SCHEMA: dict[str, Callable[[str], object]] = {
    "command": str,
    "dim": int,
    "r": _rat_list,
    "slits_file": str,
    "menger": _int_list,
    "level": int,
    "levels": _int_list,
    "h": _rat,
    "eps": _rat_list,
    "p": float,
    "tol": float,
    "strategy": str,
    "modulus": _yes,
    "n": int,
    "samples": int,
    "radii": _rat_list,
    "target": str,
    "fiber_gen": int,
    "criteria": _int_list,
    "save": str,
}


@dataclass
class ExperimentConfig:
    command: str
    values: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1
    max_cells: int | None = None

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, key):
        if key not in self.values:
            raise ConfigError(f"missing config key {key!r}")
        return self.values[key]


def parse_config(text: str, origin: str = "config") -> tuple[dict, dict]:
    values, raw = {}, {}
    for no, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        _set(values, raw, body, f"{origin}:{no}")
    return values, raw


def _set(values: dict, raw: dict, body: str, where: str) -> None:
    if "=" not in body:
        raise ConfigError(f"{where}: expected 'key = value'")
    key, val = (x.strip() for x in body.split("=", 1))
    if key not in SCHEMA:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        values[key] = SCHEMA[key](val)
    except ValueError as e:
        raise ConfigError(f"{where}: bad value for {key!r}: {e}") from None
    raw[key] = val


def _validate(cfg: ExperimentConfig) -> None:
    v = cfg.values
    if "command" in v and v["command"] != cfg.command:
        raise ConfigError(f"config is for {v['command']!r}, not {cfg.command!r}")
    h = v.get("h")
    if h is not None and not (h > 0 and h.numerator == 1 and is_dyadic(h)):
        raise ConfigError(f"h = {h} must be a power of 1/2")
    for e in v.get("eps", []):
        if not (0 < e < 1 and is_dyadic(e)):
            raise ConfigError(f"eps = {e} must be dyadic in (0, 1)")
    if v.get("strategy", "largest") not in ("largest", "first-fit"):
        raise ConfigError("strategy must be largest or first-fit")
    if v.get("target", "carpet") not in ("carpet", "menger"):
        raise ConfigError("target must be carpet or menger")
    if "r" in v and "slits_file" in v:
        raise ConfigError("give r or slits_file, not both")


# ---- helpers -----------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return format_rational(x)
    if isinstance(x, float):
        return f"{x:.12g}"
    if isinstance(x, bool):
        return "yes" if x else "no"
    return str(x)


def _caps(cfg: ExperimentConfig) -> dict:
    return {} if cfg.max_cells is None else {"max_cells": cfg.max_cells}


def _sequence(cfg: ExperimentConfig) -> SlitSequence | None:
    if "slits_file" in cfg.values:
        return load_sequence(cfg.values["slits_file"])
    if "r" not in cfg.values:
        return None
    return dyadic_slits(_r_values(cfg), cfg.get("dim", 2), cfg.require("level"))


def _r_values(cfg: ExperimentConfig) -> list[Fraction]:
    r = list(cfg.require("r"))
    return r * (cfg.require("level") + 1) if len(r) == 1 else r


def _levels(cfg: ExperimentConfig) -> list[int]:
    if "levels" in cfg.values:
        return cfg.values["levels"]
    return list(range(cfg.get("level", 0) + 1))


def _complex(cfg: ExperimentConfig, seq: SlitSequence | None, k: int):
    from .grid_complex import build_complex, build_slit_complex

    h = cfg.require("h")
    if seq is None:
        return build_complex(BoxN.unit(cfg.get("dim", 2)), h, [], **_caps(cfg))
    return build_slit_complex(seq, seq.level_of_generation(k), h, **_caps(cfg))


def _with_full_sigma(seq: SlitSequence, k: int) -> SlitSequence:
    return seq.prefix(seq.level_of_generation(k)).with_sigma(validate_sequence(seq).sigma)


def _pmap(cfg: ExperimentConfig, fn, items):
    items = list(items)
    if cfg.threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(cfg.threads) as pool:
        return list(pool.map(fn, items))


def _menger(cfg: ExperimentConfig, doubled: bool = False):
    from .menger import build_menger

    return build_menger(cfg.require("menger"), cfg.require("level"), cfg.require("h"), doubled=doubled, **_caps(cfg))


# ---- commands --------------------------------------------------------------------


def cmd_slits(cfg):
    seq = _sequence(cfg)
    if seq is None:
        raise ConfigError("slits needs r or slits_file")
    rep = validate_sequence(seq)
    if "save" in cfg.values:
        save_sequence(seq.with_sigma(rep.sigma), cfg.values["save"])
    head = [f"sigma = {rep.sigma:.12g}", "units: coordinates in box units"]
    rows = [
        [i, s.generation, s.normal_axis, s.offset, " ".join(format_rational(c) for c in s.center), s.sidelength]
        for i, s in enumerate(seq.slits)
    ]
    return head, ["index", "generation", "normal_axis", "offset", "center", "sidelength"], rows


def cmd_modulus(cfg):
    from .modulus import ConnectOppositeFaces, discrete_modulus

    seq = _sequence(cfg)
    p, tol = cfg.get("p", 2.0), cfg.get("tol", 0.01)

    def one(k):
        m = discrete_modulus(_complex(cfg, seq, k), ConnectOppositeFaces(), p=p, tol=tol)
        return [k, cfg.values["h"], p, m.lower, m.upper, m.value, m.iterations]

    rows = _pmap(cfg, one, _levels(cfg) if seq is not None else [0])
    return ["units: modulus is dimensionless"], ["k", "h", "p", "lower", "upper", "value", "iterations"], rows


def cmd_collar(cfg):
    from .collar import admissibility_min, decompose, discretization_slack, rho_eps, select_collars
    from .modulus import ConnectOppositeFaces, discrete_modulus

    seq = _sequence(cfg)
    if seq is None:
        raise ConfigError("collar needs r or slits_file")
    h = cfg.require("h")
    p = cfg.get("p", 2.0)
    strategy = cfg.get("strategy", "largest")
    want_mod = cfg.get("modulus", False)

    def one(k):
        gc = _complex(cfg, seq, k)
        sub = _with_full_sigma(seq, k)
        mod = discrete_modulus(gc, ConnectOppositeFaces(), p=p, tol=cfg.get("tol", 0.01)).upper if want_mod else ""
        out = []
        for eps in cfg.require("eps"):
            dec = decompose(sub, select_collars(sub, eps, strategy), eps, h)
            rho = rho_eps(dec)
            adm = admissibility_min(gc, rho, dec)
            out.append([k, eps, strategy, len(dec.selected), dec.H_R, dec.H_B, dec.H_O, rho.mass(p),
                        adm.min_length, adm.min_length >= 1 - discretization_slack(h, gc.dim), adm.buffer_ok, mod])
        return out

    rows = [r for block in _pmap(cfg, one, _levels(cfg)) for r in block]
    cols = ["k", "eps", "strategy", "selected", "H_R", "H_B", "H_O", "mass", "min_length", "admissible", "buffer_ok", "modulus_upper"]
    return ["units: measures in box volume units; lengths in box units"], cols, rows


def cmd_residual(cfg):
    from .collar import residual_measure, residual_product

    seq = _sequence(cfg)
    if seq is None or "r" not in cfg.values:
        raise ConfigError("residual needs r")
    eps = cfg.require("eps")[0]
    h = cfg.require("h")
    r = _r_values(cfg)
    n = seq.dim

    def one(k):
        H, _ = residual_measure(seq, eps, h, k, cfg.get("strategy", "largest"))
        prod = residual_product(r, eps, n, k)
        return [k, H, prod, float(H) / float(prod), float(sum(x**n for x in r[: k + 1]))]

    rows = _pmap(cfg, one, _levels(cfg))
    return ["units: measures in box volume units"], ["k", "H_R", "product", "ratio", "sum_r_n"], rows


def cmd_fibers(cfg):
    from .menger import _slit_points, classify, fiber_predicate, fiber_table

    mc = _menger(cfg, doubled=True)
    t = fiber_table(mc.gc)
    top = cfg.get("fiber_gen", 0)
    rows = []
    for j in mc.generations:
        if j > top:
            continue
        for a in range(4**j):
            for b in range(4**j):
                for (x, y, side, layer), p in _slit_points(mc, j, a, b):
                    if layer:
                        continue
                    bt, e = t.invariants(mc.gc.resolve(p))
                    pred = fiber_predicate(mc.A, x, y, mc.k)
                    rows.append([x, y, "" if side is None else side, bt, e, classify(bt, e), 2 * pred.cycles + 1 if pred.cyclic else 1])
    return ["fibers of the top-bottom double over base slit vertices"], ["x", "y", "side", "betti", "endpoints", "label", "predicted_betti"], rows


def cmd_covering(cfg):
    from .menger import covering_order, cube_dichotomy
    from .grid_complex import KAPPA

    mc = _menger(cfg)
    n = cfg.get("n", 1)
    eps = cfg.get("eps", [Fraction(1, 4 ** (n + 1) * 4)])[0]
    cov = covering_order(mc, n, eps)
    rows, ok = cube_dichotomy(mc, n, slack=KAPPA[3] * mc.gc.hf)
    head = [f"max order = {cov.max_order}", f"separated = {'yes' if ok else 'no'}", "units: distances in box units"]
    out = [[" ".join(map(str, m)), " ".join(map(str, mm)), kind, val] for m, mm, kind, val in rows]
    return head, ["cube", "other", "relation", "distance"], out


def cmd_ahlfors(cfg):
    from .grid_complex import ahlfors_scan, build_slit_complex, double

    if cfg.get("target", "carpet") == "menger":
        gc = _menger(cfg).gc
    else:
        seq = _sequence(cfg)
        if seq is None:
            raise ConfigError("ahlfors on a carpet needs r or slits_file")
        gc = double(build_slit_complex(seq, len(seq.slits), cfg.require("h"), **_caps(cfg)))
    radii = [float(r) for r in cfg.get("radii", [Fraction(1, 8), Fraction(1, 4)])]
    rep = ahlfors_scan(gc, cfg.get("samples", 200), radii, cfg.seed)
    head = [f"min ratio = {rep.min_ratio:.12g}", f"max ratio = {rep.max_ratio:.12g}", f"spread = {rep.spread:.12g}", "units: mu(B) / r^n"]
    return head, ["vertex", "radius", "ratio"], [list(s) for s in rep.samples]


def cmd_k5(cfg):
    from .menger import k5_witness

    paths = k5_witness(_menger(cfg))
    rows = [[name, len(p.nodes), p.length] for name, p in sorted(paths.items())]
    return ["ten internally disjoint paths; lengths in box units"], ["edge", "vertices", "length"], rows


def cmd_report(cfg):
    from . import acceptance

    res = acceptance.run(cfg.get("criteria"), log=lambda line: print(line, file=sys.stderr))
    rows = [[r.number, r.name, r.passed, r.detail] for r in res]
    cfg.values["_failed"] = not all(r.passed for r in res)
    return ["acceptance suite"], ["criterion", "name", "passed", "detail"], rows


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def render(cfg: ExperimentConfig, head, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# slitspace {cfg.command} {__version__}\n")
    buf.write(f"# seed = {cfg.seed}\n")
    for k in sorted(cfg.raw):
        buf.write(f"# {k} = {cfg.raw[k]}\n")
    for line in head:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slitspace", description="Slit carpets, slit Menger complexes and discrete modulus.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    ap.add_argument("--out", help="CSV output path (default stdout)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--max-cells", type=int, default=None)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        values, raw = {}, {}
        if args.config:
            with open(args.config) as fh:
                values, raw = parse_config(fh.read(), args.config)
        for i, item in enumerate(args.set, 1):
            _set(values, raw, item, f"--set[{i}]")
        if args.threads < 1:
            raise ConfigError("--threads must be positive")
        if args.max_cells is not None and args.max_cells < 1:
            raise ConfigError("--max-cells must be positive")
        cfg = ExperimentConfig(args.command, values, raw, args.seed, args.threads, args.max_cells)
        _validate(cfg)
        head, cols, rows = HANDLERS[args.command](cfg)
    except (ConfigError, ValueError, OSError, MemoryError) as e:
        print(f"slitspace: error: {e}", file=sys.stderr)
        return 2
    text = render(cfg, head, cols, rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 1 if cfg.values.get("_failed") else 0


if __name__ == "__main__":
    sys.exit(main())
