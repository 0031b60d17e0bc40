"""Command-line interface: ``wfscope analyze | map | corpus | emit-plot | audit``.

Exit codes for ``analyze``: 0 Regular, 10 Singular, 11 Inconclusive,
2 usage or input error. Configuration precedence is flags, then the JSON
file named by ``--config`` or ``$WFSCOPE_CONFIG``, then built-in defaults.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import fields, replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import corpus as corpus_mod
from .core import PhasePoint, ShellPartition, WindowSpec
from .decay import decay_exponent, shell_sup, sobolev_cone_norm
from .cones import shell_cone_indices
from .detectors import (DetectorConfig, Verdict, _table, seminorm_uniformity_audit, wf_map,
                        wf_smooth_detect, wf_sobolev_detect, window_robustness_audit)
from .io import SignalFormatError, format_report, read_signal, write_signal

EXIT = {Verdict.REGULAR: 0, Verdict.SINGULAR: 10, Verdict.INCONCLUSIVE: 11}
EXIT_USAGE = 2
EXIT_FINDING = 1
ENV_CONFIG = "WFSCOPE_CONFIG"

# config-file keys and the DetectorConfig fields they set
_CONFIG_KEYS = {f.name for f in fields(DetectorConfig)} - {"s"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------

def _floats(text: str, what: str) -> List[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"could not parse {what} {text!r}") from None


def parse_points(text: str, dim: int, what: str = "--xs") -> List[tuple]:
    """``"a,b,c"`` in 1D; ``"x1,y1;x2,y2"`` in 2D."""
    if dim == 1:
        return [(v,) for v in _floats(text, what)]
    pts = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        v = _floats(chunk, what)
        if len(v) != 2:
            raise UsageError(f"{what}: expected x,y pairs separated by ';', got {chunk!r}")
        pts.append(tuple(v))
    return pts


def parse_directions(text: Optional[str], dim: int) -> List[tuple]:
    if text is None or text in ("both", "compass"):
        if dim == 1:
            return [(1.0,), (-1.0,)]
        return list(corpus_mod.COMPASS)
    pts = parse_points(text, dim, "--dirs")
    for p in pts:
        if not any(p):
            raise UsageError("directions must be nonzero")
    return pts


def parse_point(text: str, dim: int, what: str) -> tuple:
    pts = parse_points(text, dim, what)
    if len(pts) != 1:
        raise UsageError(f"{what} takes exactly one point")
    return pts[0]


def load_config_file(path: Optional[str]) -> dict:
    path = path or os.environ.get(ENV_CONFIG)
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise UsageError(f"cannot read config {path}: {err}") from None
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return data


def _coerce(key: str, value):
    if key == "window":
        return value if isinstance(value, WindowSpec) else WindowSpec.parse(str(value))
    if key == "shells":
        return None if value is None else (value if isinstance(value, ShellPartition)
                                           else ShellPartition.parse(str(value)))
    if key in ("shell_count", "k_stride", "threads"):
        return int(value)
    if key == "rapid_override":
        return bool(value)
    return None if value is None else float(value)


def build_config(args) -> DetectorConfig:
    """Defaults, overridden by the config file, overridden by flags."""
    merged = dict(load_config_file(getattr(args, "config", None)))
    flag_map = {"radius": "k_radius", "cone_angle": "cone_angle", "window": "window", "shells": "shells",
                "n_threshold": "n_threshold", "rho_tol": "rho_tol", "threads": "threads",
                "max_frequency": "max_frequency", "calibration": "calibration"}
    for flag, key in flag_map.items():
        v = getattr(args, flag, None)
        if v is not None:
            merged[key] = v
    try:
        kw = {k: _coerce(k, v) for k, v in merged.items()}
        cfg = DetectorConfig(**kw)
    except (TypeError, ValueError) as err:
        raise UsageError(f"invalid configuration: {err}") from None
    if not 0 < cfg.cone_angle <= math.pi:
        raise UsageError("--cone-angle must lie in (0, pi]")
    if cfg.k_radius < 0:
        raise UsageError("--radius must be nonnegative")
    if cfg.threads < 1:
        raise UsageError("--threads must be >= 1")
    return cfg


def _load(path: str):
    try:
        return read_signal(path)
    except SignalFormatError as err:
        raise UsageError(f"{path}: {err}") from None
    except OSError as err:
        raise UsageError(f"{path}: {err.strerror}") from None


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _mode_s(args):
    if args.s is not None and args.mode != "sobolev":
        raise UsageError("--s requires --mode sobolev")
    if args.mode == "sobolev" and args.s is None:
        raise UsageError("--mode sobolev requires --s")
    return args.s


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_analyze(args) -> int:
    s = _mode_s(args)
    cfg = build_config(args)
    f = _load(args.signal)
    d = f.grid.dimension
    x = parse_point(args.point, d, "--point")
    u = parse_point(args.direction, d, "--direction") if args.direction else ((1.0,) if d == 1 else (1.0, 0.0))
    p = PhasePoint(x, u)
    v = wf_smooth_detect(f, p, cfg) if s is None else wf_sobolev_detect(f, p, s, cfg)
    _emit(format_report([v], cfg.as_dict(), cfg.digest(), f.label), args.out)
    return EXIT[v.verdict]


def cmd_map(args) -> int:
    s = _mode_s(args)
    cfg = replace(build_config(args), s=s)
    f = _load(args.signal)
    d = f.grid.dimension
    xs = parse_points(args.xs or "", d)
    if not xs:
        raise UsageError("--xs is empty")
    dirs = parse_directions(args.dirs, d)
    verdicts = wf_map(f, xs, dirs, cfg)
    _emit(format_report(verdicts, cfg.as_dict(), cfg.digest(), f.label), args.out)
    return 0


def cmd_corpus(args) -> int:
    if args.action == "list":
        for m in corpus_mod.corpus_members():
            print(f"{m.name}\td={m.dimension}\t{m.notes}")
        return 0
    if args.action == "export":
        if not args.member or not args.path:
            raise UsageError("corpus export needs MEMBER and PATH")
        try:
            m = corpus_mod.get_member(args.member)
        except KeyError as err:
            raise UsageError(str(err.args[0])) from None
        write_signal(corpus_mod.sample(m), args.path, args.format)
        return 0
    # validate
    cfg = build_config(args)
    if args.member:
        try:
            members = [corpus_mod.get_member(args.member)]
        except KeyError as err:
            raise UsageError(str(err.args[0])) from None
    else:
        members = corpus_mod.corpus_members()
    ok = True
    for m in members:
        for row in corpus_mod.validate_against_ground_truth(m, cfg):
            print(json.dumps(row.record(), sort_keys=True, default=str))
            ok &= row.passed
    return 0 if ok else EXIT_FINDING


PLOT_HELP = """\
CSV columns of emit-plot:
  kind        'shell' (decay fit) or 'tail' (Sobolev partial sums)
  s           Sobolev order for 'tail' rows, empty for 'shell' rows
  j           shell index
  radius      shell midpoint R_j (shell) or outer radius R_J (tail)
  log_m       log of the shell maximum M_j (shell)
  fit         fitted log M at R_j (shell)
  partial     sup over K of the partial sum S_J (tail)
  increment   max over K of S_J - S_(J-1) (tail)
"""


def cmd_emit_plot(args) -> int:
    cfg = build_config(args)
    f = _load(args.signal)
    d = f.grid.dimension
    x = parse_point(args.point, d, "--point")
    u = parse_point(args.direction, d, "--direction") if args.direction else ((1.0,) if d == 1 else (1.0, 0.0))
    orders = _floats(args.s, "--s") if args.s else []
    try:
        tab = _table(f, x, cfg)
        part = cfg.partition(f.grid)
        cone = cfg.cone(u)
        stats = shell_sup(tab, shell_cone_indices(tab.freqs, cone, part))
        fit = decay_exponent(stats, cfg.floor)
    except ValueError as err:
        raise UsageError(str(err)) from None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "s", "j", "radius", "log_m", "fit", "partial", "increment"])
    mids = part.midpoints
    line = fit.line(mids) if math.isfinite(fit.exponent) else np.full(len(mids), np.nan)
    for j in range(part.count):
        lm = math.log(stats.sups[j]) if stats.sups[j] > 0 else float("-inf")
        w.writerow(["shell", "", j, repr(float(mids[j])), repr(lm), repr(float(line[j])), "", ""])
    for s in orders:
        tail = sobolev_cone_norm(tab, cone, s, part)
        for j in range(part.count):
            w.writerow(["tail", repr(float(s)), j, repr(float(tail.radii[j])), "", "",
                        repr(float(tail.sup[j])), repr(float(tail.increments[j]))])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_audit(args) -> int:
    cfg = build_config(args)
    f = _load(args.signal)
    d = f.grid.dimension
    x = parse_point(args.point, d, "--point")
    u = parse_point(args.direction, d, "--direction") if args.direction else ((1.0,) if d == 1 else (1.0, 0.0))
    p = PhasePoint(x, u)
    if args.kind == "robustness":
        wins = [WindowSpec.parse(w) for w in (args.windows or "bump:0.5,bump:1,bump:2").split(",")]
        try:
            r = window_robustness_audit(f, p, cfg, wins, s=args.s)
        except ValueError as err:
            raise UsageError(str(err)) from None
        out = {"audit": "robustness", "x": list(x), "direction": list(p.direction), "s": args.s,
               "windows": list(r.windows), "verdicts": [v.value for v in r.verdicts],
               "exponents": list(r.exponents), "thresholds": list(r.thresholds),
               "agreement": r.agreement, "dispersion": r.dispersion, "config_hash": cfg.digest()}
        ok = r.agreement
    else:
        try:
            r = seminorm_uniformity_audit(f, p, cfg, m=args.m, k=args.k, n=args.n, seed=args.seed)
        except ValueError as err:
            print(f"wfscope: {err}", file=sys.stderr)
            return EXIT_USAGE
        out = {"audit": "seminorm", "x": list(x), "direction": list(p.direction), "seed": args.seed,
               "n": args.n, "k": args.k, "windows": list(r.windows), "seminorms": list(r.seminorms),
               "ratios": list(r.ratios), "family_max": r.family_max, "median": r.median,
               "growth_flag": r.growth_flag, "config_hash": cfg.digest()}
        ok = (not r.growth_flag) and math.isfinite(r.family_max) and r.family_max <= 10 * r.median
    _emit(json.dumps(out, sort_keys=True, default=str) + "\n", args.out)
    return 0 if ok else EXIT_FINDING


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("detector configuration")
    g.add_argument("--radius", type=float, help="K ball radius around the point")
    g.add_argument("--cone-angle", type=float, help="scan cone half-angle theta' (inner cone uses theta'/2)")
    g.add_argument("--window", help="window as {bump,bspline}:<r>, e.g. bump:0.375 or bspline3:0.5")
    g.add_argument("--shells", help="dyadic shells as <R0>:<J>")
    g.add_argument("--n-threshold", type=float, help="absolute decay order counted as rapid")
    g.add_argument("--calibration", type=float, help="fraction of the window's own decay counted as rapid")
    g.add_argument("--rho-tol", type=float, help="tail ratio tolerance")
    g.add_argument("--max-frequency", type=float, help="upper frequency limit for shells")
    g.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")
    g.add_argument("--config", help=f"JSON config file (default: ${ENV_CONFIG})")


def _point_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--point", required=True, help="position x (x,y in 2D); use --point=-1 for negatives")
    p.add_argument("--direction", help="direction (+1/-1 in 1D, x,y in 2D)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wfscope", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="classify one phase-space point")
    p.add_argument("signal")
    _point_flags(p)
    p.add_argument("--mode", choices=("smooth", "sobolev"), default="smooth")
    p.add_argument("--s", type=float, help="Sobolev order (requires --mode sobolev)")
    p.add_argument("--out", help="report path (default stdout)")
    _config_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("map", help="scan positions x directions")
    p.add_argument("signal")
    p.add_argument("--xs", help="positions: a,b,c in 1D or x,y;x,y in 2D (use --xs=... for negatives)")
    p.add_argument("--dirs", help="directions; default +-1 in 1D, 8 compass directions in 2D")
    p.add_argument("--mode", choices=("smooth", "sobolev"), default="smooth")
    p.add_argument("--s", type=float)
    p.add_argument("--out")
    _config_flags(p)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("corpus", help="list, export or validate the ground-truth corpus")
    p.add_argument("action", choices=("list", "export", "validate"))
    p.add_argument("member", nargs="?")
    p.add_argument("path", nargs="?")
    p.add_argument("--format", choices=("csv", "binary"), help="export format (default from suffix)")
    _config_flags(p)
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("emit-plot", help="plot-ready CSV of shell maxima and Sobolev partial sums",
                       epilog=PLOT_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("signal")
    _point_flags(p)
    p.add_argument("--s", help="comma-separated Sobolev orders for tail rows")
    p.add_argument("--out")
    _config_flags(p)
    p.set_defaults(func=cmd_emit_plot)

    p = sub.add_parser("audit", help="window-robustness or seminorm-uniformity audit")
    p.add_argument("kind", choices=("robustness", "seminorm"))
    p.add_argument("signal")
    _point_flags(p)
    p.add_argument("--windows", help="comma-separated windows for the robustness audit")
    p.add_argument("--s", type=float, help="Sobolev order (robustness audit)")
    p.add_argument("--seed", type=int, default=0, help="seed of the seminorm audit window family")
    p.add_argument("-m", type=int, default=20, help="family size")
    p.add_argument("-k", type=int, default=6, help="seminorm order")
    p.add_argument("-n", type=int, default=4, help="decay order")
    p.add_argument("--out")
    _config_flags(p)
    p.set_defaults(func=cmd_audit)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    try:
        return args.func(args)
    except UsageError as err:
        print(f"wfscope: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
