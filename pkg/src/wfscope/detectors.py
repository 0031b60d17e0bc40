"""Microlocal regularity detectors and window/seminorm audits.

A phase-space point ``(x0, xi0)`` is tested by computing the STFT on a
ball ``K`` of grid nodes around ``x0`` and looking at ``|V|`` inside a
circular cone around ``xi0``:

* smooth mode: the polynomial decay exponent of dyadic shell maxima;
* Sobolev mode: convergence of the ``<xi>^s``-weighted L2 norm over the cone.

Rapid decay is judged against the decay of the window's own transform over
the same shells and cone (``calibration``), because a C-infinity window with
compact support only decays like ``exp(-sqrt(r |xi|))`` and its apparent
polynomial exponent below the aliasing cap is modest.
"""
from __future__ import annotations

import enum
import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import List, Optional, Sequence

import numpy as np

from .cones import shell_cone_indices
from .core import DEFAULT_CAP_FACTOR, Cone, Grid, PhasePoint, SampledSignal, ShellPartition, WindowSpec, window_seminorm
from .decay import (DEFAULT_RHO_TOL, FLOOR_REL, TailVerdict, ThresholdError, decay_exponent,
                    shell_sup, sobolev_cone_norm, sobolev_threshold_estimate, tail_convergence_verdict,
                    tail_ratio)
from .stft import StftTable, stft_discrete

log = logging.getLogger(__name__)


class Verdict(enum.Enum):
    REGULAR = "Regular"
    SINGULAR = "Singular"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class DetectorConfig:
    """Constructive choices for ``K``, the cone and the window.

    ``shells=None`` places ``shell_count`` dyadic shells directly below
    ``min(cap, max_frequency)``. ``calibration`` is the fraction of the
    window's own decay exponent that counts as rapid decay; ``None`` keeps
    only the absolute ``n_threshold``.
    """

    k_radius: float = 0.0625
    cone_angle: float = math.pi / 4
    window: WindowSpec = WindowSpec("bump", 0.375)
    shells: Optional[ShellPartition] = None
    shell_count: int = 4
    n_threshold: float = 6.0
    calibration: Optional[float] = 0.65
    s: Optional[float] = None
    rho_tol: float = DEFAULT_RHO_TOL
    cap_factor: float = DEFAULT_CAP_FACTOR
    max_frequency: Optional[float] = None
    floor: float = FLOOR_REL
    k_stride: int = 1
    rapid_override: bool = True
    threads: int = 1

    @property
    def inner_angle(self) -> float:
        return self.cone_angle / 2

    def partition(self, grid: Grid) -> ShellPartition:
        cap = grid.cap(self.cap_factor)
        if self.max_frequency is not None:
            cap = min(cap, self.max_frequency)
        if self.shells is None:
            return ShellPartition.below(cap, self.shell_count)
        self.shells.check_cap(cap)
        return self.shells

    def cone(self, direction) -> Cone:
        d = np.atleast_1d(direction)
        return Cone(len(d), tuple(d), self.inner_angle)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["window"] = self.window.ident
        d["shells"] = None if self.shells is None else f"{self.shells.r0:.17g}:{self.shells.count}"
        d.pop("threads")  # never changes results
        return d

    def digest(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True, default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class MicrolocalVerdict:
    point: PhasePoint
    mode: str
    verdict: Verdict
    s: Optional[float] = None
    exponent: Optional[float] = None
    tail: Optional[TailVerdict] = None
    diagnostics: dict = field(default_factory=dict)

    def record(self) -> dict:
        """Flat, JSON-friendly view."""
        out = {
            "x": list(self.point.x0),
            "direction": list(self.point.direction),
            "mode": self.mode,
            "verdict": self.verdict.value,
        }
        if self.mode == "sobolev":
            out["s"] = self.s
            out["tail"] = None if self.tail is None else self.tail.value
        else:
            out["exponent"] = _jsonable(self.exponent)
        out.update({k: _jsonable(v) for k, v in sorted(self.diagnostics.items())})
        return out


def _jsonable(v):
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
    return v


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def k_positions(grid: Grid, x0, cfg: DetectorConfig) -> np.ndarray:
    pts = grid.ball_nodes(x0, cfg.k_radius, cfg.k_stride)
    if len(pts) == 0:
        raise ValueError("K contains no grid nodes")
    return pts


def _check_window(window) -> None:
    v0 = window.evaluate(np.zeros(1))[0]
    if v0 == 0:
        raise ValueError(f"window {window.ident} vanishes at the origin")


@lru_cache(maxsize=256)
def _reference_exponent(grid: Grid, window, direction: tuple, cfg_key: tuple) -> float:
    """Decay exponent of the window's own transform over the detector's shells and cone."""
    angle, partition, floor, cap_factor = cfg_key
    centre = grid.snap(np.zeros(grid.dimension))
    ones = SampledSignal(grid, np.ones(grid.shape))
    tab = stft_discrete(ones, window, [centre], cap_factor=cap_factor)
    cone = Cone(grid.dimension, direction, angle)
    shells = shell_cone_indices(tab.freqs, cone, partition)
    return decay_exponent(shell_sup(tab, shells), floor).exponent


def reference_exponent(grid: Grid, cfg: DetectorConfig, direction, window=None) -> float:
    window = cfg.window if window is None else window
    key = (cfg.inner_angle, cfg.partition(grid), cfg.floor, cfg.cap_factor)
    return _reference_exponent(grid, window, tuple(float(v) for v in np.atleast_1d(direction)), key)


def effective_threshold(grid: Grid, cfg: DetectorConfig, direction, window=None):
    """``min(n_threshold, calibration * reference exponent)`` and the reference."""
    if cfg.calibration is None:
        return cfg.n_threshold, math.nan
    ref = reference_exponent(grid, cfg, direction, window)
    return min(cfg.n_threshold, cfg.calibration * ref), ref


def _table(f: SampledSignal, x0, cfg: DetectorConfig, window=None) -> StftTable:
    window = cfg.window if window is None else window
    _check_window(window)
    return stft_discrete(f, window, k_positions(f.grid, x0, cfg), cfg.cap_factor, workers=1)


def _smooth_from_table(tab: StftTable, p: PhasePoint, cfg: DetectorConfig) -> MicrolocalVerdict:
    grid = tab.grid
    part = cfg.partition(grid)
    cone = cfg.cone(p.direction)
    shells = shell_cone_indices(tab.freqs, cone, part)
    fit = decay_exponent(shell_sup(tab, shells), cfg.floor)
    thr, ref = effective_threshold(grid, cfg, p.direction, tab.window)
    rapid = fit.floor_hit or fit.exponent >= thr
    diag = {
        "residual": fit.residual,
        "floor_hit": fit.floor_hit,
        "shells_used": fit.shells_used,
        "window": tab.window.ident,
        "threshold": thr,
        "reference_exponent": ref,
        "octaves": float(part.count),
    }
    v = Verdict.REGULAR if rapid else Verdict.SINGULAR
    return MicrolocalVerdict(p, "smooth", v, exponent=fit.exponent, diagnostics=diag)


def _sobolev_from_table(tab: StftTable, p: PhasePoint, s: float, cfg: DetectorConfig) -> MicrolocalVerdict:
    part = cfg.partition(tab.grid)
    tail = sobolev_cone_norm(tab, cfg.cone(p.direction), s, part)
    tv = tail_convergence_verdict(tail, cfg.rho_tol)
    v = {TailVerdict.FINITE: Verdict.REGULAR, TailVerdict.DIVERGENT: Verdict.SINGULAR}.get(tv, Verdict.INCONCLUSIVE)
    diag = {
        "ratio": tail_ratio(tail),
        "sup_norm2": float(tail.sup[-1]),
        "window": tab.window.ident,
        "octaves": float(part.count),
    }
    if cfg.rapid_override and v is not Verdict.REGULAR:
        # rapid decay in the cone puts the point outside every H^s wave front set;
        # the tail test alone cannot see this when the window's own decay is slow in the band
        smooth = _smooth_from_table(tab, p, cfg)
        if smooth.verdict is Verdict.REGULAR:
            v = Verdict.REGULAR
            diag["rapid_decay"] = True
    return MicrolocalVerdict(p, "sobolev", v, s=float(s), tail=tv, diagnostics=diag)


def _inconclusive(p: PhasePoint, mode: str, s, err: Exception, window=None) -> MicrolocalVerdict:
    diag = {"reason": f"{type(err).__name__}: {err}"}
    if window is not None:
        diag["window"] = window.ident
    return MicrolocalVerdict(p, mode, Verdict.INCONCLUSIVE, s=s, diagnostics=diag)


# ---------------------------------------------------------------------------
# detectors
# ---------------------------------------------------------------------------

def wf_smooth_detect(f: SampledSignal, p: PhasePoint, cfg: DetectorConfig = DetectorConfig()) -> MicrolocalVerdict:
    """Classify ``p`` against the C-infinity wave front set of ``f``.

    Regular when the shell maxima hit the numerical floor or the decay
    exponent reaches the effective threshold. Grid, window or shell problems
    give an Inconclusive verdict with the reason in ``diagnostics``.
    """
    try:
        return _smooth_from_table(_table(f, p.x0, cfg), p, cfg)
    except ValueError as err:
        return _inconclusive(p, "smooth", None, err, cfg.window)


def wf_sobolev_detect(f: SampledSignal, p: PhasePoint, s: float,
                      cfg: DetectorConfig = DetectorConfig()) -> MicrolocalVerdict:
    """Classify ``p`` against the ``H^s`` wave front set via cone tail convergence."""
    try:
        return _sobolev_from_table(_table(f, p.x0, cfg), p, s, cfg)
    except ValueError as err:
        return _inconclusive(p, "sobolev", s, err, cfg.window)


def wf_map(f: SampledSignal, positions, directions, cfg: DetectorConfig = DetectorConfig()) -> List[MicrolocalVerdict]:
    """One verdict per (position, direction), sorted by point.

    Sobolev mode is used when ``cfg.s`` is set. The STFT for each position is
    computed once and shared by all directions; per-point failures become
    Inconclusive records.
    """
    d = f.grid.dimension
    xs = [tuple(float(v) for v in np.atleast_1d(x)) for x in positions]
    dirs = [tuple(float(v) for v in np.atleast_1d(u)) for u in directions]
    if not xs or not dirs:
        raise ValueError("need at least one position and one direction")
    for x in xs + dirs:
        if len(x) != d:
            raise ValueError(f"points must have {d} coordinate(s)")
    mode = "smooth" if cfg.s is None else "sobolev"

    def one_position(x):
        out = []
        try:
            tab = _table(f, x, cfg)
        except ValueError as err:
            return [_inconclusive(PhasePoint(x, u), mode, cfg.s, err, cfg.window) for u in dirs]
        for u in dirs:
            p = PhasePoint(x, u)
            try:
                if mode == "smooth":
                    out.append(_smooth_from_table(tab, p, cfg))
                else:
                    out.append(_sobolev_from_table(tab, p, cfg.s, cfg))
            except ValueError as err:
                out.append(_inconclusive(p, mode, cfg.s, err, cfg.window))
        return out

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            chunks = list(pool.map(one_position, xs))
    else:
        chunks = [one_position(x) for x in xs]
    verdicts = [v for c in chunks for v in c]
    return sorted(verdicts, key=lambda v: v.point.sort_key())


# ---------------------------------------------------------------------------
# audits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RobustnessReport:
    point: PhasePoint
    mode: str
    s: Optional[float]
    windows: tuple
    verdicts: tuple
    exponents: tuple
    thresholds: tuple

    @property
    def agreement(self) -> bool:
        return len(set(self.verdicts)) == 1

    @property
    def dispersion(self) -> float:
        """Spread (max - min) of the finite exponents or Sobolev thresholds."""
        vals = [v for v in (self.exponents if self.mode == "smooth" else self.thresholds)
                if v is not None and math.isfinite(v)]
        return float(max(vals) - min(vals)) if len(vals) > 1 else 0.0


def window_robustness_audit(f: SampledSignal, p: PhasePoint, cfg: DetectorConfig, windows: Sequence[WindowSpec],
                            s: Optional[float] = None, thresholds: bool = True) -> RobustnessReport:
    """Run the detector once per window and report the verdict vector.

    In Sobolev mode (``s`` given) each window also gets a threshold
    estimate when the bisection brackets one, unless ``thresholds`` is False.
    """
    if len(windows) < 3:
        raise ValueError("robustness audit needs at least three windows")
    verdicts, exps, thrs = [], [], []
    for w in windows:
        c = replace(cfg, window=w)
        if s is None:
            v = wf_smooth_detect(f, p, c)
            verdicts.append(v.verdict)
            exps.append(v.exponent)
            thrs.append(None)
        else:
            v = wf_sobolev_detect(f, p, s, c)
            verdicts.append(v.verdict)
            exps.append(None)
            if not thresholds:
                thrs.append(None)
                continue
            try:
                tab = _table(f, p.x0, c)
                thrs.append(sobolev_threshold_estimate(tab, c.cone(p.direction), c.partition(f.grid),
                                                       rho_tol=c.rho_tol).s_star)
            except ValueError:
                thrs.append(None)
    return RobustnessReport(p, "smooth" if s is None else "sobolev", s, tuple(w.ident for w in windows),
                            tuple(verdicts), tuple(exps), tuple(thrs))


class TestFunction:
    """Finite sum of translated, scaled bumps; a member of ``D(B(0, r))``."""

    __test__ = False  # not a pytest class

    def __init__(self, components):
        # components: sequence of (centre, WindowSpec)
        self.components = tuple((np.atleast_1d(np.asarray(c, dtype=float)), w) for c, w in components)
        self.dim = len(self.components[0][0])
        self.support_radius = max(float(np.linalg.norm(c)) + w.radius for c, w in self.components)
        self.max_derivative = None
        self.ident = "+".join(f"{w.ident}@{','.join(f'{v:.4g}' for v in c)}" for c, w in self.components)

    def evaluate(self, t, dim: int = 1):
        t = np.asarray(t, dtype=float)
        out = 0.0
        for c, w in self.components:
            out = out + w.evaluate(t - (c[0] if dim == 1 else c), dim)
        return out

    def derivative(self, alpha, t):
        t = np.asarray(t, dtype=float)
        dim = 1 if np.isscalar(alpha) or len(alpha) == 1 else len(alpha)
        out = 0.0
        for c, w in self.components:
            out = out + w.derivative(alpha, t - (c[0] if dim == 1 else c))
        return out

    def scaled(self, a: float) -> "TestFunction":
        return TestFunction([(c, replace(w, amplitude=w.amplitude * a)) for c, w in self.components])


def random_test_functions(m: int, radius: float, dim: int, seed: int) -> List[TestFunction]:
    """``m`` seeded test functions supported in the closed ball of ``radius``.

    Half are single bumps, half are sums of two; radii are drawn from
    ``[0.5, 1] * radius`` before fitting the translate inside the ball.
    """
    rng = np.random.default_rng(seed)
    fam = []
    for i in range(m):
        parts = 1 if i % 2 == 0 else 2
        comps = []
        for _ in range(parts):
            r = radius * rng.uniform(0.5, 1.0)
            slack = radius - r
            u = rng.standard_normal(dim)
            u /= np.linalg.norm(u)
            c = u * slack * rng.uniform(0.0, 1.0)
            amp = rng.uniform(0.5, 2.0)
            comps.append((c, WindowSpec("bump", r, amp)))
        fam.append(TestFunction(comps))
    return fam


@dataclass(frozen=True)
class SeminormReport:
    point: PhasePoint
    n: int
    k: int
    seed: int
    windows: tuple
    seminorms: tuple
    ratios: tuple
    growth_flag: bool

    @property
    def family_max(self) -> float:
        return float(max(self.ratios))

    @property
    def median(self) -> float:
        return float(np.median(self.ratios))


def seminorm_uniformity_audit(f: SampledSignal, p: PhasePoint, cfg: DetectorConfig, m: int = 20, k: int = 6,
                              n: int = 4, seed: int = 0) -> SeminormReport:
    """Empirical constant for ``|V_chi f(x, xi)| (1+|xi|)^n <= C sup_{|a|<=k} ||D^a chi||``.

    The family is ``m`` seeded test functions supported in ``K - {x0}``;
    ratios are maximised over ``x`` in ``K`` and ``xi`` in the cone.

    Raises
    ------
    ValueError
        If ``p`` is not Regular with decay order at least ``n``.
    """
    base = wf_smooth_detect(f, p, cfg)
    if base.verdict is not Verdict.REGULAR or not (base.diagnostics.get("floor_hit") or base.exponent >= n):
        raise ValueError(f"point is not Regular at order {n} (verdict {base.verdict.value}, "
                         f"exponent {base.exponent})")
    grid = f.grid
    cone = cfg.cone(p.direction)
    fam = random_test_functions(m, cfg.k_radius, grid.dimension, seed)
    pos = k_positions(grid, p.x0, cfg)
    ratios, norms = [], []
    for chi in fam:
        tab = stft_discrete(f, chi, pos, cfg.cap_factor)
        inside = cone.contains(tab.freqs[:, 0] if grid.dimension == 1 else tab.freqs)
        weight = (1.0 + tab.radii[inside]) ** n
        num = float(np.max(np.abs(tab.values[:, inside]) * weight[None, :])) if inside.any() else 0.0
        sn = window_seminorm(chi, k, grid.dimension)
        norms.append(sn)
        ratios.append(num / sn)
    order = np.argsort(norms, kind="stable")
    r_sorted = np.asarray(ratios)[order]
    running_min = np.minimum.accumulate(np.where(r_sorted > 0, r_sorted, np.inf))
    with np.errstate(divide="ignore", invalid="ignore"):
        growth = np.where(np.isfinite(running_min), r_sorted / running_min, 1.0)
    flag = bool(np.nanmax(growth) > 10.0)
    return SeminormReport(p, n, k, seed, tuple(c.ident for c in fam), tuple(norms), tuple(ratios), flag)
