"""Shell suprema, polynomial decay exponents and weighted cone L2 tails."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .cones import ShellIndex, shell_cone_indices
from .core import Cone, ShellPartition
from .stft import StftTable

FLOOR_REL = 1e-13
DEFAULT_RHO_TOL = 0.15


class TooFewShells(ValueError):
    pass


@dataclass(frozen=True)
class ShellStats:
    """Shell maxima ``M_j = max |V|`` over the K rows and ``S_j`` within the cone."""

    partition: ShellPartition
    sups: np.ndarray
    counts: np.ndarray
    global_max: float

    @property
    def midpoints(self) -> np.ndarray:
        return self.partition.midpoints

    @property
    def usable(self) -> np.ndarray:
        return self.counts > 0


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    residual: float
    floor_hit: bool
    shells_used: int
    intercept: float = float("nan")

    @property
    def rapid_sentinel(self) -> bool:
        return math.isinf(self.exponent)

    def line(self, radius) -> np.ndarray:
        """Fitted ``log M`` at the given radii."""
        return self.intercept - self.exponent * np.log1p(np.asarray(radius, dtype=float))


def _rows(table: StftTable, k_indices) -> np.ndarray:
    v = np.abs(table.values)
    return v if k_indices is None else v[np.asarray(k_indices)]


def shell_sup(table: StftTable, shells: ShellIndex, k_indices=None) -> ShellStats:
    """Exact maxima of ``|V|`` over positions ``k_indices`` and each shell/cone set.

    Raises
    ------
    TooFewShells
        If fewer than three shells are nonempty.
    """
    a = _rows(table, k_indices)
    if len(shells.usable) < 3:
        raise TooFewShells(f"only {len(shells.usable)} nonempty shell(s); need 3 for a decay fit")
    sups = np.zeros(shells.partition.count)
    counts = np.zeros(shells.partition.count, dtype=int)
    for j, ix in enumerate(shells.indices):
        counts[j] = len(ix)
        if len(ix):
            sups[j] = a[:, ix].max()
    gmax = float(a.max()) if a.size else 0.0
    return ShellStats(shells.partition, sups, counts, gmax)


def decay_exponent(stats: ShellStats, floor_rel: float = FLOOR_REL) -> DecayFit:
    """Least-squares slope of ``log M_j`` against ``log(1 + R_j)`` at shell midpoints.

    Shells with ``M_j`` at or below ``floor_rel * global_max`` are clipped
    and flagged. With fewer than two shells above the floor the exponent is
    reported as ``+inf``.
    """
    use = stats.usable
    if use.sum() < 3:
        raise TooFewShells("need at least 3 nonempty shells")
    floor = floor_rel * stats.global_max
    above = use & (stats.sups > floor)
    floor_hit = bool(np.any(use & ~above))
    if above.sum() < 2:
        return DecayFit(math.inf, 0.0, True, int(above.sum()))
    x = np.log1p(stats.midpoints[above])
    y = np.log(stats.sups[above])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + intercept))))
    return DecayFit(float(-slope), resid, floor_hit, int(above.sum()), float(intercept))


class TailVerdict(enum.Enum):
    FINITE = "Finite"
    DIVERGENT = "Divergent"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class SobolevTail:
    """Partial sums ``S_J(x)`` of ``<xi>^(2s) |V|^2 dxi^d`` over ``|xi| < R_J`` in the cone.

    ``partial[p, J]`` covers the core ``|xi| < r0`` plus shells ``0..J``;
    ``sup`` is the maximum over positions.
    """

    s: float
    radii: np.ndarray
    partial: np.ndarray
    core: np.ndarray
    shell_sums: np.ndarray

    @property
    def sup(self) -> np.ndarray:
        return self.partial.max(axis=0)

    @property
    def increments(self) -> np.ndarray:
        """``D_J = max_x (S_J(x) - S_{J-1}(x))``, one per shell.

        Taken per position so the (possibly dominant) core never enters a
        difference.
        """
        return self.shell_sums.max(axis=0)


class WeightedCone:
    """``|V|^2`` restricted to a cone, grouped by shell, for repeated Sobolev sums.

    Building this once lets the threshold bisection evaluate many orders
    without touching the STFT table again.
    """

    def __init__(self, table: StftTable, cone: Cone, partition: ShellPartition, k_indices=None):
        a2 = _rows(table, k_indices) ** 2
        freqs = table.freqs
        shells = shell_cone_indices(freqs, cone, partition)
        if len(shells.usable) < 3:
            raise TooFewShells(f"only {len(shells.usable)} nonempty shell(s)")
        radius = table.radii
        inside = cone.contains(freqs[:, 0] if cone.dimension == 1 else freqs)
        core_ix = np.nonzero(inside & (radius < partition.r0))[0]
        self.partition = partition
        self.cell = table.frequency_spacing ** table.dimension
        self._groups = []
        for ix in (core_ix,) + shells.indices:
            logw = 0.5 * np.log1p(radius[ix] ** 2)
            self._groups.append((a2[:, ix], logw))

    def tail(self, s: float) -> SobolevTail:
        sums = []
        for vals, logw in self._groups:
            if vals.shape[1] == 0:
                sums.append(np.zeros(vals.shape[0]))
            else:
                sums.append(np.sum(vals * np.exp(2 * s * logw)[None, :], axis=1) * self.cell)
        core = sums[0]
        shell_sums = np.stack(sums[1:], axis=1)
        partial = core[:, None] + np.cumsum(shell_sums, axis=1)
        return SobolevTail(float(s), self.partition.edges[1:], partial, core, shell_sums)


def sobolev_cone_norm(table: StftTable, cone: Cone, s: float, partition: ShellPartition,
                      k_indices=None) -> SobolevTail:
    """Riemann partial sums of ``||<xi>^s V(x, .)||^2_{L2(cone)}``, shell by shell."""
    return WeightedCone(table, cone, partition, k_indices).tail(s)


def tail_ratio(tail: SobolevTail, window: int = 3) -> float:
    """Geometric mean of the last ``window`` increment ratios ``D_J / D_{J-1}``.

    Returns 0 for an all-zero tail and ``nan`` when a ratio is undefined.
    """
    d = tail.increments
    if len(d) < window + 1:
        raise TooFewShells(f"need {window + 1} increments, have {len(d)}")
    last = d[-(window + 1):]
    if np.all(last == 0):
        return 0.0
    if np.any(last <= 0):
        return math.nan
    return float(np.exp(np.mean(np.diff(np.log(last)))))


def tail_convergence_verdict(tail: SobolevTail, rho_tol: float = DEFAULT_RHO_TOL) -> TailVerdict:
    """Classify the tail from its increment ratio ``g``.

    Finite when ``g < 1 - rho_tol``; Divergent when the increments are
    constant or growing (``g >= 1``); Inconclusive in between or when the
    ratios are undefined.
    """
    g = tail_ratio(tail)
    if math.isnan(g):
        return TailVerdict.INCONCLUSIVE
    if g < 1 - rho_tol:
        return TailVerdict.FINITE
    if g >= 1 - 1e-9:
        return TailVerdict.DIVERGENT
    return TailVerdict.INCONCLUSIVE


class ThresholdError(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdEstimate:
    s_star: float
    last_finite: float
    first_divergent: float
    lo_verdict: TailVerdict
    hi_verdict: TailVerdict


def sobolev_threshold_estimate(table: StftTable, cone: Cone, partition: ShellPartition,
                               s_range=(-3.0, 4.0), k_indices=None, rho_tol: float = DEFAULT_RHO_TOL,
                               width: float = 0.05) -> ThresholdEstimate:
    """Bisect the Sobolev order between the last Finite and first Divergent verdict.

    Both boundaries are located to ``width``; the estimate is the midpoint of
    the bracket ``[last Finite, first Divergent]``.

    Raises
    ------
    ThresholdError
        If the endpoint verdicts are not Finite at ``s_lo`` and Divergent at
        ``s_hi`` (a larger grid or a wider range is needed).
    """
    wc = WeightedCone(table, cone, partition, k_indices)

    def verdict(s):
        return tail_convergence_verdict(wc.tail(s), rho_tol)

    lo, hi = map(float, s_range)
    v_lo, v_hi = verdict(lo), verdict(hi)
    if v_lo is not TailVerdict.FINITE or v_hi is not TailVerdict.DIVERGENT:
        raise ThresholdError(
            f"endpoint verdicts {v_lo.value} at s={lo:g} and {v_hi.value} at s={hi:g}; "
            "need Finite then Divergent (try a larger grid or a wider s range)")

    def boundary(target):
        a, b = lo, hi  # invariant: verdict(a) != target side, verdict(b) on target side
        while b - a > width:
            m = 0.5 * (a + b)
            if target(verdict(m)):
                b = m
            else:
                a = m
        return a, b

    # largest Finite order and smallest Divergent order
    f_lo, _ = boundary(lambda v: v is not TailVerdict.FINITE)
    _, d_hi = boundary(lambda v: v is TailVerdict.DIVERGENT)
    return ThresholdEstimate(0.5 * (f_lo + d_hi), f_lo, d_hi, v_lo, v_hi)
