"""Cone nesting constants, fattening checks and shell/cone index sets."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .core import Cone, ShellPartition

C_MAX = 1.0 - 1e-9


@dataclass(frozen=True)
class ConePair:
    """Inner cone, outer cone and a fattening constant ``c`` for the pair."""

    inner: Cone
    outer: Cone
    c: float

    @classmethod
    def build(cls, inner: Cone, outer: Cone) -> "ConePair":
        return cls(inner, outer, max_nesting_constant(inner, outer))


def _check_coaxial(inner: Cone, outer: Cone) -> None:
    if inner.dimension != outer.dimension:
        raise ValueError("cones live in different dimensions")
    if not np.allclose(inner.axis, outer.axis, atol=1e-12):
        raise ValueError("only co-axial cone pairs are supported")


def max_nesting_constant(inner: Cone, outer: Cone) -> float:
    """Largest ``c < 1`` with ``{eta : |xi - eta| <= c|xi|, xi in inner}`` inside ``outer``.

    For co-axial circular cones with half-angles ``a < b`` the ball of radius
    ``c|xi|`` around ``xi`` subtends ``arcsin(c)`` from the origin, which gives
    ``c = sin(b - a)``. In one dimension the two half-lines coincide and any
    ``c < 1`` works.
    """
    _check_coaxial(inner, outer)
    if inner.dimension == 1:
        return C_MAX
    a, b = inner.half_angle, outer.half_angle
    if a >= b:
        raise ValueError(f"inner half-angle {a:g} must be smaller than outer half-angle {b:g}")
    return min(math.sin(b - a), C_MAX)


def _random_unit(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    u = rng.standard_normal((n, d))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def sample_cone(cone: Cone, n: int, rng: np.random.Generator,
                scale_range=(1e-3, 1e3)) -> np.ndarray:
    """Random points of ``cone`` at log-uniform scales, shape (n, d)."""
    lo, hi = np.log10(scale_range[0]), np.log10(scale_range[1])
    scale = 10.0 ** rng.uniform(lo, hi, n)
    d = cone.dimension
    axis = np.asarray(cone.axis)
    if d == 1:
        return (scale * axis[0])[:, None]
    # angle uniform in [0, theta), rotate toward a random direction orthogonal to the axis
    ang = rng.uniform(0.0, cone.half_angle, n)
    perp = rng.standard_normal((n, d))
    perp -= (perp @ axis)[:, None] * axis[None, :]
    perp /= np.linalg.norm(perp, axis=1, keepdims=True)
    dirs = np.cos(ang)[:, None] * axis[None, :] + np.sin(ang)[:, None] * perp
    return scale[:, None] * dirs


def fattening_sample_check(inner: Cone, outer: Cone, c: float, n_samples: int = 10**6,
                           seed: int = 0, chunk: int = 200_000):
    """Monte-Carlo test of the fattening inclusion for constant ``c``.

    Checks ``xi + c|xi| u`` in ``outer`` for random ``xi`` in ``inner`` and
    unit ``u``, and the shifted form: ``zeta - eta`` in ``outer`` whenever
    ``zeta`` in ``inner`` and ``|eta| <= c|zeta|``.

    Returns
    -------
    ok : bool
    counterexample : dict or None
        ``{"xi": ..., "eta": ...}`` for the first violating sample.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    d = inner.dimension
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        xi = sample_cone(inner, m, rng)
        r = np.linalg.norm(xi, axis=1, keepdims=True)
        u = _random_unit(rng, m, d)
        eta = xi + c * r * u
        bad = np.nonzero(~outer.contains(eta))[0]
        if len(bad):
            i = bad[0]
            return False, {"xi": xi[i].tolist(), "eta": eta[i].tolist(), "form": "fattening"}
        zeta = sample_cone(inner, m, rng)
        rz = np.linalg.norm(zeta, axis=1, keepdims=True)
        shift = c * rz * rng.uniform(0.0, 1.0, (m, 1)) ** (1.0 / d) * _random_unit(rng, m, d)
        diff = zeta - shift
        bad = np.nonzero(~outer.contains(diff))[0]
        if len(bad):
            i = bad[0]
            return False, {"xi": diff[i].tolist(), "eta": shift[i].tolist(), "form": "shifted"}
        done += m
    return True, None


@dataclass(frozen=True)
class ShellIndex:
    """Per-shell frequency indices of ``S_j`` intersected with a cone."""

    partition: ShellPartition
    indices: tuple
    empty: tuple

    @property
    def usable(self) -> List[int]:
        return [j for j, e in enumerate(self.empty) if not e]


def shell_cone_indices(freqs, cone: Cone, partition: ShellPartition,
                       cap: Optional[float] = None) -> ShellIndex:
    """Indices of ``freqs`` (shape (M,) or (M, d)) in each ``S_j`` within ``cone``.

    Empty intersections are flagged rather than raised.
    """
    if cap is not None:
        partition.check_cap(cap)
    xi = np.asarray(freqs, dtype=float)
    if xi.ndim == 1:
        xi = xi[:, None]
    radius = np.sqrt(np.sum(xi**2, axis=1))
    shell = partition.shell_of(radius)
    inside = cone.contains(xi[:, 0] if cone.dimension == 1 else xi)
    lists = []
    for j in range(partition.count):
        lists.append(np.nonzero(inside & (shell == j))[0])
    return ShellIndex(partition, tuple(lists), tuple(len(l) == 0 for l in lists))
