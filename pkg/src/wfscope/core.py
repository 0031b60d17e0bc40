"""Grids, signals, windows, cones and dyadic shell partitions.

Everything here is immutable after construction. Arrays held by the
dataclasses are flagged read-only so instances can be shared freely.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.interpolate import BSpline
from scipy.signal import convolve

DEFAULT_CAP_FACTOR = 0.4


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# Grid and signals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """Uniform d-dimensional grid with ``n`` points per axis.

    Node ``k`` along axis ``i`` sits at ``origin[i] + k * spacing``.
    """

    dimension: int
    origin: tuple
    spacing: float
    n: int

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        origin = tuple(float(o) for o in np.atleast_1d(self.origin))
        if len(origin) != self.dimension:
            raise ValueError("origin must have one entry per axis")
        object.__setattr__(self, "origin", origin)
        if not self.spacing > 0:
            raise ValueError("grid spacing must be positive")
        if self.n < 16 or self.n & (self.n - 1):
            raise ValueError(f"points per axis must be a power of two >= 16, got {self.n}")

    @classmethod
    def centered(cls, dimension: int, n: int, spacing: float) -> "Grid":
        """Grid on ``[-n/2, n/2) * spacing`` per axis; ``t = 0`` is a node."""
        return cls(dimension, (-(n // 2) * spacing,) * dimension, spacing, n)

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dimension

    @property
    def size(self) -> int:
        return self.n ** self.dimension

    def axis(self, i: int = 0) -> np.ndarray:
        return self.origin[i] + np.arange(self.n) * self.spacing

    def coordinates(self) -> np.ndarray:
        """Node coordinates, shape ``grid.shape`` (d=1) or ``grid.shape + (d,)``."""
        if self.dimension == 1:
            return self.axis(0)
        t1, t2 = np.meshgrid(self.axis(0), self.axis(1), indexing="ij")
        return np.stack([t1, t2], axis=-1)

    def frequency_axis(self) -> np.ndarray:
        """Angular dual frequencies in FFT order, spacing ``2*pi/(n*dx)``."""
        return 2 * np.pi * np.fft.fftfreq(self.n, self.spacing)

    def frequencies(self) -> np.ndarray:
        """Dual grid points in FFT order, shape ``(n,)`` or ``(n, n, 2)``."""
        w = self.frequency_axis()
        if self.dimension == 1:
            return w
        w1, w2 = np.meshgrid(w, w, indexing="ij")
        return np.stack([w1, w2], axis=-1)

    @property
    def frequency_spacing(self) -> float:
        return 2 * np.pi / (self.n * self.spacing)

    @property
    def nyquist(self) -> float:
        return np.pi / self.spacing

    def cap(self, factor: float = DEFAULT_CAP_FACTOR) -> float:
        """Largest |xi| admitted into frequency statistics."""
        return factor * self.nyquist

    def index_of(self, x) -> tuple:
        """Index of the node at ``x``; raises if ``x`` is not (close to) a node."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dimension,):
            raise ValueError(f"expected a point with {self.dimension} coordinate(s)")
        k = (x - np.asarray(self.origin)) / self.spacing
        idx = np.rint(k)
        if np.any(np.abs(k - idx) > 1e-6):
            raise ValueError(f"position {x.tolist()} is not a grid node")
        return tuple(int(i) for i in idx)

    def node(self, index) -> np.ndarray:
        return np.asarray(self.origin) + np.asarray(index, dtype=float) * self.spacing

    def snap(self, x) -> np.ndarray:
        """Nearest grid node to ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        k = np.rint((x - np.asarray(self.origin)) / self.spacing)
        return np.asarray(self.origin) + k * self.spacing

    def ball_nodes(self, center, radius: float, stride: int = 1) -> np.ndarray:
        """Grid nodes in the closed ball ``|t - center| <= radius``, shape (m, d).

        ``center`` is snapped to the nearest node first; ``stride`` keeps every
        stride-th node along each axis (the centre is always kept).
        """
        c = self.snap(center)
        m = int(math.floor(radius / self.spacing + 1e-9))
        offs = np.arange(-m, m + 1)
        offs = offs[offs % stride == 0]
        if self.dimension == 1:
            pts = c[0] + offs[:, None] * self.spacing
        else:
            o1, o2 = np.meshgrid(offs, offs, indexing="ij")
            grid_offs = np.stack([o1.ravel(), o2.ravel()], axis=-1)
            keep = np.sum(grid_offs.astype(float) ** 2, axis=1) * self.spacing**2 <= radius**2 + 1e-12
            pts = c[None, :] + grid_offs[keep] * self.spacing
        return pts


@dataclass(frozen=True)
class Regularization:
    """How a non-function distribution was turned into samples."""

    kind: str
    parameter: float

    def __post_init__(self):
        if not self.parameter > 0:
            raise ValueError("regularization parameter must be positive")


@dataclass(frozen=True)
class SampledSignal:
    grid: Grid
    samples: np.ndarray
    label: str = ""
    regularization: Optional[Regularization] = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} samples, got {s.size}")
        object.__setattr__(self, "samples", _frozen(s.reshape(self.grid.shape)))

    def __add__(self, other: "SampledSignal") -> "SampledSignal":
        if other.grid != self.grid:
            raise ValueError("signals live on different grids")
        return SampledSignal(self.grid, self.samples + other.samples, f"{self.label}+{other.label}")

    def scaled(self, a: complex) -> "SampledSignal":
        return SampledSignal(self.grid, a * self.samples, self.label, self.regularization)

    def norm2(self) -> float:
        """Riemann-sum L2 norm squared."""
        return float(np.sum(np.abs(self.samples) ** 2) * self.grid.spacing ** self.grid.dimension)


# ---------------------------------------------------------------------------
# Windows
# ---------------------------------------------------------------------------

def _bump_profile(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


@lru_cache(maxsize=None)
def _bump_derivative_numerators(dim: int, alpha: tuple) -> np.ndarray:
    """Numerator Q with D^alpha exp(1 - 1/w) = Q / w^(2|alpha|) * exp(1 - 1/w).

    ``w = 1 - |u|^2``; coefficients are in the unit-radius variables u and are
    indexed ``c[i]`` (d=1) or ``c[i, j]`` (d=2, powers of u1, u2).
    """
    if dim == 1:
        w = np.array([1.0, 0.0, -1.0])
        grads = [np.array([0.0, 2.0])]  # d|u|^2/du
    else:
        w = np.zeros((3, 3))
        w[0, 0], w[2, 0], w[0, 2] = 1.0, -1.0, -1.0
        grads = [np.array([[0.0], [2.0]]), np.array([[0.0, 2.0]])]
    q = np.ones((1,) * dim)
    order = 0
    seq = []
    for axis, count in enumerate(alpha):
        seq += [axis] * count
    for axis in seq:
        g = grads[axis]
        # d/du_a [Q w^(-2n) e^g] with dg/du_a = -rho_a / w^2, rho_a = d|u|^2/du_a
        term1 = -convolve(g, q)
        term2 = convolve(convolve(w, w), P.polyder(q, axis=axis)) if q.shape[axis] > 1 else None
        term3 = 2 * order * convolve(convolve(g, w), q)
        out_shape = tuple(max(a, b) for a, b in zip(term1.shape, term3.shape))
        if term2 is not None:
            out_shape = tuple(max(a, b) for a, b in zip(out_shape, term2.shape))
        new = np.zeros(out_shape)
        for t in (term1, term2, term3):
            if t is None:
                continue
            new[tuple(slice(0, s) for s in t.shape)] += t
        q = new
        order += 1
    return q


def _bspline_basis(order: int) -> BSpline:
    # centred cardinal B-spline of degree `order`, support [-(m+1)/2, (m+1)/2]
    knots = np.arange(order + 2) - (order + 1) / 2.0
    return BSpline.basis_element(knots, extrapolate=False)


@dataclass(frozen=True)
class WindowSpec:
    """Compactly supported window ``chi`` with ``chi(0) != 0``.

    ``kind`` is ``"bump"`` (the C-infinity mollifier
    ``amplitude * exp(1 - 1/(1 - |t/r|^2))``) or ``"bspline"`` (centred
    cardinal B-spline of degree ``order``, C^(order-1), tensor product in 2D
    with half-width ``r/sqrt(2)`` so the support stays inside the ball).
    """

    kind: str = "bump"
    radius: float = 1.0
    amplitude: float = 1.0
    order: int = 3

    def __post_init__(self):
        if self.kind not in ("bump", "bspline"):
            raise ValueError(f"unknown window kind {self.kind!r}")
        if not self.radius > 0 or not self.amplitude > 0:
            raise ValueError("window radius and amplitude must be positive")
        if self.kind == "bspline" and self.order < 1:
            raise ValueError("B-spline degree must be >= 1")

    @property
    def support_radius(self) -> float:
        return self.radius

    @property
    def smooth(self) -> bool:
        return self.kind == "bump"

    @property
    def max_derivative(self) -> Optional[int]:
        return None if self.kind == "bump" else self.order - 1

    @property
    def ident(self) -> str:
        head = "bump" if self.kind == "bump" else f"bspline{self.order}"
        s = f"{head}:{self.radius:g}"
        return s if self.amplitude == 1.0 else f"{s}*{self.amplitude:g}"

    @classmethod
    def parse(cls, text: str) -> "WindowSpec":
        """Parse ``bump:<r>``, ``bspline:<r>`` or ``bspline<m>:<r>``."""
        try:
            head, r = text.split(":")
            radius = float(r)
        except ValueError:
            raise ValueError(f"window must look like 'bump:<r>' or 'bspline:<r>', got {text!r}") from None
        if head == "bump":
            return cls("bump", radius)
        if head.startswith("bspline"):
            m = head[len("bspline"):]
            return cls("bspline", radius, order=int(m) if m else 3)
        raise ValueError(f"unknown window kind {head!r}")

    def _half_width(self, dim: int) -> float:
        return self.radius if self.kind == "bump" else self.radius / math.sqrt(dim)

    def evaluate(self, t, dim: int = 1) -> np.ndarray:
        """chi(t); ``t`` has trailing axis of length ``dim`` when ``dim > 1``."""
        t = np.asarray(t, dtype=float)
        if self.kind == "bump":
            rho = np.abs(t) if dim == 1 else np.sqrt(np.sum(t**2, axis=-1))
            return self.amplitude * _bump_profile(rho / self.radius)
        basis = _bspline_basis(self.order)
        scale = (self.order + 1) / 2.0 / self._half_width(dim)
        peak = float(basis(0.0))

        def b(x):
            v = basis(np.asarray(x) * scale)
            return np.nan_to_num(v, nan=0.0) / peak

        if dim == 1:
            return self.amplitude * b(t)
        return self.amplitude * b(t[..., 0]) * b(t[..., 1])

    __call__ = evaluate

    def derivative(self, alpha, t) -> np.ndarray:
        """D^alpha chi at points ``t`` (``alpha`` an int in 1D or a tuple)."""
        alpha = (int(alpha),) if np.isscalar(alpha) else tuple(int(a) for a in alpha)
        dim = len(alpha)
        t = np.asarray(t, dtype=float)
        k = sum(alpha)
        if self.kind == "bump":
            u = t / self.radius
            q = _bump_derivative_numerators(dim, alpha)
            rho2 = u**2 if dim == 1 else np.sum(u**2, axis=-1)
            out = np.zeros(rho2.shape)
            inside = rho2 < 1
            w = 1.0 - rho2[inside]
            if dim == 1:
                num = P.polyval(u[inside], q)
            else:
                num = P.polyval2d(u[..., 0][inside], u[..., 1][inside], q)
            out[inside] = num / w ** (2 * k) * np.exp(1.0 - 1.0 / w)
            return self.amplitude * out / self.radius**k
        if k > self.order - 1:
            raise ValueError(f"{self.ident} is only C^{self.order - 1}; derivative of order {k} requested")
        basis = _bspline_basis(self.order)
        scale = (self.order + 1) / 2.0 / self._half_width(dim)
        peak = float(basis(0.0))

        def db(a, x):
            f = basis if a == 0 else basis.derivative(a)
            return np.nan_to_num(f(np.asarray(x) * scale), nan=0.0) * scale**a / peak

        if dim == 1:
            return self.amplitude * db(alpha[0], t)
        return self.amplitude * db(alpha[0], t[..., 0]) * db(alpha[1], t[..., 1])


def window_eval(window: WindowSpec, t, dim: int = 1):
    """Evaluate ``window`` at ``t``; scalar in, scalar out."""
    v = window.evaluate(t, dim)
    return v.item() if np.ndim(v) == 0 else v


def _multi_indices(dim: int, order: int):
    if dim == 1:
        return [(order,)]
    return [(a, order - a) for a in range(order + 1)]


def _sup_1d(fn, lo: float, hi: float, rtol: float) -> float:
    m = 1025
    prev = None
    while True:
        val = float(np.max(np.abs(fn(np.linspace(lo, hi, m)))))
        if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-300):
            return val
        if m > 2**22:
            return val
        prev = val
        m = 2 * m - 1


def _sup_2d(fn, half: float, rtol: float) -> float:
    # coarse global scan, then repeated zoom around the best candidates
    m = 257
    x = np.linspace(-half, half, m)
    t = np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1)
    v = np.abs(fn(t))
    h = x[1] - x[0]
    flat = np.argsort(v.ravel())[::-1][:6]
    best = float(v.ravel()[flat[0]])
    centers = [t.reshape(-1, 2)[i] for i in flat]
    for _ in range(40):
        h_new = h / 8
        new_best = best
        new_centers = []
        for c in centers:
            xs = c[0] + np.linspace(-2 * h, 2 * h, 33)
            ys = c[1] + np.linspace(-2 * h, 2 * h, 33)
            tt = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1)
            vv = np.abs(fn(tt))
            i = int(np.argmax(vv))
            new_centers.append(tt.reshape(-1, 2)[i])
            new_best = max(new_best, float(vv.ravel()[i]))
        converged = abs(new_best - best) <= rtol * max(new_best, 1e-300)
        best, centers, h = new_best, new_centers, h_new
        if converged and h < 1e-4 * half:
            break
    return best


def window_seminorm(window, k: int, dim: int = 1, rtol: float = 1e-6) -> float:
    """``sup_{|alpha| <= k} ||D^alpha chi||_inf`` by refined dense sampling."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if getattr(window, "max_derivative", None) is not None and k > window.max_derivative:
        raise ValueError(f"{window.ident} is only C^{window.max_derivative}; seminorm of order {k} undefined")
    r = window.support_radius
    best = 0.0
    for order in range(k + 1):
        for alpha in _multi_indices(dim, order):
            if dim == 1:
                val = _sup_1d(lambda t: window.derivative(alpha, t), -r, r, rtol)
            else:
                val = _sup_2d(lambda t: window.derivative(alpha, t), r, rtol)
            best = max(best, val)
    return best


# ---------------------------------------------------------------------------
# Cones, phase points, shells
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cone:
    """Open circular cone ``{xi != 0 : angle(xi, axis) < half_angle}``.

    In one dimension the axis is +1 or -1 and the half-angle is ignored.
    """

    dimension: int
    axis: tuple
    half_angle: float = math.pi / 2

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.axis, dtype=float))
        if a.shape != (self.dimension,):
            raise ValueError("axis must have one entry per dimension")
        nrm = np.linalg.norm(a)
        if nrm == 0:
            raise ValueError("cone axis must be nonzero")
        a = a / nrm
        if self.dimension == 1:
            a = np.sign(a)
        elif not 0 < self.half_angle <= math.pi / 2:
            raise ValueError("half-angle must lie in (0, pi/2]")
        object.__setattr__(self, "axis", tuple(float(v) for v in a))

    def contains(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if self.dimension == 1:
            return np.sign(xi) == self.axis[0]
        # rescale by the largest component so tiny or huge xi neither underflow nor overflow
        big = np.max(np.abs(xi), axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            u = np.where(big > 0, xi / np.where(big > 0, big, 1.0), 0.0)
            nrm = np.sqrt(np.sum(u**2, axis=-1))
            ang = np.arccos(np.clip((u @ np.asarray(self.axis)) / nrm, -1.0, 1.0))
        return (big[..., 0] > 0) & (ang < self.half_angle)


def cone_contains(cone: Cone, xi):
    v = cone.contains(xi)
    return bool(v) if np.ndim(v) == 0 else v


@dataclass(frozen=True)
class PhasePoint:
    x0: tuple
    direction: tuple

    def __post_init__(self):
        x0 = tuple(float(v) for v in np.atleast_1d(self.x0))
        d = np.atleast_1d(np.asarray(self.direction, dtype=float))
        if len(d) != len(x0):
            raise ValueError("position and direction dimensions differ")
        nrm = np.linalg.norm(d)
        if nrm == 0:
            raise ValueError("direction must be nonzero")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "direction", tuple(float(v) for v in d / nrm))

    @property
    def dimension(self) -> int:
        return len(self.x0)

    def sort_key(self):
        return (self.x0, self.direction)


@dataclass(frozen=True)
class ShellPartition:
    """Dyadic shells ``r0 * 2^j <= |xi| < r0 * 2^(j+1)``, ``j = 0..count-1``."""

    r0: float
    count: int

    def __post_init__(self):
        if not self.r0 > 0:
            raise ValueError("base radius must be positive")
        if self.count < 1:
            raise ValueError("need at least one shell")

    @classmethod
    def below(cls, cap: float, count: int) -> "ShellPartition":
        """Partition whose outer edge sits exactly at ``cap``."""
        return cls(cap / 2**count, count)

    @classmethod
    def parse(cls, text: str) -> "ShellPartition":
        r0, j = text.split(":")
        return cls(float(r0), int(j))

    @property
    def edges(self) -> np.ndarray:
        return self.r0 * 2.0 ** np.arange(self.count + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return self.r0 * 2.0 ** (np.arange(self.count) + 0.5)

    @property
    def outer(self) -> float:
        return self.r0 * 2.0**self.count

    def shell_of(self, radius) -> np.ndarray:
        """Shell index of each radius, -1 outside ``[r0, r0 * 2^count)``."""
        radius = np.asarray(radius, dtype=float)
        with np.errstate(divide="ignore"):
            lg = np.log2(np.maximum(radius, 1e-300) / self.r0)
        j = np.floor(np.clip(lg, -1, self.count)).astype(int)
        # log2 rounding near the edges: fix with exact comparisons
        e = self.edges
        jj = np.clip(j, 0, self.count - 1)
        jj = np.where(radius < e[jj], jj - 1, jj)
        jj = np.where((jj + 1 <= self.count - 1) & (radius >= e[np.clip(jj + 1, 0, self.count)]), jj + 1, jj)
        inside = (radius >= e[0]) & (radius < e[-1])
        return np.where(inside, jj, -1)

    def check_cap(self, cap: float) -> None:
        if self.outer > cap * (1 + 1e-12):
            raise ValueError(
                f"outer shell edge {self.outer:g} exceeds the frequency cap {cap:g}")
