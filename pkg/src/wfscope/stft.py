"""Short-time Fourier transform with compactly supported windows.

Conventions: ``F g(xi) = int exp(-i x.xi) g(x) dx`` (no 2*pi factor) and
``V_chi f(x, xi) = F_{t -> xi}(f(t) * conj(chi(t - x)))``. Integrals are
plain Riemann sums over the grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.fft
from scipy import integrate

from .core import DEFAULT_CAP_FACTOR, Grid, SampledSignal, WindowSpec, _frozen

BOUNDARY_TOL = 1e-12
# complex128 elements per FFT batch
_BATCH_ELEMENTS = 1 << 22


class SupportError(ValueError):
    """Signal or window support reaches the edge of the grid."""


@dataclass(frozen=True)
class StftTable:
    """Values ``V[p, m] = V_chi f(positions[p], freqs[m])``.

    ``freqs`` has shape ``(M, d)``; only frequencies with ``|xi| <= cap`` are
    kept (all of them when ``cap`` is None).
    """

    grid: Grid
    positions: np.ndarray
    freqs: np.ndarray
    values: np.ndarray
    window: object
    label: str = ""
    cap: Optional[float] = None

    def __post_init__(self):
        for name in ("positions", "freqs", "values"):
            object.__setattr__(self, name, _frozen(np.asarray(getattr(self, name))))
        if self.values.shape != (len(self.positions), len(self.freqs)):
            raise ValueError("values must be indexed (position, frequency)")

    @property
    def dimension(self) -> int:
        return self.grid.dimension

    @property
    def radii(self) -> np.ndarray:
        return np.sqrt(np.sum(self.freqs**2, axis=1))

    @property
    def frequency_spacing(self) -> float:
        return self.grid.frequency_spacing

    def scaled(self, a: float) -> "StftTable":
        return StftTable(self.grid, self.positions, self.freqs, a * self.values,
                         self.window, self.label, self.cap)


def _origin_phase(grid: Grid) -> np.ndarray:
    # exp(-i origin.xi) on the full dual grid, FFT order
    w = grid.frequency_axis()
    ph = [np.exp(-1j * grid.origin[i] * w) for i in range(grid.dimension)]
    if grid.dimension == 1:
        return ph[0]
    return ph[0][:, None] * ph[1][None, :]


def _boundary_peak(a: np.ndarray) -> float:
    a = np.abs(a)
    if a.ndim == 1:
        return max(a[0], a[-1])
    return max(a[0].max(), a[-1].max(), a[:, 0].max(), a[:, -1].max())


def fourier_transform(g: SampledSignal, check_support: bool = True) -> np.ndarray:
    """Riemann-sum Fourier transform on the dual grid (FFT order).

    Returns ``dx^d * sum_k exp(-i t_k.xi_m) g(t_k)`` with ``xi_m`` given by
    ``g.grid.frequencies()``.
    """
    s = g.samples
    if check_support:
        peak = np.max(np.abs(s)) if s.size else 0.0
        if peak > 0 and _boundary_peak(s) > BOUNDARY_TOL * peak:
            raise SupportError(f"support of {g.label or 'signal'} touches the grid boundary")
    grid = g.grid
    out = scipy.fft.fftn(s, axes=tuple(range(grid.dimension)))
    return out * grid.spacing**grid.dimension * _origin_phase(grid)


def _window_stencil(window, grid: Grid):
    """Window samples on node offsets with |offset| * dx < radius."""
    dx = grid.spacing
    m = int(math.ceil(window.support_radius / dx))
    offs = np.arange(-m, m + 1)
    if grid.dimension == 1:
        vals = window.evaluate(offs * dx)
    else:
        o1, o2 = np.meshgrid(offs, offs, indexing="ij")
        vals = window.evaluate(np.stack([o1, o2], axis=-1) * dx, dim=2)
    nz = np.nonzero(vals)
    if len(nz[0]) == 0:
        return 0, vals[:1] if grid.dimension == 1 else vals[:1, :1]
    h = int(max(np.max(np.abs(offs[ix])) for ix in nz))
    sl = slice(m - h, m + h + 1)
    return h, vals[sl] if grid.dimension == 1 else vals[sl, sl]


def _cap_mask(grid: Grid, cap: Optional[float]):
    xi = grid.frequencies()
    if grid.dimension == 1:
        xi = xi[:, None]
    else:
        xi = xi.reshape(-1, 2)
    if cap is None:
        order = np.arange(len(xi))
    else:
        r = np.sqrt(np.sum(xi**2, axis=1))
        order = np.nonzero(r <= cap)[0]
    if grid.dimension == 1:
        order = order[np.argsort(xi[order, 0], kind="stable")]
    return order, xi[order]


def stft_discrete(f: SampledSignal, window, positions, cap_factor: Optional[float] = DEFAULT_CAP_FACTOR,
                  workers: int = 1) -> StftTable:
    """Discrete STFT of ``f`` at grid-aligned ``positions``.

    Parameters
    ----------
    f : SampledSignal
    window : WindowSpec or any object with ``evaluate`` and ``support_radius``
    positions : array_like, shape (P,) or (P, d)
        Grid nodes at which the window is centred.
    cap_factor : float or None
        Keep frequencies with ``|xi| <= cap_factor * pi/dx``; None keeps the
        full dual grid.
    workers : int
        FFT worker threads. Results do not depend on it.

    Raises
    ------
    SupportError
        If a translated window would overhang the grid.
    """
    grid = f.grid
    d = grid.dimension
    pos = np.asarray(positions, dtype=float).reshape(-1, d)
    idx = np.array([grid.index_of(p) for p in pos], dtype=int).reshape(-1, d)
    h, stencil = _window_stencil(window, grid)
    bad = [i for i in range(len(idx)) if np.any(idx[i] - h < 0) or np.any(idx[i] + h > grid.n - 1)]
    if bad:
        shown = ", ".join(str(pos[i].tolist()) for i in bad[:5])
        raise SupportError(f"window {getattr(window, 'ident', window)} overhangs the grid at "
                           f"{len(bad)} position(s): {shown}")
    cap = None if cap_factor is None else grid.cap(cap_factor)
    keep, freqs = _cap_mask(grid, cap)
    wc = np.conj(stencil)
    phase = _origin_phase(grid).ravel()[keep] * grid.spacing**d
    vals = np.empty((len(pos), len(keep)), dtype=complex)
    batch = max(1, _BATCH_ELEMENTS // grid.size)
    samples = f.samples
    axes = tuple(range(1, d + 1))
    for start in range(0, len(pos), batch):
        chunk = idx[start:start + batch]
        buf = np.zeros((len(chunk),) + grid.shape, dtype=complex)
        for b, k in enumerate(chunk):
            if d == 1:
                sl = slice(k[0] - h, k[0] + h + 1)
                buf[b, sl] = samples[sl] * wc
            else:
                s1 = slice(k[0] - h, k[0] + h + 1)
                s2 = slice(k[1] - h, k[1] + h + 1)
                buf[b, s1, s2] = samples[s1, s2] * wc
        spec = scipy.fft.fftn(buf, axes=axes, workers=workers).reshape(len(chunk), -1)
        vals[start:start + len(chunk)] = spec[:, keep] * phase
    return StftTable(grid, pos, freqs, vals, window, f.label, cap)


def stft_closed_form(dist, window: WindowSpec, x: float, xi: float) -> complex:
    """Exact ``V_chi f(x, xi)`` for the delta and the Gaussian ``exp(-t^2/2)``.

    The Gaussian case integrates the defining integral adaptively over the
    window support.
    """
    name = getattr(dist, "name", dist)
    if name == "delta":
        return complex(np.conj(window.evaluate(-x)))
    if name == "gaussian":
        r = window.support_radius

        def g(t):
            return np.exp(-t * t / 2) * np.conj(window.evaluate(t - x))

        lo, hi = x - r, x + r
        opts = dict(epsabs=1e-13, epsrel=1e-12, limit=400)
        if xi == 0:
            re = integrate.quad(g, lo, hi, **opts)[0]
            return complex(re)
        re = integrate.quad(g, lo, hi, weight="cos", wvar=xi, **opts)[0]
        im = integrate.quad(g, lo, hi, weight="sin", wvar=xi, **opts)[0]
        return complex(re, -im)
    raise ValueError(f"no closed form for {name!r}; only 'delta' and 'gaussian' are supported")


def parseval_check(f: SampledSignal, window, workers: int = 1) -> float:
    """Relative defect of ``sum |V|^2 dx dxi = (2 pi)^d ||f||^2 ||chi||^2``.

    Uses every position whose window overlaps the support of ``f`` and the
    full dual grid. Returns 0 for the zero signal.
    """
    grid = f.grid
    d = grid.dimension
    dx = grid.spacing
    nf = f.norm2()
    if nf == 0:
        return 0.0
    h, stencil = _window_stencil(window, grid)
    nchi = float(np.sum(np.abs(stencil) ** 2) * dx**d)
    nz = np.argwhere(np.abs(f.samples) > 0)
    lo = np.maximum(nz.min(axis=0) - h, h)
    hi = np.minimum(nz.max(axis=0) + h, grid.n - 1 - h)
    if np.any(nz.min(axis=0) - h < h) or np.any(nz.max(axis=0) + h > grid.n - 1 - h):
        raise SupportError("signal is too close to the grid boundary for a full-position Parseval check")
    ranges = [np.arange(lo[i], hi[i] + 1) for i in range(d)]
    if d == 1:
        idx = ranges[0][:, None]
    else:
        a, b = np.meshgrid(*ranges, indexing="ij")
        idx = np.stack([a.ravel(), b.ravel()], axis=-1)
    pos = np.asarray(grid.origin) + idx * dx
    total = 0.0
    batch = max(1, _BATCH_ELEMENTS // (4 * grid.size))
    for start in range(0, len(pos), batch):
        tab = stft_discrete(f, window, pos[start:start + batch], cap_factor=None, workers=workers)
        total += float(np.sum(np.abs(tab.values) ** 2))
    total *= dx**d * grid.frequency_spacing**d
    expected = (2 * np.pi) ** d * nf * nchi
    return abs(total - expected) / expected
