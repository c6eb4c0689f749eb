"""Discrete Fourier and short-time Fourier transforms with Riemann-sum normalization.

Convention: ``F(xi) = sum_x f(x) exp(-2 pi i xi x) dx^d`` on the dual grid
``xi_k = k / (N dx)``, ``k = -N/2 .. N/2-1`` (spectra are stored centered).
With this convention the discrete Parseval identity holds with both norms
Riemann-normalized (``dx^d`` in space, ``dxi^d`` in frequency).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .signals import FLOOR, Grid, SampledSignal, WindowSpec


@dataclass(frozen=True)
class FreqGrid:
    extent: tuple
    spacing: tuple  # dxi per axis

    def axis(self, k: int) -> np.ndarray:
        n = self.extent[k]
        return (np.arange(n) - n // 2) * self.spacing[k]

    def coords(self) -> list:
        return np.meshgrid(*[self.axis(k) for k in range(len(self.extent))], indexing="ij")

    @property
    def cell(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def nyquist(self) -> float:
        return min(self.extent[k] // 2 * self.spacing[k] for k in range(len(self.extent)))

    def to_dict(self) -> dict:
        return {"extent": list(self.extent), "spacing": list(self.spacing), "centered": True}


def dual_grid(grid: Grid) -> FreqGrid:
    return FreqGrid(grid.extent, tuple(1.0 / (n * h) for n, h in zip(grid.extent, grid.spacing)))


@dataclass(frozen=True, eq=False)
class Spectrum:
    values: np.ndarray
    freq: FreqGrid
    source: Grid

    @property
    def dimension(self) -> int:
        return len(self.freq.extent)

    def radius(self) -> np.ndarray:
        xs = self.freq.coords()
        return np.sqrt(sum(x * x for x in xs))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.freq.cell))


def _phase(grid: Grid, freq: FreqGrid, sign: float) -> np.ndarray:
    xs = freq.coords()
    arg = sum(xs[k] * grid.origin[k] for k in range(grid.dimension))
    return np.exp(sign * 2j * np.pi * arg)


def dft(f: SampledSignal) -> Spectrum:
    grid = f.grid
    fg = dual_grid(grid)
    F = np.fft.fftshift(np.fft.fftn(f.values)) * grid.cell
    return Spectrum(F * _phase(grid, fg, -1.0), fg, grid)


def idft(F: Spectrum, name: str = "") -> SampledSignal:
    grid = F.source
    vals = F.values * _phase(grid, F.freq, 1.0)
    v = np.fft.ifftn(np.fft.ifftshift(vals)) / grid.cell
    return SampledSignal(v, grid, name)


# ----------------------------------------------------------------------------
# fitting helpers


def linear_fit(x: np.ndarray, y: np.ndarray):
    """Least-squares ``y = intercept + slope * x``; returns ``(slope, intercept, r2)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xm = x.mean()
    ym = y.mean()
    dx = x - xm
    dy = y - ym
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise ValueError("degenerate regressor")
    slope = float(dx @ dy) / sxx
    intercept = ym - slope * xm
    syy = float(dy @ dy)
    if syy == 0.0:
        r2 = 1.0
    else:
        res = dy - slope * dx
        r2 = 1.0 - float(res @ res) / syy
    return slope, float(intercept), r2


def tail_envelope(r: np.ndarray, amp: np.ndarray):
    """Unique radii and the tail supremum ``E(r) = max{amp(r') : r' >= r}``."""
    r = np.asarray(r, dtype=np.float64).ravel()
    amp = np.abs(np.asarray(amp)).ravel()
    radii, inv = np.unique(np.round(r, 12), return_inverse=True)
    per = np.zeros(radii.shape[0])
    np.maximum.at(per, inv, amp)
    env = np.maximum.accumulate(per[::-1])[::-1]
    return radii, env


@dataclass
class PWFit:
    h: float
    r2: float
    intercept: float
    n_points: int
    band: tuple


def paley_wiener_fit(F: Spectrum, seq, floor: float = FLOOR, min_points: int = 8) -> PWFit:
    """Fit ``ln E(xi) = c - h M(|xi|)`` on the outer half of the usable band.

    ``E`` is the tail supremum of ``|F|``; samples whose envelope falls below
    ``floor`` times the spectral peak are discarded, and the fit uses the
    outer half (in radius) of what remains.
    """
    from .sequences import AssociatedFunction

    af = seq if isinstance(seq, AssociatedFunction) else AssociatedFunction(seq)
    amp = np.abs(F.values)
    peak = float(amp.max()) if amp.size else 0.0
    if not peak > 0:
        raise ValueError("no usable points: spectrum is identically zero")
    radii, env = tail_envelope(F.radius(), amp)
    ok = (env >= floor * peak) & (radii > 0)
    if not np.any(ok):
        raise ValueError("no usable points above the noise floor")
    top = radii[ok].max()
    sel = ok & (radii >= 0.5 * top)
    n = int(np.count_nonzero(sel))
    if n < min_points:
        raise ValueError(f"only {n} usable points (need {min_points})")
    m = af.eval_many(radii[sel])
    slope, c, r2 = linear_fit(m, np.log(env[sel]))
    return PWFit(-slope, r2, c, n, (float(radii[sel].min()), float(top)))


# ----------------------------------------------------------------------------
# short-time Fourier transform


@dataclass(frozen=True, eq=False)
class StftArray:
    """``values[pos..., freq...]``; positions are grid nodes ``origin + stride*i*dx``."""

    values: np.ndarray
    grid: Grid
    stride: int
    window: WindowSpec
    positions: tuple  # per-axis position coordinate arrays
    freq: FreqGrid

    @property
    def dimension(self) -> int:
        return self.grid.dimension

    @property
    def position_cell(self) -> float:
        return float(np.prod([self.stride * h for h in self.grid.spacing]))

    def norm(self) -> float:
        """Riemann L2 norm over phase space."""
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.position_cell * self.freq.cell))

    def sidecar(self) -> dict:
        return {"grid": self.grid.to_dict(), "stride": self.stride, "window": self.window.to_dict(),
                "freq": self.freq.to_dict(), "shape": list(self.values.shape)}


def window_values(g: WindowSpec, grid: Grid) -> np.ndarray:
    """Window sampled on the periodic offsets ``y - x`` of ``grid`` (centered at offset 0).

    Offsets are wrapped to ``[-N/2, N/2)`` samples, which is exact whenever the
    window is negligible beyond half the grid; the result is an array indexed by
    offset in FFT order.
    """
    offs = []
    for k in range(grid.dimension):
        n = grid.extent[k]
        i = np.arange(n)
        i = np.where(i < n // 2, i, i - n)
        offs.append(i * grid.spacing[k])
    mesh = np.meshgrid(*offs, indexing="ij")
    c = g.center if g.center else (0.0,) * grid.dimension
    r = np.sqrt(sum((mesh[k] - c[k]) ** 2 for k in range(grid.dimension)))
    return g.profile(r)


def _check_window(g: WindowSpec, grid: Grid):
    for k in range(grid.dimension):
        half = 0.5 * grid.extent[k] * grid.spacing[k]
        if g.kind == "gevrey_bump" and g.R >= half:
            raise ValueError("window support does not fit inside the grid")
        if g.kind == "gaussian" and g.radius >= 2 * half:
            raise ValueError("gaussian window is not negligible on the grid")


def _positions(grid: Grid, stride: int):
    for n in grid.extent:
        if stride < 1 or n % stride:
            raise ValueError(f"stride {stride} does not divide extent {n}")
    return tuple(np.arange(0, n, stride) for n in grid.extent)


def stft(f: SampledSignal, g: WindowSpec, stride: int = 1) -> StftArray:
    """``V_g f(x, xi) = sum_y f(y) conj(g(y - x)) exp(-2 pi i xi y) dy^d``."""
    grid = f.grid
    _check_window(g, grid)
    pos = _positions(grid, stride)
    w = np.conj(window_values(g, grid))
    fg = dual_grid(grid)
    phase = _phase(grid, fg, -1.0) * grid.cell
    fv = f.values
    d = grid.dimension
    shape = tuple(len(p) for p in pos) + grid.extent
    out = np.empty(shape, dtype=np.complex128)
    for idx in np.ndindex(*[len(p) for p in pos]):
        shift = tuple(int(pos[k][idx[k]]) for k in range(d))
        gx = np.roll(w, shift, axis=tuple(range(d)))
        out[idx] = np.fft.fftshift(np.fft.fftn(fv * gx)) * phase
    positions = tuple(grid.origin[k] + pos[k] * grid.spacing[k] for k in range(d))
    return StftArray(out, grid, stride, g, positions, fg)


def stft_profile(f: SampledSignal, g: WindowSpec, stride: int = 1, p: float = 2.0) -> Spectrum:
    """``(sum_x |V_g f(x, xi)|^p dx^d)^{1/p}`` (max for ``p = inf``), one position at a time.

    Same values as aggregating :func:`stft` over positions, without holding the
    full phase-space array in memory.
    """
    grid = f.grid
    _check_window(g, grid)
    pos = _positions(grid, stride)
    w = np.conj(window_values(g, grid))
    fg = dual_grid(grid)
    d = grid.dimension
    fv = f.values
    acc = np.full(grid.extent, -np.inf)
    for idx in np.ndindex(*[len(q) for q in pos]):
        shift = tuple(int(pos[k][idx[k]]) for k in range(d))
        with np.errstate(divide="ignore"):
            la = np.log(np.abs(np.fft.fftn(fv * np.roll(w, shift, axis=tuple(range(d))))))
        if np.isinf(p):
            np.maximum(acc, la, out=acc)
        else:
            acc = np.logaddexp(acc, p * la)
    cell = float(np.prod([stride * h for h in grid.spacing]))
    if not np.isinf(p):
        acc = (acc + math.log(cell)) / p
    amp = np.fft.fftshift(np.exp(acc)) * grid.cell
    return Spectrum(amp.astype(np.complex128), fg, grid)


def adjoint_stft(F: StftArray, g: WindowSpec) -> SampledSignal:
    """``V_g^* F(y) = sum_{x, xi} F(x, xi) g(y - x) exp(2 pi i xi y) dx_s^d dxi^d``."""
    grid = F.grid
    d = grid.dimension
    pos = _positions(grid, F.stride)
    w = window_values(g, grid)
    phase = _phase(grid, F.freq, 1.0)
    n_tot = int(np.prod(grid.extent))
    acc = np.zeros(grid.extent, dtype=np.complex128)
    for idx in np.ndindex(*[len(p) for p in pos]):
        shift = tuple(int(pos[k][idx[k]]) for k in range(d))
        # sum_xi F e^{2 pi i xi y} dxi  ==  ifft * N * dxi
        col = np.fft.ifftn(np.fft.ifftshift(F.values[idx] * phase)) * n_tot * F.freq.cell
        acc += col * np.roll(w, shift, axis=tuple(range(d)))
    acc *= F.position_cell
    return SampledSignal(acc, grid, "adjoint")


def window_inner(g: WindowSpec, psi: WindowSpec, grid: Grid) -> complex:
    """``<g, psi>`` on the grid (both centered at the origin offset)."""
    return complex(np.sum(window_values(g, grid) * np.conj(window_values(psi, grid))) * grid.cell)


def invert_stft(V: StftArray, g: WindowSpec) -> SampledSignal:
    """Reconstruct ``f`` from ``V = V_psi f`` with synthesis window ``g``."""
    ip = window_inner(g, V.window, V.grid)
    if abs(ip) < 1e-300:
        raise ValueError("<g, psi> = 0: windows cannot be paired for inversion")
    rec = adjoint_stft(V, g)
    return rec.with_values(rec.values / ip, "reconstruction")


def window_signal(g: WindowSpec, grid: Grid) -> SampledSignal:
    """The window as a signal centered at the middle of ``grid`` (for norms)."""
    return SampledSignal(np.fft.fftshift(window_values(g, grid)), grid, g.kind)


# ----------------------------------------------------------------------------
# growth probe


@dataclass
class GrowthProbe:
    h_space: float
    eps_freq: float
    x_center: tuple
    support_ok: bool | None
    note: str = ""


def stft_growth_probe(V: StftArray, seq, f: SampledSignal | None = None) -> GrowthProbe:
    """Fit ``|V(x, xi)| <= C exp(-h M(|x - x_c|)) exp(eps M(|xi|))``.

    ``h_space`` comes from the spatial profile at ``xi = 0`` and ``eps_freq``
    from the frequency profile at ``x = x_c`` (the position of the largest
    ``|V(x, 0)|``). When the window is compactly supported and ``f`` is given,
    ``support_ok`` checks that ``V`` vanishes outside ``supp f + supp g``.
    """
    from .sequences import AssociatedFunction

    af = seq if isinstance(seq, AssociatedFunction) else AssociatedFunction(seq)
    d = V.dimension
    zero = tuple(n // 2 for n in V.freq.extent)
    npos = V.values.shape[:d]
    slab = np.abs(V.values[(Ellipsis,) + zero])
    if not slab.max() > 0:
        raise ValueError("degenerate profile: V vanishes at zero frequency")
    ic = np.unravel_index(int(np.argmax(slab)), npos)
    xc = tuple(float(V.positions[k][ic[k]]) for k in range(d))
    pm = np.meshgrid(*V.positions, indexing="ij")
    rx = np.sqrt(sum((pm[k] - xc[k]) ** 2 for k in range(d)))
    radii, env = tail_envelope(rx, slab)
    keep = (env >= FLOOR * slab.max()) & (radii > 0)
    if np.count_nonzero(keep) < 3:
        raise ValueError("degenerate spatial profile")
    h = -linear_fit(af.eval_many(radii[keep]), np.log(env[keep]))[0]
    prof = np.abs(V.values[ic])
    fr = np.sqrt(sum(x * x for x in V.freq.coords()))
    radii, env = tail_envelope(fr, prof)
    keep = (env >= FLOOR * prof.max()) & (radii > 0)
    note = ""
    if np.count_nonzero(keep) < 3:
        raise ValueError("degenerate frequency profile")
    eps = linear_fit(af.eval_many(radii[keep]), np.log(env[keep]))[0]
    support_ok = None
    if V.window.kind == "gevrey_bump" and f is not None:
        support_ok = _support_check(V, f)
    return GrowthProbe(h, eps, xc, support_ok, note)


def _support_check(V: StftArray, f: SampledSignal) -> bool:
    d = V.dimension
    amp = np.abs(f.values)
    nz = np.nonzero(amp > 1e-12 * amp.max())
    R = V.window.R
    pm = np.meshgrid(*V.positions, indexing="ij")
    inside = np.ones(pm[0].shape, dtype=bool)
    for k in range(d):
        ax = f.grid.axis(k)
        lo = ax[nz[k].min()] - R - f.spacing[k]
        hi = ax[nz[k].max()] + R + f.spacing[k]
        inside &= (pm[k] >= lo) & (pm[k] <= hi)
    mag = np.abs(V.values).reshape(pm[0].shape + (-1,)).max(axis=-1)
    return bool(np.all(mag[~inside] <= 1e-12 * max(mag.max(), 1e-300)))
