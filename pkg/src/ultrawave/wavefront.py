"""Cone semi-norms and wave-front set estimators.

Finiteness of a cone semi-norm cannot be decided from finitely many samples,
so each (position, direction) cell is classified by a decay fit: the
localized spectrum (FL kind) or the p-aggregated STFT frequency profile (MOD
kind) is reduced to a radial profile on the cone, the profile's tail envelope
is regressed against ``M(|xi|)`` and the slope ``tau`` (weight and ``q``
included) is compared with a threshold ``tau* < 0``. A cell is singular when
``tau > tau*``.

The slope decomposes as ``tau = tau0 + w + (d/q) * lam`` where ``tau0`` is the
weight-free slope, ``w`` the slope of ``log omega`` (exactly ``N`` for
``exp(N M)``) and ``lam >= 0`` the slope of ``log|xi|``; this makes the
monotonicity in ``N`` and in ``q`` exact at the classification level.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from . import __version__
from .cones import Cone, DirectionCover, cover as make_cover, cover_from_dict
from .kernels import ring_profile
from .sequences import AssociatedFunction, DefiningSequence, gevrey_sequence, sequence_from_dict
from .signals import FLOOR, SampledSignal, WindowSpec, bump_profile, window_from_dict
from .spectral import Spectrum, StftArray, dft, linear_fit, stft, stft_profile, tail_envelope
from .weights import Weight, assoc_weight, weight_from_dict

KINDS = ("FL", "MOD", "GEVREY", "FAMILY_INF", "FAMILY_SUP")
MIN_POINTS = 8
DEFAULT_THRESHOLD = -0.05
DEFAULT_CUTOFF_RADIUS = 68  # samples
DEFAULT_STRIDE = 8
DEFAULT_ANNULUS = (1.0 / 8.0, 1.0 / 2.0)  # fractions of the Nyquist radius
DEFAULT_FAMILY = (1.0, 2.0, 4.0)

STATUS_OK = "ok"
STATUS_ZERO = "zero"
STATUS_UNDERFLOW = "underflow"
STATUS_FAILED = "fit_failed"


def thread_count(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    try:
        return max(1, int(os.environ.get("ULTRAWAVE_THREADS", "1")))
    except ValueError:
        return 1


# ----------------------------------------------------------------------------
# semi-norms


@dataclass(frozen=True)
class ConeSeminormParams:
    q: float
    weight: Weight | None
    cone: Cone | None
    annulus: tuple | None

    def __post_init__(self):
        if not (1 <= self.q <= math.inf):
            raise ValueError("q must lie in [1, inf]")
        if self.annulus is not None:
            lo, hi = self.annulus
            if not 0 < lo < hi:
                raise ValueError("annulus needs 0 < r_min < r_max")


def _log_norm(log_vals: np.ndarray, q: float, log_cell: float) -> float:
    if log_vals.size == 0:
        raise ValueError("empty cone-annulus intersection")
    m = float(np.max(log_vals))
    if not np.isfinite(m):
        return -math.inf
    if math.isinf(q):
        return m
    s = float(np.sum(np.exp(q * (log_vals - m))))
    return m + (math.log(s) + log_cell) / q


def _region(points: np.ndarray, radius: np.ndarray, cone: Cone | None, annulus) -> np.ndarray:
    sel = np.ones(radius.shape, dtype=bool)
    if cone is not None:
        sel &= cone.contains(points)
    if annulus is not None:
        sel &= (radius >= annulus[0]) & (radius <= annulus[1])
    return sel


def _freq_points(F_coords):
    return np.stack(F_coords, axis=-1)


def fl_cone_seminorm(f: SampledSignal, params: ConeSeminormParams, log: bool = False) -> float:
    """``(sum_{Gamma, annulus} |f^ omega|^q dxi)^{1/q}`` (max for ``q = inf``)."""
    F = dft(f)
    pts = _freq_points(F.freq.coords())
    rad = F.radius()
    if params.annulus is not None and params.annulus[1] > F.freq.nyquist * math.sqrt(f.dimension) + 1e-12:
        raise ValueError("annulus exceeds the frequency grid")
    sel = _region(pts, rad, params.cone, params.annulus)
    with np.errstate(divide="ignore"):
        la = np.log(np.abs(F.values[sel]))
    if params.weight is not None:
        la = la + params.weight.log_eval(pts[sel] if f.dimension > 1 else pts[sel][:, 0])
    out = _log_norm(la, params.q, math.log(F.freq.cell))
    return out if log else (math.exp(out) if out < 709 else math.inf)


def mod_cone_seminorm(f: SampledSignal, g: WindowSpec, p: float, q: float, weight: Weight | None,
                      cone: Cone | None, annulus, stride: int = 1, log: bool = False,
                      V: StftArray | None = None) -> float:
    """``(sum_xi (sum_x |V_g f(x, xi) omega|^p dx)^{q/p} dxi)^{1/q}`` over the cone-annulus."""
    if not (1 <= p <= math.inf) or not (1 <= q <= math.inf):
        raise ValueError("p and q must lie in [1, inf]")
    if V is None:
        V = stft(f, g, stride)
    d = V.dimension
    pts = _freq_points(V.freq.coords())
    rad = np.sqrt(np.sum(pts * pts, axis=-1))
    sel = _region(pts, rad, cone, annulus)
    flat = np.abs(V.values).reshape((-1,) + V.freq.extent)[:, sel]
    with np.errstate(divide="ignore"):
        la = np.log(flat)
    if weight is not None:
        la = la + weight.log_eval(pts[sel] if d > 1 else pts[sel][:, 0])[None, :]
    if la.shape[1] == 0:
        raise ValueError("empty cone-annulus intersection")
    lcx = math.log(V.position_cell)
    inner = np.array([_log_norm(la[:, j], p, lcx) for j in range(la.shape[1])])
    out = _log_norm(inner, q, math.log(V.freq.cell))
    return out if log else (math.exp(out) if out < 709 else math.inf)


# ----------------------------------------------------------------------------
# decay fits


@dataclass
class DecayFit:
    tau: float
    intercept: float
    r2: float
    n_points: int
    valid: bool
    status: str = STATUS_OK
    lam: float = 0.0  # slope of log|xi| against the regressor


def _fit_profile(radii: np.ndarray, log_prof: np.ndarray, xvals: np.ndarray, log_floor: float,
                 n_geom: int) -> DecayFit:
    """Envelope-and-regress on a radial profile (radii ascending, ``-inf`` = empty)."""
    if n_geom < MIN_POINTS:
        return DecayFit(math.nan, math.nan, math.nan, n_geom, False, STATUS_FAILED)
    env = np.maximum.accumulate(log_prof[::-1])[::-1]
    keep = np.isfinite(env) & (env >= log_floor)
    n = int(np.count_nonzero(keep))
    if not np.any(np.isfinite(log_prof)):
        return DecayFit(-math.inf, math.nan, math.nan, 0, True, STATUS_ZERO)
    if n < MIN_POINTS:
        return DecayFit(-math.inf, math.nan, math.nan, n, True, STATUS_UNDERFLOW)
    x = xvals[keep]
    try:
        slope, icpt, r2 = linear_fit(x, env[keep])
        lam = linear_fit(x, np.log(radii[keep]))[0]
    except ValueError:
        return DecayFit(math.nan, math.nan, math.nan, n, False, STATUS_FAILED)
    return DecayFit(slope, icpt, r2, n, True, STATUS_OK, lam)


def _ring_geometry(coords, dnu: float, cone: Cone | None, annulus):
    """Ring indices (radius / dnu rounded) of points in cone-annulus."""
    pts = np.stack([c.ravel() for c in coords], axis=-1)
    rad = np.sqrt(np.sum(pts * pts, axis=-1))
    sel = _region(pts, rad, cone, annulus)
    ring = np.rint(rad / dnu).astype(np.int64)
    return sel, ring


def directional_decay_fit(data, cone: Cone | None, af, annulus=None, p: float = math.inf,
                          floor: float | None = None, regressor=None) -> DecayFit:
    """Slope of the log tail envelope of ``data`` against ``M(|xi|)`` on a cone-annulus.

    ``data`` is a :class:`Spectrum` or a :class:`StftArray` (reduced to its
    p-aggregated frequency profile). ``floor`` is an absolute amplitude floor;
    by default ``1e-14`` times the peak amplitude.
    """
    af = af if isinstance(af, AssociatedFunction) else AssociatedFunction(af)
    if isinstance(data, StftArray):
        amp = _aggregate(np.abs(data.values).reshape((-1,) + data.freq.extent), p, data.position_cell)
        freq = data.freq
    else:
        amp = np.abs(data.values)
        freq = data.freq
    dnu = min(freq.spacing)
    if annulus is None:
        annulus = (DEFAULT_ANNULUS[0] * freq.nyquist, DEFAULT_ANNULUS[1] * freq.nyquist)
    sel, ring = _ring_geometry(freq.coords(), dnu, cone, annulus)
    peak = float(amp.max())
    if floor is None:
        floor = FLOOR * peak
    n_r = int(ring.max()) + 1
    with np.errstate(divide="ignore"):
        la = np.log(amp.ravel())
    prof, _ = ring_profile(la, ring, sel.astype(np.uint8), n_r, math.inf)
    present = np.bincount(ring[sel], minlength=n_r)[:n_r] > 0
    radii = np.nonzero(present)[0] * dnu
    xfun = regressor or af.eval_many
    return _fit_profile(radii, prof[present], xfun(radii), math.log(floor) if floor > 0 else -math.inf,
                        int(np.count_nonzero(present)))


def _aggregate(amp: np.ndarray, p: float, cell: float) -> np.ndarray:
    """``(sum_x amp^p cell)^{1/p}`` along axis 0, ``max`` for ``p = inf``."""
    if math.isinf(p):
        return amp.max(axis=0)
    m = amp.max(axis=0)
    safe = np.where(m > 0, m, 1.0)
    s = np.sum((amp / safe) ** p, axis=0) * cell
    return np.where(m > 0, safe * s ** (1.0 / p), 0.0)


# ----------------------------------------------------------------------------
# estimator configuration


@dataclass
class WFConfig:
    kind: str = "FL"
    q: float = math.inf
    p: float = 2.0
    threshold: float = DEFAULT_THRESHOLD
    position_stride: int = DEFAULT_STRIDE
    cutoff_radius: int = DEFAULT_CUTOFF_RADIUS
    cutoff_order: float | None = None
    window: WindowSpec | None = None
    mod_stride: int = 16
    annulus: tuple = DEFAULT_ANNULUS
    n_dir: int = 16
    overlap: float = 1.5
    fit_ratio: float = 3.0
    smoothing: bool = True
    threads: int | None = None

    def validate(self, dimension: int):
        if self.kind not in ("FL", "MOD", "GEVREY"):
            raise ValueError(f"estimator kind must be FL, MOD or GEVREY, got {self.kind!r}")
        if not (1 <= self.q <= math.inf) or not (1 <= self.p <= math.inf):
            raise ValueError("p and q must lie in [1, inf]")
        if not self.threshold < 0:
            raise ValueError("threshold must be negative")
        lo, hi = self.annulus
        if not 0 < lo < hi <= 1:
            raise ValueError("annulus fractions need 0 < r_min < r_max <= 1 (of Nyquist)")
        if self.position_stride < 1 or self.mod_stride < 1 or self.cutoff_radius < 4:
            raise ValueError("strides must be >= 1 and the cutoff radius >= 4 samples")
        if self.overlap < 1:
            raise ValueError("overlap must be >= 1")

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["q"] = "inf" if math.isinf(self.q) else self.q
        d["p"] = "inf" if math.isinf(self.p) else self.p
        d["window"] = None if self.window is None else self.window.to_dict()
        d["annulus"] = list(self.annulus)
        d.pop("threads")
        return d


def _num(v):
    return math.inf if v in ("inf", "Infinity", None) else float(v)


def config_from_dict(d: dict) -> WFConfig:
    c = WFConfig()
    for k, v in d.items():
        if k in ("q", "p"):
            setattr(c, k, _num(v))
        elif k == "window":
            c.window = None if v is None else window_from_dict(v)
        elif k == "annulus":
            c.annulus = tuple(float(x) for x in v)
        elif hasattr(c, k):
            setattr(c, k, v)
        else:
            raise ValueError(f"unknown estimator option {k!r}")
    return c


def default_cutoff_order(af: AssociatedFunction) -> float:
    """Gevrey order of the canonical cutoff: strictly below the sequence order."""
    s = af.seq.params.get("s") if af.seq.kind == "gevrey" else None
    return 0.5 * (1.0 + float(s)) if s else 1.5


# ----------------------------------------------------------------------------
# report


@dataclass
class WaveFrontReport:
    kind: str
    params: dict
    grid: dict
    positions: list  # per-axis index arrays of cell centers
    coords: list  # per-axis coordinates of cell centers
    cover: DirectionCover
    singular: np.ndarray  # bool (*npos, ndir)
    tau: np.ndarray
    r2: np.ndarray
    n_points: np.ndarray
    status: np.ndarray  # str codes
    seminorms: np.ndarray | None = None  # (*npos, ndir, n_annuli) natural logs
    tau0: np.ndarray | None = None
    lam: np.ndarray | None = None
    smoothing: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple:
        return self.singular.shape

    def singular_cells(self) -> set:
        return {tuple(int(i) for i in idx) for idx in zip(*np.nonzero(self.singular))}

    def singular_positions(self) -> list:
        """Coordinates of positions with at least one singular direction."""
        any_dir = self.singular.any(axis=-1)
        out = []
        for idx in zip(*np.nonzero(any_dir)):
            out.append(tuple(float(self.coords[k][idx[k]]) for k in range(len(idx))))
        return out

    def singular_directions(self) -> set:
        return {int(j) for j in np.nonzero(self.singular.reshape(-1, self.shape[-1]).any(axis=0))[0]}

    def is_empty(self) -> bool:
        return not bool(self.singular.any())

    def failure_fraction(self) -> float:
        return float(np.mean(self.status == STATUS_FAILED)) if self.status.size else 0.0

    def compatible(self, other: "WaveFrontReport") -> bool:
        return (self.shape == other.shape and self.grid == other.grid
                and all(np.array_equal(a, b) for a, b in zip(self.positions, other.positions)))

    # -- serialization ------------------------------------------------------

    def to_dict(self, config: dict | None = None) -> dict:
        cells = []
        for idx in np.ndindex(*self.shape):
            c = {"pos": [int(v) for v in idx[:-1]], "dir": int(idx[-1]),
                 "singular": bool(self.singular[idx]), "tau": _jf(self.tau[idx]),
                 "r2": _jf(self.r2[idx]), "n_points": int(self.n_points[idx]),
                 "status": str(self.status[idx])}
            if self.seminorms is not None:
                c["seminorms"] = [_jf(math.exp(v)) if v < 709 else None for v in self.seminorms[idx]]
            cells.append(c)
        d = {"version": __version__, "kind": self.kind, "params": self.params, "grid": self.grid,
             "positions": [[float(x) for x in c] for c in self.coords],
             "position_index": [[int(x) for x in p] for p in self.positions],
             "cover": self.cover.to_dict(), "cells": cells,
             "smoothing": {"applied": bool(self.params.get("smoothing", True)),
                           "flipped": [list(map(int, c)) for c in self.smoothing]},
             "summary": {"n_cells": int(self.singular.size), "n_singular": int(self.singular.sum()),
                         "failure_fraction": self.failure_fraction(),
                         "singular_positions": [list(p) for p in self.singular_positions()],
                         "singular_directions": sorted(self.singular_directions())}}
        if self.extra:
            d["extra"] = {k: (v.astype(int).tolist() if isinstance(v, np.ndarray) else v)
                          for k, v in self.extra.items()}
        if config is not None:
            d["config"] = config
        return d

    def to_json(self, config: dict | None = None) -> str:
        return json.dumps(self.to_dict(config), indent=1, sort_keys=True)

    def to_csv(self) -> str:
        lines = ["x0,direction_angle,singular,tau"]
        angles = self.cover.angles()
        for idx in np.ndindex(*self.shape):
            x = ";".join(f"{self.coords[k][idx[k]]:.12g}" for k in range(len(self.positions)))
            t = self.tau[idx]
            ts = "" if not np.isfinite(t) else f"{t:.12g}"
            lines.append(f"{x},{angles[idx[-1]]:.12g},{int(self.singular[idx])},{ts}")
        return "\n".join(lines) + "\n"


def _jf(v):
    v = float(v)
    return v if math.isfinite(v) else None


def report_from_dict(d: dict) -> WaveFrontReport:
    cov = cover_from_dict(d["cover"])
    positions = [np.array(p, dtype=np.int64) for p in d["position_index"]]
    coords = [np.array(c) for c in d["positions"]]
    shape = tuple(len(p) for p in positions) + (len(cov),)
    sing = np.zeros(shape, dtype=bool)
    tau = np.full(shape, np.nan)
    r2 = np.full(shape, np.nan)
    npts = np.zeros(shape, dtype=np.int64)
    status = np.full(shape, STATUS_OK, dtype=object)
    for c in d["cells"]:
        idx = tuple(c["pos"]) + (c["dir"],)
        sing[idx] = c["singular"]
        if c["tau"] is not None:
            tau[idx] = c["tau"]
        elif c["status"] in (STATUS_ZERO, STATUS_UNDERFLOW):
            tau[idx] = -np.inf  # null in JSON; the status says the tail vanished
        r2[idx] = np.nan if c["r2"] is None else c["r2"]
        npts[idx] = c["n_points"]
        status[idx] = c["status"]
    return WaveFrontReport(d["kind"], d["params"], d["grid"], positions, coords, cov, sing, tau, r2,
                           npts, status, smoothing=[tuple(c) for c in d["smoothing"]["flipped"]])


# ----------------------------------------------------------------------------
# closure pass


def close_positions(sing: np.ndarray):
    """Fill regular cells lying strictly between two singular neighbours along a
    position axis (same direction); repeat until stable. Returns ``(closed, flipped)``."""
    out = sing.copy()
    flipped = []
    npos = out.ndim - 1
    while True:
        add = np.zeros_like(out)
        for ax in range(npos):
            if out.shape[ax] < 3:
                continue
            lo = [slice(None)] * out.ndim
            mid = [slice(None)] * out.ndim
            hi = [slice(None)] * out.ndim
            lo[ax] = slice(0, -2)
            mid[ax] = slice(1, -1)
            hi[ax] = slice(2, None)
            cand = out[tuple(lo)] & out[tuple(hi)] & ~out[tuple(mid)]
            view = add[tuple(mid)]
            view |= cand
        if not add.any():
            return out, flipped
        flipped.extend(tuple(int(i) for i in idx) for idx in zip(*np.nonzero(add)))
        out |= add


# ----------------------------------------------------------------------------
# the cell engine


class _Engine:
    """Precomputed geometry for one (grid, config) pair."""

    def __init__(self, f: SampledSignal, af: AssociatedFunction, cfg: WFConfig, cov: DirectionCover,
                 n_annuli: int = 3, regressor=None):
        self.f = f
        self.af = af
        self.cfg = cfg
        self.cov = cov
        self.d = f.dimension
        g = f.grid
        R = int(cfg.cutoff_radius)
        self.R = R
        for n in g.extent:
            if n < 2 * R + 1:
                raise ValueError(f"grid extent {n} too small for cutoff radius {R}")
        self.B = sfft.next_fast_len(2 * R + 2)
        B = self.B
        dx = g.spacing[0]
        if any(abs(h - dx) > 1e-12 * dx for h in g.spacing):
            raise ValueError("estimators need equal spacing on all axes")
        self.dx = dx
        self.s_w = cfg.cutoff_order or default_cutoff_order(af)
        off = np.arange(B) - B // 2
        mesh = np.meshgrid(*([off] * self.d), indexing="ij")
        self.off_r = np.sqrt(sum(m * m for m in mesh))  # in samples
        self.phi = bump_profile(self.off_r / R, self.s_w)
        # positions: interior nodes on the stride lattice
        self.positions = []
        for n in g.extent:
            idx = np.arange(0, n, cfg.position_stride)
            self.positions.append(idx[(idx - R >= 0) & (idx + R <= n - 1)])
        if any(len(p) == 0 for p in self.positions):
            raise ValueError("no interior positions: grid too small for the cutoff")
        # frequency geometry on the box (FFT order)
        nu = sfft.fftfreq(B, d=dx)
        fm = np.meshgrid(*([nu] * self.d), indexing="ij")
        self.dnu = 1.0 / (B * dx)
        nyq = 0.5 / dx
        ann = (cfg.annulus[0] * nyq, cfg.annulus[1] * nyq)
        self.annulus = ann
        pts = np.stack([m.ravel() for m in fm], axis=-1)
        rad = np.sqrt(np.sum(pts * pts, axis=-1))
        ring = np.rint(rad / self.dnu).astype(np.int64)
        self.n_rings = int(ring.max()) + 1
        inner = cov.cones if self.d == 1 else [c.shrink(cfg.fit_ratio) for c in cov.cones]
        self.fit_sets = []
        for c in inner:
            sel = _region(pts, rad, c, ann)
            ids = np.nonzero(sel)[0]
            rings = ring[ids]
            present = np.unique(rings)
            self.fit_sets.append((ids, rings, present))
        xfun = regressor or af.eval_many
        self.ring_x = np.full(self.n_rings, np.nan)
        allr = np.arange(self.n_rings)
        pos_r = allr[allr > 0]
        self.ring_x[pos_r] = xfun(pos_r * self.dnu)
        self.ring_rad = allr * self.dnu
        # seminorm regions: report cones, nested annuli [r_min, r_min + j/n (r_max - r_min)]
        self.n_annuli = n_annuli
        self.sn_sets = []
        for c in cov:
            sets = []
            for j in range(1, n_annuli + 1):
                top = ann[0] + (ann[1] - ann[0]) * j / n_annuli
                sets.append(np.nonzero(_region(pts, rad, c, (ann[0], top)))[0])
            self.sn_sets.append(sets)
        self.pts = pts
        self.rad = rad
        self.log_cell_nu = self.d * math.log(self.dnu)
        self.weight_cache = {}
        # analysis window for MOD
        if cfg.kind == "MOD":
            w = cfg.window or WindowSpec("gaussian", sigma=R * dx / 4.0)
            self.window = w
            ms = cfg.mod_stride
            k = np.arange(-(R // ms) * ms, R + 1, ms)
            self.mod_offsets = k
            self.g_cache = {}
        peak_phi = float(np.sum(self.phi)) * dx ** self.d
        fmax = float(np.max(np.abs(f.values)))
        self.amp_bound = fmax * peak_phi
        if cfg.kind == "MOD" and not math.isinf(cfg.p):
            span = (len(self.mod_offsets) * cfg.mod_stride * dx) ** self.d
            self.amp_bound *= span ** (1.0 / cfg.p)
        self.log_floor = math.log(FLOOR * self.amp_bound) if self.amp_bound > 0 else -math.inf

    # -- local data ---------------------------------------------------------

    def _box(self, center: tuple) -> np.ndarray:
        B = self.B
        vals = self.f.values
        out = np.zeros((B,) * self.d, dtype=np.complex128)
        src = []
        dst = []
        for k in range(self.d):
            a = center[k] - B // 2
            lo = max(a, 0)
            hi = min(a + B, vals.shape[k])
            src.append(slice(lo, hi))
            dst.append(slice(lo - a, hi - a))
        out[tuple(dst)] = vals[tuple(src)]
        return out

    def _gwin(self, shift: tuple) -> np.ndarray:
        g = self.g_cache.get(shift)
        if g is None:
            off = np.arange(self.B) - self.B // 2
            mesh = np.meshgrid(*([off] * self.d), indexing="ij")
            r = np.sqrt(sum((mesh[k] - shift[k]) ** 2 for k in range(self.d))) * self.dx
            g = self.window.profile(r)
            self.g_cache[shift] = g
        return g

    def amplitude(self, center: tuple) -> np.ndarray:
        loc = self._box(center) * self.phi
        scale = self.dx ** self.d
        if self.cfg.kind != "MOD":
            return np.abs(sfft.fftn(loc)).ravel() * scale
        amps = []
        for shift in np.ndindex(*([len(self.mod_offsets)] * self.d)):
            sh = tuple(int(self.mod_offsets[i]) for i in shift)
            amps.append(np.abs(sfft.fftn(loc * self._gwin(sh))).ravel() * scale)
        cell = (self.cfg.mod_stride * self.dx) ** self.d
        return _aggregate(np.array(amps), self.cfg.p, cell)

    def cell(self, center: tuple):
        """Per-direction fits and seminorm logs for one position."""
        amp = self.amplitude(center)
        with np.errstate(divide="ignore"):
            la = np.log(amp)
        fits = []
        for ids, rings, present in self.fit_sets:
            prof, count = ring_profile(la[ids], rings, np.ones(len(ids), np.uint8), self.n_rings, math.inf)
            prof = prof[present]
            fits.append(_fit_profile(self.ring_rad[present], prof, self.ring_x[present],
                                     self.log_floor, len(present)))
        return fits, la


def _classify(tau0, lam, wslope, q, d, threshold):
    tau = tau0 + wslope + (0.0 if math.isinf(q) else d / q) * lam
    sing = np.where(np.isfinite(tau), tau > threshold, False)
    return tau, sing


def _run_engine(eng: _Engine, threads: int | None):
    centers = list(np.ndindex(*[len(p) for p in eng.positions]))

    def work(ci):
        c = tuple(int(eng.positions[k][ci[k]]) for k in range(eng.d))
        return eng.cell(c)

    nt = thread_count(threads)
    if nt > 1 and len(centers) > 1:
        with ThreadPoolExecutor(max_workers=nt) as ex:
            results = list(ex.map(work, centers))
    else:
        results = [work(ci) for ci in centers]
    return centers, results


def _seminorm_logs(eng: _Engine, la: np.ndarray, weight: Weight | None, q: float) -> np.ndarray:
    out = np.full((len(eng.cov), eng.n_annuli), -np.inf)
    lw = None
    if weight is not None:
        lw = eng.weight_cache.get(id(weight))
        if lw is None:
            lw = weight.log_radial(eng.rad)
            eng.weight_cache[id(weight)] = lw
    for j, sets in enumerate(eng.sn_sets):
        for a, ids in enumerate(sets):
            if len(ids) == 0:
                out[j, a] = np.nan
                continue
            v = la[ids] if lw is None else la[ids] + lw[ids]
            out[j, a] = _log_norm(v, q, eng.log_cell_nu)
    return out


def _assemble(eng: _Engine, centers, results, weight: Weight | None, kind: str, cfg: WFConfig,
              params: dict, af: AssociatedFunction, regress_weight=True) -> WaveFrontReport:
    npos = tuple(len(p) for p in eng.positions)
    ndir = len(eng.cov)
    shape = npos + (ndir,)
    tau0 = np.full(shape, np.nan)
    lam = np.zeros(shape)
    r2 = np.full(shape, np.nan)
    npts = np.zeros(shape, dtype=np.int64)
    status = np.full(shape, STATUS_OK, dtype=object)
    semi = np.full(shape + (eng.n_annuli,), np.nan)
    wslope = np.zeros(shape)
    exact_w = weight.fit_slope() if weight is not None else 0.0
    for ci, (fits, la) in zip(centers, results):
        for j, ft in enumerate(fits):
            idx = ci + (j,)
            tau0[idx] = ft.tau
            lam[idx] = ft.lam
            r2[idx] = ft.r2
            npts[idx] = ft.n_points
            status[idx] = ft.status
        semi[ci] = _seminorm_logs(eng, la, weight, cfg.q)
        if exact_w is None:
            # generic weight: regress its log on the same regressor over the fit band
            for j, (ids, rings, present) in enumerate(eng.fit_sets):
                x = eng.ring_x[present]
                r = eng.ring_rad[present]
                n = npts[ci + (j,)]
                if n >= 2:
                    wslope[ci + (j,)] = linear_fit(x[:n], weight.log_radial(r[:n]))[0]
    if exact_w is not None:
        wslope[...] = exact_w
    tau, sing = _classify(tau0, lam, wslope, cfg.q, eng.d, cfg.threshold)
    flipped = []
    if cfg.smoothing:
        sing, flipped = close_positions(sing)
    coords = [eng.f.grid.origin[k] + eng.positions[k] * eng.f.grid.spacing[k] for k in range(eng.d)]
    rep = WaveFrontReport(kind, params, {**eng.f.grid.to_dict(), "name": eng.f.name},
                          [p.copy() for p in eng.positions], coords, eng.cov, sing, tau, r2, npts, status,
                          semi, tau0, lam, flipped)
    rep.extra["wslope"] = float(exact_w) if exact_w is not None else None
    return rep


def _params(cfg: WFConfig, af: AssociatedFunction, weight: Weight | None, eng: _Engine) -> dict:
    d = cfg.to_dict()
    d["seq"] = af.seq.to_dict()
    d["weight"] = None if weight is None else weight.to_dict()
    d["cutoff"] = {"kind": "gevrey_bump", "s": eng.s_w, "R_samples": eng.R, "R": eng.R * eng.dx}
    d["annulus_radii"] = list(eng.annulus)
    if cfg.kind == "MOD":
        d["window"] = eng.window.to_dict()
    d["fit_cones"] = "inner cones (half-angle / overlap)"
    return d


def _setup(f: SampledSignal, seq, cfg: WFConfig | None, cover: DirectionCover | None):
    cfg = cfg or WFConfig()
    cfg.validate(f.dimension)
    if seq is None:
        seq = gevrey_sequence(2.0)
    af = seq if isinstance(seq, AssociatedFunction) else AssociatedFunction(seq)
    if cover is None:
        cover = make_cover(cfg.n_dir if f.dimension == 2 else 2, cfg.overlap, f.dimension)
    return cfg, af, cover


def wf_estimate(f: SampledSignal, kind: str = "FL", seq=None, weight: Weight | None = None,
                config: WFConfig | None = None, cover: DirectionCover | None = None,
                **overrides) -> WaveFrontReport:
    """Wave-front set estimate of ``f`` (FL or MOD kind).

    ``weight`` defaults to ``exp(M)``; ``config`` fields may be overridden by
    keyword (``q``, ``p``, ``window``, ``threshold``, ``annulus`` ...).
    """
    cfg = config or WFConfig()
    cfg = WFConfig(**{**cfg.__dict__, **overrides, "kind": kind})
    cfg, af, cov = _setup(f, seq, cfg, cover)
    if cfg.kind == "GEVREY":
        raise ValueError("use wf_gevrey_estimate for the Gevrey estimator")
    if weight is None:
        weight = assoc_weight(af, 1.0, f.dimension)
    eng = _Engine(f, af, cfg, cov)
    centers, results = _run_engine(eng, cfg.threads)
    return _assemble(eng, centers, results, weight, cfg.kind, cfg, _params(cfg, af, weight, eng), af)


def reweight(rep: WaveFrontReport, N: float, q: float | None = None) -> WaveFrontReport:
    """Re-classify a report computed with an ``exp(N' M)`` weight for ``exp(N M)`` (and ``q``)."""
    if rep.tau0 is None or rep.extra.get("wslope") is None:
        raise ValueError("report does not carry weight-free slopes")
    qq = _num(rep.params["q"]) if q is None else q
    d = len(rep.positions)
    tau, sing = _classify(rep.tau0, rep.lam, float(N), qq, d, rep.params["threshold"])
    flipped = []
    if rep.params.get("smoothing", True):
        sing, flipped = close_positions(sing)
    params = dict(rep.params)
    params["q"] = "inf" if math.isinf(qq) else qq
    if params.get("weight") and params["weight"].get("kind") == "assoc":
        params["weight"] = {**params["weight"], "N": float(N)}
    out = WaveFrontReport(rep.kind, params, rep.grid, rep.positions, rep.coords, rep.cover, sing, tau,
                          rep.r2, rep.n_points, rep.status, None, rep.tau0, rep.lam, flipped,
                          {"wslope": float(N)})
    return out


def wf_weight_family(f: SampledSignal, Ns=DEFAULT_FAMILY, kind: str = "FL", seq=None,
                     config: WFConfig | None = None, **overrides) -> list:
    """Member reports for the family ``{exp(N M)}``, sharing one set of fits."""
    Ns = sorted(float(n) for n in Ns)
    if not Ns or Ns[0] <= 0:
        raise ValueError("family parameters must be positive")
    cfg = config or WFConfig()
    base = wf_estimate(f, kind, seq, None, cfg, **overrides)
    return [reweight(base, N) for N in Ns]


def wf_family(reports: list):
    """``(inf_report, sup_report)``: singular in every member / in some member."""
    if not reports:
        raise ValueError("empty family")
    first = reports[0]
    for r in reports[1:]:
        if not first.compatible(r):
            raise ValueError("member reports live on different grids")
    inf_s = np.logical_and.reduce([r.singular for r in reports])
    sup_s = np.logical_or.reduce([r.singular for r in reports])
    taus = np.stack([r.tau for r in reports])
    out = []
    for kind, s, t in (("FAMILY_INF", inf_s, np.nanmin(taus, axis=0) if len(reports) else None),
                       ("FAMILY_SUP", sup_s, np.nanmax(taus, axis=0))):
        params = dict(first.params)
        params["family"] = [r.params.get("weight") for r in reports]
        params["member_kind"] = first.kind
        out.append(WaveFrontReport(kind, params, first.grid, first.positions, first.coords, first.cover,
                                   s.copy(), t, first.r2, first.n_points, first.status))
    return out[0], out[1]


def wf_gevrey_estimate(f: SampledSignal, s: float, N_family=DEFAULT_FAMILY, config: WFConfig | None = None,
                       cover: DirectionCover | None = None, **overrides) -> WaveFrontReport:
    """Gevrey micro-regularity: fit ``ln|localized f^|`` against ``|xi|^{1/s}``.

    With ``h`` the fitted decay constant, ``tau_N = N - h``; a cell is
    (s)-singular (Beurling) when ``tau_N > tau*`` for some ``N`` in the family
    and {s}-singular (Roumieu) when this holds for every ``N``. ``singular``
    carries the Beurling verdict, ``extra["roumieu"]`` the Roumieu one.
    """
    if not s > 1:
        raise ValueError("Gevrey order must exceed 1")
    Ns = sorted(float(n) for n in N_family)
    if not Ns or Ns[0] <= 0:
        raise ValueError("N family must be positive")
    cfg = config or WFConfig()
    cfg = WFConfig(**{**cfg.__dict__, **overrides, "kind": "GEVREY"})
    seq = gevrey_sequence(s)
    cfg, af, cov = _setup(f, seq, cfg, cover)
    eng = _Engine(f, af, cfg, cov, regressor=lambda r: np.asarray(r, float) ** (1.0 / s))
    centers, results = _run_engine(eng, cfg.threads)
    params = _params(cfg, af, None, eng)
    params["N_family"] = Ns
    params["regressor"] = f"|xi|^(1/{s:g})"
    rep = _assemble(eng, centers, results, None, "GEVREY", cfg, params, af)
    h = -rep.tau0
    beur = np.where(np.isfinite(h), Ns[-1] - h > cfg.threshold, False)
    roum = np.where(np.isfinite(h), Ns[0] - h > cfg.threshold, False)
    if cfg.smoothing:
        beur, fl = close_positions(beur)
        roum, _ = close_positions(roum)
        rep.smoothing = fl
    rep.singular = beur
    rep.tau = Ns[-1] - h
    rep.extra["roumieu"] = roum
    rep.extra["h"] = None
    return rep


# ----------------------------------------------------------------------------
# membership


def global_decay_fit(f: SampledSignal, kind: str = "FL", seq=None, config: WFConfig | None = None,
                     weight: Weight | None = None) -> DecayFit:
    """Un-coned decay fit of the whole signal (spectrum or STFT profile)."""
    cfg = config or WFConfig(kind=kind)
    af = AssociatedFunction(seq or gevrey_sequence(2.0))
    if kind == "MOD":
        w = cfg.window or WindowSpec("gaussian", sigma=cfg.cutoff_radius * f.spacing[0] / 4.0)
        data = stft_profile(f, w, cfg.mod_stride, cfg.p)
    else:
        data = dft(f)
    nyq = data.freq.nyquist
    ann = (cfg.annulus[0] * nyq, cfg.annulus[1] * nyq)
    fit = directional_decay_fit(data, None, af, ann, p=cfg.p)
    if weight is None:
        weight = assoc_weight(af, 1.0, f.dimension)
    if fit.valid and fit.status == STATUS_OK:
        ws = weight.fit_slope()
        fit.tau = fit.tau + (ws if ws is not None else 0.0) + (0.0 if math.isinf(cfg.q) else f.dimension / cfg.q) * fit.lam
    return fit


def membership_iff_empty(f: SampledSignal, kind: str = "FL", seq=None, config: WFConfig | None = None,
                         weight: Weight | None = None, report: WaveFrontReport | None = None):
    """``(member, wf_empty)``: global decay verdict and emptiness of the estimated wave-front set."""
    cfg = config or WFConfig(kind=kind)
    fit = global_decay_fit(f, kind, seq, cfg, weight)
    member = bool(fit.valid and (fit.status != STATUS_OK or fit.tau <= cfg.threshold))
    if report is None:
        report = wf_estimate(f, kind, seq, weight, cfg)
    return member, report.is_empty()
