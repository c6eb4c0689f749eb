"""Sampled signals on uniform 1D/2D grids and the analytic test battery.

Distributional battery members are represented by canonical sampled
surrogates: the delta is a single spike of height ``1/prod(spacing)`` (so its
spectrum has unit modulus), the step is the sampled Heaviside function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

FLOOR = 1e-14
MIN_EXTENT = 16


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform grid: ``x[i] = origin + i * spacing`` along each axis."""

    extent: tuple
    spacing: tuple
    origin: tuple

    def __post_init__(self):
        ext = tuple(int(n) for n in self.extent)
        sp = tuple(float(h) for h in self.spacing)
        org = tuple(float(o) for o in self.origin)
        if not (len(ext) == len(sp) == len(org)) or len(ext) not in (1, 2):
            raise ValueError("grid must be 1D or 2D with matching extent/spacing/origin")
        for n in ext:
            if not _is_pow2(n) or n < MIN_EXTENT:
                raise ValueError(f"extent must be a power of two >= {MIN_EXTENT}, got {n}")
        if any(not h > 0 for h in sp):
            raise ValueError("spacing must be positive")
        object.__setattr__(self, "extent", ext)
        object.__setattr__(self, "spacing", sp)
        object.__setattr__(self, "origin", org)

    @property
    def dimension(self) -> int:
        return len(self.extent)

    @property
    def cell(self) -> float:
        return float(np.prod(self.spacing))

    def axis(self, k: int) -> np.ndarray:
        return self.origin[k] + self.spacing[k] * np.arange(self.extent[k])

    def coords(self) -> list:
        """Coordinate arrays broadcast to the full grid (``ij`` indexing)."""
        return np.meshgrid(*[self.axis(k) for k in range(self.dimension)], indexing="ij")

    def upper(self, k: int) -> float:
        return self.origin[k] + self.spacing[k] * (self.extent[k] - 1)

    def contains(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, float))
        return all(self.origin[k] - 1e-12 <= x[k] <= self.upper(k) + 1e-12
                   for k in range(self.dimension))

    def index_of(self, x) -> tuple:
        """Nearest grid index of point ``x``."""
        x = np.atleast_1d(np.asarray(x, float))
        if not self.contains(x):
            raise ValueError(f"point {x.tolist()} lies outside the grid")
        return tuple(int(round((x[k] - self.origin[k]) / self.spacing[k]))
                     for k in range(self.dimension))

    @property
    def nyquist(self) -> float:
        return 0.5 / max(self.spacing)

    def to_dict(self) -> dict:
        return {"extent": list(self.extent), "spacing": list(self.spacing),
                "origin": list(self.origin)}


def centered_grid(n: int, length: float, dimension: int = 1) -> Grid:
    """``n`` samples per axis covering ``[-length/2, length/2)``."""
    h = length / n
    return Grid((n,) * dimension, (h,) * dimension, (-length / 2,) * dimension)


@dataclass(frozen=True, eq=False)
class SampledSignal:
    values: np.ndarray
    grid: Grid
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != self.grid.extent:
            raise ValueError(f"values shape {v.shape} does not match grid extent {self.grid.extent}")
        if not np.all(np.isfinite(v)):
            raise ValueError("signal values must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dimension(self) -> int:
        return self.grid.dimension

    @property
    def origin(self) -> tuple:
        return self.grid.origin

    @property
    def spacing(self) -> tuple:
        return self.grid.spacing

    @property
    def extent(self) -> tuple:
        return self.grid.extent

    def norm(self) -> float:
        """Riemann-sum L2 norm."""
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell))

    def with_values(self, values, name: str | None = None, **meta) -> "SampledSignal":
        m = dict(self.meta)
        m.update(meta)
        return SampledSignal(values, self.grid, self.name if name is None else name, m)

    def __add__(self, other: "SampledSignal") -> "SampledSignal":
        _same_grid(self, other)
        return self.with_values(self.values + other.values, f"{self.name}+{other.name}")

    def __mul__(self, c) -> "SampledSignal":
        if isinstance(c, SampledSignal):
            _same_grid(self, c)
            return self.with_values(self.values * c.values, f"{self.name}*{c.name}")
        return self.with_values(self.values * c)

    __rmul__ = __mul__


def _same_grid(a: SampledSignal, b: SampledSignal):
    if a.grid != b.grid:
        raise ValueError("signals live on different grids")


# ----------------------------------------------------------------------------
# windows


@dataclass(frozen=True)
class WindowSpec:
    """Analysis window: ``gaussian`` (``sigma``) or ``gevrey_bump`` (``s``, ``R``)."""

    kind: str
    sigma: float = 0.0
    s: float = 2.0
    R: float = 0.0
    center: tuple = ()

    def __post_init__(self):
        if self.kind == "gaussian":
            if not self.sigma > 0:
                raise ValueError("gaussian window needs sigma > 0")
        elif self.kind == "gevrey_bump":
            if not self.s > 1:
                raise ValueError("gevrey bump needs s > 1")
            if not self.R > 0:
                raise ValueError("gevrey bump needs R > 0")
        else:
            raise ValueError(f"unknown window kind {self.kind!r}")

    @property
    def radius(self) -> float:
        """Radius beyond which the window is below the noise floor relative to its peak."""
        if self.kind == "gevrey_bump":
            return self.R
        return self.sigma * math.sqrt(2.0 * math.log(1.0 / FLOOR))

    def profile(self, r) -> np.ndarray:
        """Window value as a function of the distance to its center (peak 1)."""
        r = np.asarray(r, dtype=np.float64)
        if self.kind == "gaussian":
            return np.exp(-0.5 * (r / self.sigma) ** 2)
        return bump_profile(r / self.R, self.s)

    def evaluate(self, grid: Grid, center=None) -> np.ndarray:
        c = self.center if center is None else center
        c = np.zeros(grid.dimension) if c is None or len(np.atleast_1d(c)) == 0 else np.atleast_1d(c)
        xs = grid.coords()
        r2 = sum((xs[k] - c[k]) ** 2 for k in range(grid.dimension))
        return self.profile(np.sqrt(r2))

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "gaussian":
            d["sigma"] = self.sigma
        else:
            d.update(s=self.s, R=self.R)
        if self.center:
            d["center"] = list(self.center)
        return d


def window_from_dict(d: dict) -> WindowSpec:
    return WindowSpec(d["kind"], sigma=float(d.get("sigma", 0.0)), s=float(d.get("s", 2.0)),
                      R=float(d.get("R", 0.0)), center=tuple(d.get("center", ())))


def bump_profile(u, s: float) -> np.ndarray:
    """``exp(1 - (1 - u^2)^{-1/(s-1)})`` on ``|u| < 1``, zero elsewhere (peak 1)."""
    if not s > 1:
        raise ValueError("Gevrey bump order must satisfy s > 1")
    u = np.abs(np.asarray(u, dtype=np.float64))
    out = np.zeros_like(u)
    inside = u < 1.0
    t = 1.0 - u[inside] ** 2
    with np.errstate(over="ignore", divide="ignore"):
        out[inside] = np.exp(1.0 - t ** (-1.0 / (s - 1.0)))
    return out


# ----------------------------------------------------------------------------
# battery


BATTERY_1D = ("delta", "gaussian", "step", "gevrey_bump", "chirp")
BATTERY_2D = ("delta", "gaussian", "ridge", "halfplane", "gevrey_bump", "chirp")


def _point(grid: Grid, params: dict, key: str = "x0") -> np.ndarray:
    x0 = params.get(key, 0.0)
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    if x0.shape[0] == 1 and grid.dimension == 2:
        x0 = np.repeat(x0, 2)
    if not grid.contains(x0):
        raise ValueError(f"{key}={x0.tolist()} lies outside the grid")
    return x0


def _support_inside(grid: Grid, center, R):
    for k in range(grid.dimension):
        if center[k] - R <= grid.origin[k] or center[k] + R >= grid.upper(k):
            raise ValueError("feature support must lie strictly inside the grid")


def gevrey_bump(s: float, R: float, grid: Grid, center=None) -> SampledSignal:
    """Compactly supported Gevrey-``s`` bump, peak normalized to 1."""
    if not s > 1:
        raise ValueError("Gevrey bump order must satisfy s > 1")
    if not R > 0:
        raise ValueError("bump radius must be positive")
    c = np.zeros(grid.dimension) if center is None else np.atleast_1d(np.asarray(center, float))
    _support_inside(grid, c, R)
    vals = WindowSpec("gevrey_bump", s=s, R=R).evaluate(grid, c)
    return SampledSignal(vals, grid, "gevrey_bump",
                         {"params": {"s": s, "R": R, "center": c.tolist()}, "singular": []})


def synth(name: str, params: dict | None = None, grid: Grid | None = None) -> SampledSignal:
    """Battery member ``name`` on ``grid``.

    ``meta["singular"]`` records the analytic wave-front ground truth as a list of
    ``{"kind": "point"|"line", ...}`` entries with their singular directions
    (``"all"`` or a list of unit vectors).
    """
    params = dict(params or {})
    if grid is None:
        raise ValueError("a grid is required")
    d = grid.dimension
    xs = grid.coords()
    name = name.replace("-", "_")
    if name == "delta":
        x0 = _point(grid, params)
        idx = grid.index_of(x0)
        v = np.zeros(grid.extent)
        v[idx] = 1.0 / grid.cell
        node = [grid.origin[k] + idx[k] * grid.spacing[k] for k in range(d)]
        gt = [{"kind": "point", "x": node, "directions": "all"}]
        return SampledSignal(v, grid, "delta", {"params": {"x0": node}, "singular": gt})
    if name == "gaussian":
        sigma = float(params.get("sigma", 0.1))
        if not sigma > 0:
            raise ValueError("sigma must be positive")
        c = _point(grid, params, "center") if "center" in params else np.zeros(d)
        r2 = sum((xs[k] - c[k]) ** 2 for k in range(d))
        v = np.exp(-0.5 * r2 / sigma ** 2)
        return SampledSignal(v, grid, "gaussian",
                             {"params": {"sigma": sigma, "center": c.tolist()}, "singular": []})
    if name == "step":
        if d != 1:
            raise ValueError("step is a 1D battery member (use ridge/halfplane in 2D)")
        x0 = _point(grid, params)
        idx = grid.index_of(x0)
        if idx[0] == 0:
            raise ValueError("step must jump inside the grid")
        v = np.zeros(grid.extent)
        v[idx[0]:] = 1.0
        node = grid.origin[0] + idx[0] * grid.spacing[0]
        gt = [{"kind": "point", "x": [node], "directions": [[1.0], [-1.0]]}]
        return SampledSignal(v, grid, "step", {"params": {"x0": node}, "singular": gt})
    if name in ("ridge", "halfplane"):
        if d != 2:
            raise ValueError(f"{name} is a 2D battery member")
        axis = int(params.get("axis", 0 if name == "ridge" else 1))
        c = float(params.get("c", 0.0))
        if not grid.origin[axis] < c < grid.upper(axis):
            raise ValueError("feature line lies outside the grid")
        i = int(round((c - grid.origin[axis]) / grid.spacing[axis]))
        c = grid.origin[axis] + i * grid.spacing[axis]
        on = xs[axis] >= c - 0.5 * grid.spacing[axis]
        v = np.where(on, 1.0, -1.0) if name == "ridge" else np.where(on, 1.0, 0.0)
        e = [0.0, 0.0]
        e[axis] = 1.0
        neg = [-x for x in e]
        gt = [{"kind": "line", "axis": axis, "c": c, "directions": [e, neg]}]
        return SampledSignal(v, grid, name, {"params": {"axis": axis, "c": c}, "singular": gt})
    if name == "gevrey_bump":
        c = params.get("center")
        return gevrey_bump(float(params.get("s", 2.0)), float(params.get("R", 1.0)), grid, c)
    if name == "chirp":
        a = float(params.get("a", 1.0))
        r2 = sum(xs[k] ** 2 for k in range(d))
        v = np.exp(1j * np.pi * a * r2)
        return SampledSignal(v, grid, "chirp", {"params": {"a": a}, "singular": []})
    raise ValueError(f"unknown battery member {name!r}")


# ----------------------------------------------------------------------------
# translation and modulation


def translate(f: SampledSignal, a) -> SampledSignal:
    """``T_a f(x) = f(x - a)`` with zero fill; ``a`` must be a multiple of the spacing."""
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    if a.shape[0] == 1 and f.dimension == 2:
        a = np.repeat(a, 2)
    shifts = []
    for k in range(f.dimension):
        m = a[k] / f.spacing[k]
        if abs(m - round(m)) > 1e-9:
            raise ValueError(f"shift {a[k]} is not a multiple of the spacing {f.spacing[k]}")
        shifts.append(int(round(m)))
    out = np.zeros_like(f.values)
    src = []
    dst = []
    for k, m in enumerate(shifts):
        n = f.extent[k]
        if abs(m) >= n:
            return f.with_values(out, f"T{a.tolist()}{f.name}")
        src.append(slice(max(0, -m), n - max(0, m)))
        dst.append(slice(max(0, m), n - max(0, -m)))
    out[tuple(dst)] = f.values[tuple(src)]
    return f.with_values(out, f"T{a.tolist()}{f.name}")


def modulate(f: SampledSignal, xi0) -> SampledSignal:
    """``M_xi f(x) = exp(2 pi i xi x) f(x)``; ``xi`` must be a grid frequency."""
    xi0 = np.atleast_1d(np.asarray(xi0, dtype=np.float64))
    if xi0.shape[0] == 1 and f.dimension == 2:
        xi0 = np.repeat(xi0, 2)
    phase = 0.0
    xs = f.grid.coords()
    for k in range(f.dimension):
        dxi = 1.0 / (f.extent[k] * f.spacing[k])
        m = xi0[k] / dxi
        if abs(m - round(m)) > 1e-9:
            raise ValueError(f"frequency {xi0[k]} is not on the dual grid (step {dxi})")
        phase = phase + xi0[k] * xs[k]
    return f.with_values(f.values * np.exp(2j * np.pi * phase), f"M{xi0.tolist()}{f.name}")


def commutation_defect(f: SampledSignal, x, y) -> float:
    """``max |M_y T_x f - exp(2 pi i x y) T_x M_y f|``."""
    lhs = modulate(translate(f, x), y).values
    xv = np.atleast_1d(np.asarray(x, float))
    yv = np.atleast_1d(np.asarray(y, float))
    if f.dimension == 2:
        xv = np.resize(xv, 2)
        yv = np.resize(yv, 2)
    rhs = np.exp(2j * np.pi * float(np.dot(xv, yv))) * translate(modulate(f, y), x).values
    return float(np.max(np.abs(lhs - rhs)))


# ----------------------------------------------------------------------------
# Gelfand-Shilov decay probe


@dataclass
class DecayProbe:
    space_slope: float
    freq_slope: float
    space_r2: float
    freq_r2: float
    space_note: str = ""
    freq_note: str = ""


def _radial(grid_coords, center) -> np.ndarray:
    return np.sqrt(sum((grid_coords[k] - center[k]) ** 2 for k in range(len(grid_coords))))


def _tail_fit(r: np.ndarray, amp: np.ndarray, assoc, scale: float):
    """Fit ``ln E(r) = c + slope * M(scale r)`` over the outer half of the grid,
    ``E`` being the tail supremum of ``amp``. Returns ``(slope, r2, note)``."""
    from .spectral import linear_fit, tail_envelope

    r = r.ravel()
    amp = np.abs(amp.ravel())
    peak = amp.max()
    if peak == 0:
        return math.nan, math.nan, "zero signal"
    outer = r >= 0.5 * r.max()
    if not np.any(amp[outer] > 0):
        return -math.inf, 1.0, "exact zero tail"
    radii, env = tail_envelope(r[outer], amp[outer])
    keep = (env >= FLOOR * peak) & (radii > 0)
    if np.count_nonzero(keep) < 8:
        if np.count_nonzero(env < FLOOR * peak) > 0:
            return -math.inf, 1.0, "tail below noise floor"
        return math.nan, math.nan, "too few usable samples"
    m = assoc.eval_many(scale * radii[keep])
    slope, _, r2 = linear_fit(m, np.log(env[keep]))
    return slope, r2, ""


def gs_decay_probe(f: SampledSignal, seq_pair, A: float = 1.0, B: float = 1.0) -> DecayProbe:
    """Decay of ``|f(x)|`` against ``M(A|x|)`` and of ``|f^(xi)|`` against ``N(B|xi|)``.

    Negative slopes are evidence of membership in the Gelfand-Shilov class
    defined by the pair; ``-inf`` marks an identically zero (or sub-floor) tail.
    """
    from .sequences import AssociatedFunction, DefiningSequence
    from .spectral import dft

    seq_m, seq_n = seq_pair
    am = seq_m if isinstance(seq_m, AssociatedFunction) else AssociatedFunction(seq_m)
    an = seq_n if isinstance(seq_n, AssociatedFunction) else AssociatedFunction(seq_n)
    xs = f.grid.coords()
    center = [0.5 * (f.grid.origin[k] + f.grid.upper(k)) for k in range(f.dimension)]
    s_slope, s_r2, s_note = _tail_fit(_radial(xs, center), f.values, am, A)
    F = dft(f)
    f_slope, f_r2, f_note = _tail_fit(F.radius(), F.values, an, B)
    return DecayProbe(s_slope, f_slope, s_r2, f_r2, s_note, f_note)
