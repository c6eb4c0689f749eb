"""Linear convolution and wave-front inclusion / embedding checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy.spatial import cKDTree

from .signals import Grid, SampledSignal
from .wavefront import WaveFrontReport, WFConfig, reweight, wf_estimate
from .weights import Weight

SUPPORT_TOL = 1e-12


def padded_grid(grid: Grid) -> Grid:
    """Grid carrying the full linear convolution of two signals on ``grid``."""
    return Grid(tuple(2 * n for n in grid.extent), grid.spacing, tuple(2 * o for o in grid.origin))


def pad(f: SampledSignal) -> SampledSignal:
    """Zero-pad to twice the extent, keeping the origin."""
    g = Grid(tuple(2 * n for n in f.extent), f.spacing, f.origin)
    v = np.zeros(g.extent, dtype=np.complex128)
    v[tuple(slice(0, n) for n in f.extent)] = f.values
    return SampledSignal(v, g, f.name, dict(f.meta))


def embed(f: SampledSignal, grid: Grid) -> SampledSignal:
    """Zero-extend ``f`` onto a larger grid whose nodes contain those of ``f``."""
    start = []
    for k in range(f.dimension):
        m = (f.origin[k] - grid.origin[k]) / grid.spacing[k]
        if abs(m - round(m)) > 1e-9 or abs(grid.spacing[k] - f.spacing[k]) > 1e-12:
            raise ValueError("grids are not aligned")
        start.append(int(round(m)))
    if any(s < 0 or s + n > e for s, n, e in zip(start, f.extent, grid.extent)):
        raise ValueError("signal grid is not contained in the target grid")
    v = np.zeros(grid.extent, dtype=np.complex128)
    v[tuple(slice(s, s + n) for s, n in zip(start, f.extent))] = f.values
    return SampledSignal(v, grid, f.name, dict(f.meta))


def crop(f: SampledSignal, grid: Grid, tol: float = SUPPORT_TOL) -> SampledSignal:
    """Restrict ``f`` to the nodes of ``grid``; error if mass above ``tol`` is lost."""
    start = []
    for k in range(f.dimension):
        m = (grid.origin[k] - f.origin[k]) / f.spacing[k]
        if abs(m - round(m)) > 1e-9 or abs(grid.spacing[k] - f.spacing[k]) > 1e-12:
            raise ValueError("grids are not aligned")
        start.append(int(round(m)))
    sl = tuple(slice(s, s + n) for s, n in zip(start, grid.extent))
    if any(s < 0 or s + n > e for s, n, e in zip(start, grid.extent, f.extent)):
        raise ValueError("target grid is not contained in the signal grid")
    inside = f.values[sl]
    amp = np.abs(f.values)
    peak = float(amp.max()) if amp.size else 0.0
    outside = amp.copy()
    outside[sl] = 0.0
    if peak > 0 and float(outside.max()) > tol * peak:
        raise ValueError("support overflow: the convolution does not fit on the target grid")
    return SampledSignal(inside, grid, f.name, dict(f.meta))


def convolve(f1: SampledSignal, f2: SampledSignal, same_grid: bool = False) -> SampledSignal:
    """Non-circular convolution ``(f1 * f2)(x) = sum_y f1(y) f2(x - y) dy^d``.

    Both inputs are zero-padded to twice their extent, so the result carries the
    whole linear convolution on :func:`padded_grid`. With ``same_grid`` the
    result is cropped back to the input grid (error if that loses support).
    """
    if f1.grid != f2.grid:
        raise ValueError("signals live on different grids")
    g = f1.grid
    for k in range(g.dimension):
        m = g.origin[k] / g.spacing[k]
        if abs(m - round(m)) > 1e-9:
            raise ValueError("grid origin must be a node multiple for aligned convolution")
    shape = tuple(2 * n for n in g.extent)
    axes = tuple(range(g.dimension))
    prod = sfft.fftn(f1.values, shape, axes=axes) * sfft.fftn(f2.values, shape, axes=axes)
    v = sfft.ifftn(prod, axes=axes) * g.cell
    out = SampledSignal(v, padded_grid(g), f"{f1.name}*{f2.name}")
    return crop(out, g) if same_grid else out


# ----------------------------------------------------------------------------
# inclusion check


@dataclass
class InclusionVerdict:
    holds: bool
    violating: list
    slack: dict
    n_checked: int
    predicted_size: int = 0

    def to_dict(self) -> dict:
        return {"holds": self.holds, "violating": self.violating, "slack": self.slack,
                "n_checked": self.n_checked, "predicted_size": self.predicted_size}


def support_points(f: SampledSignal, tol: float = SUPPORT_TOL) -> np.ndarray:
    """Coordinates of samples with ``|f| > tol * max|f|`` (shape ``(n, d)``)."""
    amp = np.abs(f.values)
    peak = float(amp.max())
    if peak == 0:
        return np.zeros((0, f.dimension))
    idx = np.nonzero(amp > tol * peak)
    return np.stack([f.grid.origin[k] + idx[k] * f.spacing[k] for k in range(f.dimension)], axis=-1)


def _cell_coords(rep: WaveFrontReport, idx) -> np.ndarray:
    return np.array([rep.coords[k][idx[k]] for k in range(len(rep.positions))])


def _stride_len(rep: WaveFrontReport) -> np.ndarray:
    out = []
    for c in rep.coords:
        out.append(float(np.min(np.diff(c))) if len(c) > 1 else 0.0)
    return np.array(out)


def _dir_close(j: int, js: set, n: int, slack: int, dimension: int) -> bool:
    if dimension == 1:
        return j in js
    return any(min((j - k) % n, (k - j) % n) <= slack for k in js)


def conv_wf_check(f1: SampledSignal, f2: SampledSignal, wf2: WaveFrontReport, wf12: WaveFrontReport,
                  slack_cells: int = 1, slack_dirs: int = 1) -> InclusionVerdict:
    """Check ``WF(f1 * f2) subset {(x + y, xi) : x in supp f1, (y, xi) in WF(f2)}``.

    Positions are compared by coordinates with a slack of ``slack_cells``
    position-grid cells (per axis), directions with ``slack_dirs`` cover
    sectors (2D only; 1D directions must match).
    """
    if len(wf2.cover) != len(wf12.cover) or wf2.cover.dimension != wf12.cover.dimension:
        raise ValueError("reports use different direction covers")
    if f1.grid != f2.grid:
        raise ValueError("signals live on different grids")
    d = f1.dimension
    supp = support_points(f1)
    h = np.maximum(_stride_len(wf12), _stride_len(wf2))
    tol = slack_cells * h + 1e-9
    # predicted set: per direction, Minkowski sum of supp f1 with WF(f2) positions
    pred = {}
    for idx in zip(*np.nonzero(wf2.singular)):
        y = _cell_coords(wf2, idx)
        pred.setdefault(int(idx[-1]), []).append(y)
    pred = {j: np.array(v) for j, v in pred.items()}
    n_dir = len(wf12.cover)
    violating = []
    cells = list(zip(*np.nonzero(wf12.singular)))
    tree = cKDTree(supp / tol[None, :]) if len(supp) else None
    for idx in cells:
        z = _cell_coords(wf12, idx)
        j = int(idx[-1])
        ok = False
        if tree is not None:
            for jj, ys in pred.items():
                if not _dir_close(j, {jj}, n_dir, slack_dirs, d):
                    continue
                # z - y must lie in supp f1 up to the slack (Chebyshev distance)
                dist, _ = tree.query((z[None, :] - ys) / tol[None, :], p=np.inf)
                if np.any(dist <= 1.0):
                    ok = True
                    break
        if not ok:
            violating.append({"pos": [float(v) for v in z], "dir": j})
    size = sum(len(v) for v in pred.values())
    return InclusionVerdict(not violating, violating,
                            {"position": float(slack_cells), "position_units": "cells",
                             "direction": int(slack_dirs)}, len(cells), size)


# ----------------------------------------------------------------------------
# embedding check


@dataclass
class EmbeddingReport:
    holds: bool
    singular_1: int
    singular_2: int
    extra_cells: list
    seminorm_log_ratios: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _dominates(w_small: Weight, w_big: Weight, radii: np.ndarray, tol: float = 1e-9) -> float:
    """``max log(w_small / w_big)`` over radii; finite and bounded means ``w_small <~ w_big``."""
    return float(np.max(w_small.log_radial(radii) - w_big.log_radial(radii)))


def embedding_check(f: SampledSignal, pair1, pair2, config: WFConfig | None = None, kind: str = "FL",
                    seq=None, bound: float = 50.0) -> EmbeddingReport:
    """Classification-level check that singular(q2, w2) is contained in singular(q1, w1).

    Preconditions: ``q1 <= q2`` and ``w2 <~ w1`` on the frequency grid (the log
    ratio stays below ``bound``); violation raises ``ValueError``.
    """
    (q1, w1), (q2, w2) = pair1, pair2
    if not q1 <= q2:
        raise ValueError("embedding needs q1 <= q2")
    cfg = config or WFConfig()
    nyq = 0.5 / f.spacing[0]
    radii = np.linspace(0.0, nyq * math.sqrt(f.dimension), 2048)
    if _dominates(w2, w1, radii) > bound:
        raise ValueError("precondition failed: omega2 is not dominated by omega1 on the grid")
    r1 = wf_estimate(f, kind, seq, w1, cfg, q=q1)
    r2 = wf_estimate(f, kind, seq, w2, cfg, q=q2)
    extra = [list(map(int, idx)) for idx in zip(*np.nonzero(r2.singular & ~r1.singular))]
    ratios = {}
    if r1.seminorms is not None and r2.seminorms is not None:
        with np.errstate(invalid="ignore"):
            diff = r2.seminorms - r1.seminorms
        fin = diff[np.isfinite(diff)]
        if fin.size:
            ratios = {"max_log_ratio": float(fin.max()), "min_log_ratio": float(fin.min())}
    return EmbeddingReport(not extra, int(r1.singular.sum()), int(r2.singular.sum()), extra, ratios)
