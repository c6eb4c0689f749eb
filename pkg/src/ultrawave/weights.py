"""Radial weight functions and grid-restricted moderateness checks.

All weights are evaluated in the log domain (``log_eval``) so that
exponential-type weights never overflow; ``eval`` is provided for
convenience. Phase-space weights (dimension ``2d``) are evaluated at
``x = 0`` when used on frequency data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .sequences import AssociatedFunction, DefiningSequence, sequence_from_dict

KINDS = ("polynomial", "exp_power", "assoc", "composite", "custom")


@dataclass(frozen=True, eq=False)
class Weight:
    kind: str
    dimension: int
    params: dict = field(default_factory=dict)
    log_rule: Callable | None = None  # radius -> log weight (custom kind)
    af: AssociatedFunction | None = None
    sign: float = 1.0  # -1 for the reciprocal weight

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.kind == "assoc" and self.af is None:
            raise ValueError("assoc weight needs an associated function")
        if self.kind == "custom" and self.log_rule is None:
            raise ValueError("custom weight needs a rule")

    @staticmethod
    def _radius(z) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if z.ndim <= 1:
            return np.abs(z)
        return np.sqrt(np.sum(z * z, axis=-1))

    def log_radial(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        p = self.params
        k = self.kind
        if k == "polynomial":
            out = 0.5 * p["t"] * np.log1p(r * r)
        elif k == "exp_power":
            out = p["k"] * r ** p["b"]
        elif k == "assoc":
            flat = r.ravel()
            m = np.zeros(flat.shape)
            pos = flat > 0
            if np.any(pos):
                m[pos] = self.af.eval_many(flat[pos])
            out = p["N"] * m.reshape(r.shape)
        elif k == "composite":
            s, b, a, rr = p["s"], p["b"], p["a"], p["r"]
            out = s * r ** b + a * np.log1p(r) + rr * np.log(np.log(math.e + r))
        else:
            out = np.asarray(self.log_rule(r), dtype=np.float64)
        return self.sign * out

    def log_eval(self, z) -> np.ndarray:
        """``log v(z)``; ``z`` is a point array ``(..., dim)`` or radii for dim 1."""
        return self.log_radial(self._radius(z))

    def eval(self, z) -> np.ndarray:
        return np.exp(self.log_eval(z))

    def reciprocal(self) -> "Weight":
        return Weight(self.kind, self.dimension, dict(self.params), self.log_rule, self.af, -self.sign)

    def fit_slope(self) -> float | None:
        """Exact slope of ``log v`` against ``M`` when it is a constant (assoc kind)."""
        if self.kind == "assoc":
            return self.sign * float(self.params["N"])
        return None

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "dimension": self.dimension}
        if self.kind == "assoc":
            d["seq"] = self.af.seq.to_dict()
            d["N"] = self.params["N"]
        elif self.kind == "custom":
            d["name"] = self.params.get("name", "custom")
        else:
            d.update(self.params)
        if self.sign < 0:
            d["reciprocal"] = True
        return d


def polynomial_weight(t: float, dimension: int = 1) -> Weight:
    return Weight("polynomial", dimension, {"t": float(t)})


def exp_power_weight(k: float, s: float, dimension: int = 1) -> Weight:
    """``exp(k |z|^{1/s})``."""
    if not s >= 1:
        raise ValueError("s must be >= 1")
    return Weight("exp_power", dimension, {"k": float(k), "b": 1.0 / s})


def composite_weight(s: float, b: float, a: float, r: float, dimension: int = 1) -> Weight:
    """``exp(s |z|^b) (1 + |z|)^a log^r(e + |z|)``."""
    if min(s, a, r) < 0 or not 0 <= b <= 1:
        raise ValueError("composite weight needs s, a, r >= 0 and 0 <= b <= 1")
    return Weight("composite", dimension, {"s": float(s), "b": float(b), "a": float(a), "r": float(r)})


def custom_weight(rule: Callable, dimension: int = 1, name: str = "custom") -> Weight:
    """``rule`` maps radii to log weight values."""
    return Weight("custom", dimension, {"name": name}, log_rule=rule)


def assoc_weight(seq, N: float, dimension: int = 1) -> Weight:
    """``exp(N M(|xi|))``."""
    if not N > 0:
        raise ValueError("N must be positive")
    af = seq if isinstance(seq, AssociatedFunction) else AssociatedFunction(seq)
    return Weight("assoc", dimension, {"N": float(N)}, af=af)


def weight_from_dict(d: dict) -> Weight:
    kind = d["kind"]
    dim = int(d.get("dimension", 1))
    if kind == "assoc":
        w = assoc_weight(sequence_from_dict(d["seq"]), float(d["N"]), dim)
    elif kind == "polynomial":
        w = polynomial_weight(d["t"], dim)
    elif kind == "exp_power":
        w = Weight("exp_power", dim, {"k": float(d["k"]), "b": float(d["b"])})
    elif kind == "composite":
        w = composite_weight(d["s"], d["b"], d["a"], d["r"], dim)
    else:
        raise ValueError(f"weight kind {kind!r} cannot be built from JSON")
    return w.reciprocal() if d.get("reciprocal") else w


# ----------------------------------------------------------------------------
# checks


@dataclass
class ModeratenessReport:
    holds: bool
    witness_C: float
    worst_pair: tuple
    n_pairs: int
    skipped_fraction: float
    grid_restricted: bool = True

    def to_dict(self) -> dict:
        return {"holds": self.holds, "witness_C": self.witness_C,
                "worst_pair": [list(map(float, np.atleast_1d(p))) for p in self.worst_pair],
                "n_pairs": self.n_pairs, "skipped_fraction": self.skipped_fraction,
                "grid_restricted": True}


def _pairs(grid):
    """Index pairs ``(i, j, k)`` with ``grid[i] + grid[j] == grid[k]``; plus skipped count."""
    pts = np.asarray(grid, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    key = {tuple(np.round(p, 9)): i for i, p in enumerate(pts)}
    ii, jj, kk = [], [], []
    skipped = 0
    for i in range(len(pts)):
        s = np.round(pts[i] + pts, 9)
        for j in range(len(pts)):
            k = key.get(tuple(s[j]))
            if k is None:
                skipped += 1
            else:
                ii.append(i)
                jj.append(j)
                kk.append(k)
    return pts, np.array(ii, int), np.array(jj, int), np.array(kk, int), skipped


def _ratio_report(log_num, log_den, pts, ii, jj, skipped, holds_rule) -> ModeratenessReport:
    if len(ii) == 0:
        raise ValueError("no pair x, y with x + y inside the grid")
    lr = log_num - log_den
    w = int(np.argmax(lr))
    logc = float(lr[w])
    C = math.exp(logc) if logc < 709 else math.inf
    total = len(ii) + skipped
    return ModeratenessReport(holds_rule(logc), C, (pts[ii[w]], pts[jj[w]]), len(ii), skipped / total)


def submultiplicative_check(v: Weight, grid, tol: float = 1e-12) -> ModeratenessReport:
    """Max of ``v(x+y) / (v(x) v(y))`` over grid pairs whose sum stays on the grid."""
    pts, ii, jj, kk, skipped = _pairs(grid)
    lv = v.log_eval(pts if pts.shape[1] > 1 else pts[:, 0])
    return _ratio_report(lv[kk], lv[ii] + lv[jj], pts, ii, jj, skipped, lambda c: c <= tol)


def moderate_check(omega: Weight, v: Weight, grid) -> ModeratenessReport:
    """``witness_C = max omega(x+y) / (v(x) omega(y))``; holds iff finite."""
    if omega.dimension != v.dimension:
        raise ValueError("weights have different dimensions")
    pts, ii, jj, kk, skipped = _pairs(grid)
    z = pts if pts.shape[1] > 1 else pts[:, 0]
    lo = omega.log_eval(z)
    lv = v.log_eval(z)
    return _ratio_report(lo[kk], lv[ii] + lo[jj], pts, ii, jj, skipped, math.isfinite)


@dataclass
class BeurlingDomarReport:
    verdict: str  # converges | diverges | inconclusive
    partial_sums: list
    tail_exponent: float
    tail_estimate: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def beurling_domar_check(v: Weight, x_samples, n_max: int = 1000) -> BeurlingDomarReport:
    """Partial sums of ``sum_n ln v(n x) / n^2`` and a power-law tail estimate.

    The terms over the last decade are fitted to ``C n^{-alpha}`` (the largest
    term per ``n`` across samples); ``alpha > 1.1`` reads as convergent,
    ``alpha < 1.05`` as divergent, anything between as inconclusive.
    """
    if n_max < 100:
        raise ValueError("n_max must be at least 100")
    xs = np.atleast_1d(np.asarray(x_samples, dtype=np.float64))
    if xs.ndim == 1 and v.dimension > 1:
        xs = xs[:, None] * np.eye(v.dimension)[0]
    n = np.arange(1, n_max + 1, dtype=np.float64)
    sums = []
    worst = np.zeros(n_max)
    for x in xs:
        z = n[:, None] * np.atleast_1d(x)[None, :]
        terms = v.log_eval(z if v.dimension > 1 else z[:, 0]) / n ** 2
        sums.append(float(terms.sum()))
        worst = np.maximum(worst, np.abs(terms))
    lo = n_max // 10
    sel = worst[lo:] > 0
    if np.count_nonzero(sel) < 3:
        return BeurlingDomarReport("converges", sums, math.inf, 0.0)
    ln_n = np.log(n[lo:][sel])
    ln_t = np.log(worst[lo:][sel])
    slope, icpt = np.polyfit(ln_n, ln_t, 1)
    alpha = -float(slope)
    if alpha > 1.1:
        verdict = "converges"
        tail = math.exp(icpt) * n_max ** (1 - alpha) / (alpha - 1)
    elif alpha < 1.05:
        verdict, tail = "diverges", math.inf
    else:
        verdict, tail = "inconclusive", math.nan
    return BeurlingDomarReport(verdict, sums, alpha, tail)
