"""Defining sequences, their condition checks and associated functions.

All arithmetic is carried out on ``log M_p``; ``(p!)^2`` already overflows a
double near ``p = 86``.
"""
from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.special import gammaln

from . import kernels

DEFAULT_P_MAX = 512
MAX_P_MAX = 1 << 22
TOL = 1e-9
_EXACT = ("subadditivity", "subadditivity_scaled", "doubling")


class TruncationError(RuntimeError):
    """The supremum defining M(rho) was not attained below the truncation index."""


class LemmaViolation(AssertionError):
    """An exact inequality for the associated function failed on the grid."""


@dataclass(frozen=True, eq=False)
class DefiningSequence:
    """Positive sequence ``M_0 = 1, M_1, ..., M_{p_max}`` stored as ``log M_p``.

    ``kind`` is ``"gevrey"``, ``"product"`` or ``"custom"``; ``params`` holds
    ``{"s": s}`` or ``{"factors": [...]}``.
    """

    log_values: np.ndarray
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        lv = np.asarray(self.log_values, dtype=np.float64)
        if lv.ndim != 1 or lv.shape[0] < 3:
            raise ValueError("a defining sequence needs at least M_0, M_1, M_2")
        if not np.all(np.isfinite(lv)):
            raise ValueError("sequence values must be positive and finite")
        if abs(lv[0]) > 1e-12:
            raise ValueError("M_0 must equal 1")
        lv = lv.copy()
        lv[0] = 0.0
        lv.setflags(write=False)
        object.__setattr__(self, "log_values", lv)

    @property
    def p_max(self) -> int:
        return self.log_values.shape[0] - 1

    @property
    def values(self) -> np.ndarray:
        """``M_p`` in linear scale (``inf`` where it overflows)."""
        with np.errstate(over="ignore"):
            return np.exp(self.log_values)

    @property
    def extendable(self) -> bool:
        return self.kind == "gevrey"

    def extended(self, p_max: int) -> "DefiningSequence":
        """Same sequence on a longer index range (closed-form kinds only)."""
        if self.kind != "gevrey":
            raise TruncationError(f"{self.kind} sequence cannot be extended past p_max={self.p_max}")
        return gevrey_sequence(self.params["s"], p_max)

    def is_log_convex(self) -> bool:
        lv = self.log_values
        slack = lv[:-2] + lv[2:] - 2.0 * lv[1:-1]
        scale = 1e-12 * np.maximum(1.0, np.abs(lv[1:-1]))
        return bool(np.all(slack >= -scale))

    def to_dict(self) -> dict:
        if self.kind == "gevrey":
            return {"kind": "gevrey", "s": self.params["s"], "p_max": self.p_max}
        if self.kind == "product":
            return {"kind": "product", "factors": list(self.params["factors"])}
        return {"kind": "custom", "log_values": self.log_values.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def sequence_from_dict(spec: dict) -> DefiningSequence:
    kind = spec.get("kind")
    if kind == "gevrey":
        return gevrey_sequence(float(spec["s"]), int(spec.get("p_max", DEFAULT_P_MAX)))
    if kind == "product":
        return product_sequence(spec["factors"])
    if kind == "custom":
        if "log_values" in spec:
            return DefiningSequence(np.asarray(spec["log_values"], float), "custom")
        return DefiningSequence(np.log(np.asarray(spec["values"], float)), "custom")
    raise ValueError(f"unknown sequence kind {kind!r}")


def sequence_from_json(text: str) -> DefiningSequence:
    return sequence_from_dict(json.loads(text))


def gevrey_sequence(s: float, p_max: int = DEFAULT_P_MAX) -> DefiningSequence:
    """``M_p = (p!)^s`` for ``s > 1``."""
    if not s > 1:
        raise ValueError(f"Gevrey order must satisfy s > 1 (non-quasianalytic), got {s}")
    if p_max < 2:
        raise ValueError("p_max must be at least 2")
    p = np.arange(p_max + 1, dtype=np.float64)
    return DefiningSequence(s * gammaln(p + 1.0), "gevrey", {"s": float(s)})


def _factor_condition(log_s: np.ndarray) -> tuple[float, float]:
    """Smallest ``H`` (with ``A = 1``) such that
    ``s_{p+1}...s_{p+q} <= A H^p s_1...s_q`` on the available range."""
    cum = np.concatenate([[0.0], np.cumsum(log_s)])
    n = log_s.shape[0]
    best = 0.0
    for p in range(1, n):
        q = np.arange(1, n - p + 1)
        excess = (cum[p + q] - cum[p]) - cum[q]
        best = max(best, float(np.max(excess)) / p)
    return 1.0, math.exp(best)


def product_sequence(factors: Sequence[float]) -> DefiningSequence:
    """``M_p = s_1 s_2 ... s_p`` from nondecreasing positive factors ``s_j``.

    The factor form of (M.2) is checked on the available range and its witness
    ``(A, H)`` stored in ``info["factor_condition"]``.
    """
    s = np.asarray(list(factors), dtype=np.float64)
    if s.ndim != 1 or s.shape[0] < 2:
        raise ValueError("need at least two factors")
    if np.any(~np.isfinite(s)) or np.any(s <= 0):
        raise ValueError("factors must be positive")
    if np.any(np.diff(s) < 0):
        raise ValueError("factors must be monotonically nondecreasing")
    log_s = np.log(s)
    lv = np.concatenate([[0.0], np.cumsum(log_s)])
    A, H = _factor_condition(log_s)
    return DefiningSequence(lv, "product", {"factors": s.tolist()},
                            {"factor_condition": {"A": A, "H": H}})


def fine_tuned_sequence(l_factors: Sequence[float]) -> DefiningSequence:
    """``M_p = p!^{1/2} L_p`` with ``L_p = l_1 ... l_p``."""
    L = product_sequence(l_factors)
    p = np.arange(L.p_max + 1, dtype=np.float64)
    lv = 0.5 * gammaln(p + 1.0) + L.log_values
    return DefiningSequence(lv, "custom", {"l_factors": L.params["factors"]}, dict(L.info))


def growth_ratio_condition(l_factors: Sequence[float], alpha: float, ks=(2, 3, 4)) -> float:
    """Largest ``(l_{kp}/l_p)^2 / k^alpha`` over integer ``k`` and admissible ``p``."""
    l = np.asarray(list(l_factors), dtype=np.float64)
    worst = 0.0
    for k in ks:
        p = np.arange(1, l.shape[0] // k + 1)
        if p.size == 0:
            continue
        ratio = (l[k * p - 1] / l[p - 1]) ** 2 / k ** alpha
        worst = max(worst, float(ratio.max()))
    return worst


# ----------------------------------------------------------------------------
# conditions (M.1), (M.2), (M.3)'


@dataclass
class M2Witness:
    holds: bool
    A: float
    H: float
    H_exact: float
    tradeoff: list = field(default_factory=list)


@dataclass
class M3Verdict:
    holds: bool | None
    partial_sum: float
    tail_ratio: float
    raabe: float
    verdict: str


@dataclass
class ConditionReport:
    m1: bool
    m2: M2Witness
    m3prime: M3Verdict
    lower_bound: float
    p_max: int

    def to_dict(self) -> dict:
        return {
            "m1": self.m1,
            "m2": {"holds": self.m2.holds, "A": self.m2.A, "H": self.m2.H,
                   "H_exact": self.m2.H_exact},
            "m3prime": {"holds": self.m3prime.holds, "partial_sum": self.m3prime.partial_sum,
                        "tail_ratio": self.m3prime.tail_ratio, "raabe": self.m3prime.raabe,
                        "verdict": self.m3prime.verdict, "heuristic": True},
            "lower_bound": self.lower_bound,
            "p_max": self.p_max,
            "grid_restricted": True,
        }


def m2_constants(seq: DefiningSequence, h_step: float = 0.01) -> M2Witness:
    """Brute-force (M.2) witnesses over all ``p + q <= p_max``.

    For every ``H`` on the grid ``1 + h_step, 1 + 2 h_step, ...`` the smallest
    admissible ``A(H) = max exp(log M_{p+q} - log M_p - log M_q - (p+q) log H)``
    is computed; the reported pair is the first grid ``H`` with ``A(H) = 1``.
    """
    g = kernels.m2_profile(seq.log_values)
    n = np.arange(g.shape[0], dtype=np.float64)
    per_n = g[1:] / n[1:]
    h_exact = math.exp(max(0.0, float(per_n.max())))
    steps = max(1, math.ceil((h_exact - 1.0) / h_step - 1e-9))
    grid = 1.0 + h_step * np.arange(1, steps + 1)
    log_a = np.max(g[None, :] - n[None, :] * np.log(grid)[:, None], axis=1)
    with np.errstate(over="ignore"):
        a_of_h = np.exp(np.maximum(log_a, 0.0))
    tradeoff = list(zip(grid.tolist(), a_of_h.tolist()))
    H = float(grid[-1])
    A = float(a_of_h[-1])
    # growth of the per-n witness: bounded for (M.2) sequences
    half = per_n[: max(1, per_n.shape[0] // 2)]
    holds = bool(math.exp(per_n.max()) <= 1.5 * math.exp(max(half.max(), 0.0)) + 1e-12)
    return M2Witness(holds=holds, A=A, H=H, H_exact=h_exact, tradeoff=tradeoff)


def m3prime_verdict(seq: DefiningSequence) -> M3Verdict:
    """Partial sum of ``M_{p-1}/M_p`` with a ratio/Raabe tail test (heuristic)."""
    lv = seq.log_values
    log_t = lv[:-1] - lv[1:]          # log of M_{p-1}/M_p, p = 1..p_max
    partial = float(np.sum(np.exp(log_t)))
    n = log_t.shape[0]
    lo = max(0, n - max(4, n // 10))
    ratios = np.exp(log_t[lo + 1:] - log_t[lo:-1])
    tail_ratio = float(np.mean(ratios))
    p_idx = np.arange(lo + 1, n, dtype=np.float64)
    raabe = float(np.mean(p_idx * (1.0 / ratios - 1.0)))
    if tail_ratio < 0.95:
        holds, verdict = True, "converges (ratio test)"
    elif tail_ratio > 1.05:
        holds, verdict = False, "diverges (ratio test)"
    elif raabe > 1.1:
        holds, verdict = True, "converges (Raabe test)"
    elif raabe < 0.9:
        holds, verdict = False, "diverges (Raabe test)"
    else:
        holds, verdict = None, "inconclusive"
    return M3Verdict(holds, partial, tail_ratio, raabe, verdict)


def check_conditions(seq: DefiningSequence) -> ConditionReport:
    if seq.p_max < 4:
        raise ValueError("condition checks need p_max >= 4")
    p = np.arange(1, seq.p_max + 1, dtype=np.float64)
    lower = float(np.exp(np.min(seq.log_values[1:] / p)))
    return ConditionReport(
        m1=seq.is_log_convex(),
        m2=m2_constants(seq),
        m3prime=m3prime_verdict(seq),
        lower_bound=lower,
        p_max=seq.p_max,
    )


# ----------------------------------------------------------------------------
# associated function


class AssociatedFunction:
    """Truncated-sup evaluator of ``M(rho) = sup_p ln_+(rho^p / M_p)``.

    Every evaluation is certified: the maximizing index must lie strictly
    below the truncation index. Closed-form sequences are extended on demand
    (doubling ``p_max``); finite ones raise :class:`TruncationError`.
    """

    def __init__(self, seq: DefiningSequence, p_max: int | None = None, auto_extend: bool = True):
        if p_max is not None and p_max != seq.p_max:
            seq = seq.extended(p_max) if p_max > seq.p_max else DefiningSequence(
                seq.log_values[: p_max + 1], seq.kind, seq.params, seq.info)
        self.seq = seq
        self.auto_extend = auto_extend and seq.extendable
        self._concave = seq.is_log_convex()
        self._cache: dict[float, float] = {}
        self._lock = threading.Lock()

    @property
    def p_max(self) -> int:
        return self.seq.p_max

    def _raw(self, log_rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return kernels.assoc_max(self.seq.log_values, log_rho, self._concave)

    def eval_many(self, rho) -> np.ndarray:
        """Vectorised, certified evaluation (no caching)."""
        rho = np.asarray(rho, dtype=np.float64)
        if np.any(~(rho > 0)):
            raise ValueError("M(rho) is defined for rho > 0 only")
        flat = np.log(rho.ravel())
        while True:
            vals, arg = self._raw(flat)
            worst = int(arg.max()) if arg.size else 0
            if worst < self.p_max:
                break
            if not self.auto_extend or self.p_max >= MAX_P_MAX:
                bad = float(np.exp(flat[np.argmax(arg)]))
                raise TruncationError(
                    f"sup not attained below p_max={self.p_max} at rho={bad:.6g}")
            with self._lock:
                if self.seq.p_max <= worst:
                    self.seq = self.seq.extended(min(MAX_P_MAX, 2 * self.p_max))
        return np.maximum(vals, 0.0).reshape(rho.shape)

    def maximizer(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=np.float64)
        self.eval_many(rho)
        return self._raw(np.log(rho.ravel()))[1].reshape(rho.shape)

    def __call__(self, rho):
        if np.ndim(rho) == 0:
            return assoc_eval(self, float(rho))
        return self.eval_many(rho)


def assoc_eval(af: AssociatedFunction, rho: float) -> float:
    """Certified, cached ``M(rho)``."""
    rho = float(rho)
    hit = af._cache.get(rho)
    if hit is not None:
        return hit
    val = float(af.eval_many(np.array([rho]))[0])
    with af._lock:
        af._cache[rho] = val
    return val


def growth_exponent(af: AssociatedFunction, lo: float = 1e2, hi: float = 1e6, n: int = 200) -> float:
    """Least-squares slope of ``ln M(rho)`` against ``ln rho`` on ``[lo, hi]``."""
    rho = np.geomspace(lo, hi, n)
    m = af.eval_many(rho)
    return float(np.polyfit(np.log(rho), np.log(m), 1)[0])


# ----------------------------------------------------------------------------
# inequalities for the associated function


@dataclass
class InequalityResult:
    name: str
    holds: bool
    checked: int
    violations: int
    worst_slack: float
    constants: dict = field(default_factory=dict)
    violating_rho: list = field(default_factory=list)


@dataclass
class LemmaReport:
    results: dict

    @property
    def passed(self) -> bool:
        return all(r.holds for r in self.results.values())

    def to_dict(self) -> dict:
        return {k: {"holds": r.holds, "checked": r.checked, "violations": r.violations,
                    "worst_slack": r.worst_slack, "constants": r.constants}
                for k, r in self.results.items()}


def verify_assoc_lemma(af: AssociatedFunction, rho_grid, L: float | Sequence[float] = (1.0, 2.0, 5.0),
                       n: int = 2, n_tuples: int = 1000, A: float | None = None,
                       H: float | None = None, seed: int = 0, strict: bool = True) -> LemmaReport:
    """Check the four associated-function inequalities on a grid.

    (i)   ``M(rho_1 + ... + rho_n) <= M(rho_1) + ... + M(rho_n)``
    (i')  ``M(rho_1 + ... + rho_n) <= M(n rho_1) + ... + M(n rho_n)``
    (ii)  ``2 M(rho) <= M(H rho) + ln_+ A``
    (iii) ``M(L rho) <= 1.5 L M(rho) + C``        (minimal ``C`` reported)
    (iv)  ``L M(rho) <= M(B^{L-1} rho) + K_L``    (``B = H``, minimal ``K_L``)

    (i), (i') and (ii) are checked exactly; a violation beyond ``1e-9`` raises
    :class:`LemmaViolation` when ``strict``. Note that (i) fails whenever one
    term sits in the region where ``M`` vanishes (``M(1 + 1) = ln 2 > 0`` for
    ``M_p = p!^2``); (i') is the form that follows from ``(M.1)``.
    """
    rho = np.asarray(rho_grid, dtype=np.float64)
    if np.any(rho <= 0):
        raise ValueError("rho grid must be positive")
    Ls = [float(L)] if np.ndim(L) == 0 else [float(x) for x in L]
    if any(x < 1 for x in Ls):
        raise ValueError("L must be >= 1")
    m = af.eval_many(rho)
    if A is None or H is None:
        # (ii) pairs p with 2p: the witnesses must cover twice the largest maximizer
        p_need = 2 * int(af.maximizer(np.array([4.0 * rho.max()]))[0]) + 2
        seq = af.seq
        if seq.p_max < p_need and seq.extendable:
            seq = seq.extended(p_need)
        w = m2_constants(seq)
        A = w.A if A is None else A
        H = w.H if H is None else H
    results = {}

    rng = np.random.default_rng(seed)
    idx = rng.integers(0, rho.shape[0], size=(n_tuples, n))
    tuples = rho[idx]
    lhs = af.eval_many(tuples.sum(axis=1))
    rhs = m[idx].sum(axis=1)
    slack = rhs - lhs
    bad = slack < -TOL * np.maximum(1.0, np.abs(rhs))
    results["subadditivity"] = InequalityResult(
        "subadditivity", not bad.any(), n_tuples, int(bad.sum()), float(slack.min()),
        {"n": n}, tuples[bad].tolist())
    # provable form: (sum rho_k)^p <= n^p max(rho_k)^p
    rhs = af.eval_many(n * tuples).sum(axis=1)
    slack = rhs - lhs
    bad = slack < -TOL * np.maximum(1.0, np.abs(rhs))
    results["subadditivity_scaled"] = InequalityResult(
        "subadditivity_scaled", not bad.any(), n_tuples, int(bad.sum()), float(slack.min()),
        {"n": n}, tuples[bad].tolist())

    lhs = 2.0 * m
    rhs = af.eval_many(H * rho) + max(0.0, math.log(A))
    slack = rhs - lhs
    bad = slack < -TOL * np.maximum(1.0, np.abs(rhs))
    results["doubling"] = InequalityResult(
        "doubling", not bad.any(), rho.shape[0], int(bad.sum()), float(slack.min()),
        {"A": A, "H": H}, rho[bad].tolist())

    for Lv in Ls:
        excess = af.eval_many(Lv * rho) - 1.5 * Lv * m
        C = max(0.0, float(excess.max()))
        results[f"dilation_L{Lv:g}"] = InequalityResult(
            f"dilation_L{Lv:g}", math.isfinite(C), rho.shape[0], 0, float(-excess.max()),
            {"L": Lv, "C": C})
        B = H
        excess = Lv * m - af.eval_many(B ** (Lv - 1.0) * rho)
        K = max(0.0, float(excess.max()))
        results[f"power_L{Lv:g}"] = InequalityResult(
            f"power_L{Lv:g}", math.isfinite(K), rho.shape[0], 0, float(-excess.max()),
            {"L": Lv, "B": B, "K_L": K})

    report = LemmaReport(results)
    if strict:
        failed = [r for k, r in results.items() if k in _EXACT and not r.holds]
        if failed:
            msg = "; ".join(f"{r.name}: {r.violations} violations, e.g. rho={r.violating_rho[:3]}"
                            for r in failed)
            raise LemmaViolation(msg)
    return report
