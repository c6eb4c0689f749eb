"""Compiled kernels versus the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Times each kernel on representative inputs with both backends, checks that
they agree, and times one end-to-end 1D wave-front run per backend (each in a
fresh interpreter so the import-time backend choice applies).
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from ultrawave import _fallback

try:
    from ultrawave import _kernels
except ImportError:
    _kernels = None


def _inputs(rng):
    from scipy.special import gammaln

    p = np.arange(4097, dtype=np.float64)
    log_m = 2.0 * gammaln(p + 1.0)
    log_rho = np.log(np.geomspace(1e-2, 1e6, 20000))
    n = 140 * 140
    log_amp = rng.standard_normal(n)
    ring = rng.integers(-1, 100, n).astype(np.int64)
    mask = (rng.random(n) < 0.2).astype(np.uint8)
    return {
        "assoc_max": ((log_m, log_rho, True), {}),
        "assoc_max_scan": ((log_m[:400], log_rho[:2000], False), {}),
        "m2_profile": ((log_m[:1500],), {}),
        "ring_profile": ((log_amp, ring, mask, 100, np.inf), {}),
        "ring_profile_q2": ((log_amp, ring, mask, 100, 2.0), {}),
    }


def _name(key):
    return key.split("_scan")[0].split("_q2")[0]


def _agree(a, b) -> bool:
    for x, y in zip(a, b):
        x, y = np.asarray(x), np.asarray(y)
        fin = np.isfinite(x) | np.isfinite(y)
        if not np.array_equal(np.isfinite(x), np.isfinite(y)):
            return False
        if not np.allclose(x[fin], y[fin], rtol=1e-12, atol=1e-12):
            return False
    return True


def _end_to_end(pure: bool) -> float:
    code = ("import time;from ultrawave.verify import battery_signal;from ultrawave.wavefront import wf_estimate;"
            "f=battery_signal('step');wf_estimate(f);t=time.perf_counter();wf_estimate(f,'MOD');"
            "print(time.perf_counter()-t)")
    env = dict(os.environ, ULTRAWAVE_PURE="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json")
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    rows = {}
    for key, (a, kw) in _inputs(rng).items():
        name = _name(key)
        f_py = getattr(_fallback, name)
        t_py = min(timeit.repeat(lambda: f_py(*a, **kw), number=1, repeat=args.repeat))
        row = {"python_s": t_py}
        if _kernels is not None:
            f_cy = getattr(_kernels, name)
            t_cy = min(timeit.repeat(lambda: f_cy(*a, **kw), number=1, repeat=args.repeat))
            row.update(cython_s=t_cy, speedup=t_py / t_cy if t_cy > 0 else float("inf"),
                       agree=_agree(f_py(*a, **kw), f_cy(*a, **kw)))
        rows[key] = row
    if not args.skip_end_to_end:
        rows["wf_estimate_MOD_1d"] = {"python_s": _end_to_end(True)}
        if _kernels is not None:
            t = _end_to_end(False)
            rows["wf_estimate_MOD_1d"].update(cython_s=t, speedup=rows["wf_estimate_MOD_1d"]["python_s"] / t)
    print(f"{'kernel':<22}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}  agree")
    for k, r in rows.items():
        cy = r.get("cython_s")
        cy_s = "" if cy is None else f"{1e3 * cy:.2f}"
        sp_s = "" if cy is None else f"{r['speedup']:.1f}x"
        print(f"{k:<22}{1e3 * r['python_s']:>14.2f}{cy_s:>14}{sp_s:>10}  {r.get('agree', '')}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"compiled_available": _kernels is not None, "results": rows}, fh, indent=1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
