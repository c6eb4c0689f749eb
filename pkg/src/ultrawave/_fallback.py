"""Pure numpy implementations of the hot kernels.

These mirror the signatures in ``_kernels.pyx`` exactly; ``ultrawave.kernels``
picks whichever is importable.
"""
from __future__ import annotations

import numpy as np

_CHUNK = 1 << 22


def assoc_max(log_m, log_rho, concave=False):
    """Return ``(values, argmax)`` of ``max_p (p*log_rho - log_m[p])``.

    ``argmax`` is the smallest maximizing index. For a log-convex sequence
    (``concave=True``) the objective is concave in ``p`` and the maximizer is
    located by bisection on the successive ratios.
    """
    log_m = np.ascontiguousarray(log_m, dtype=np.float64)
    log_rho = np.ascontiguousarray(log_rho, dtype=np.float64)
    n_p = log_m.shape[0]
    if concave:
        # objective increases while log(M_p/M_{p-1}) < log rho
        ratios = np.diff(log_m)
        arg = np.searchsorted(ratios, log_rho, side="left")
        vals = arg * log_rho - log_m[arg]
        return vals, arg.astype(np.int64)
    ps = np.arange(n_p, dtype=np.float64)
    out_v = np.empty(log_rho.shape[0])
    out_a = np.empty(log_rho.shape[0], dtype=np.int64)
    step = max(1, _CHUNK // max(n_p, 1))
    for lo in range(0, log_rho.shape[0], step):
        obj = np.outer(log_rho[lo:lo + step], ps) - log_m[None, :]
        a = np.argmax(obj, axis=1)
        out_a[lo:lo + step] = a
        out_v[lo:lo + step] = obj[np.arange(a.shape[0]), a]
    return out_v, out_a


def m2_profile(log_m):
    """``g[n] = max_{p+q=n} (log_m[n] - log_m[p] - log_m[q])`` for every n."""
    log_m = np.asarray(log_m, dtype=np.float64)
    n_p = log_m.shape[0]
    g = np.zeros(n_p)
    for n in range(1, n_p):
        p = np.arange(n + 1)
        g[n] = np.max(log_m[n] - log_m[p] - log_m[n - p])
    return g


def ring_profile(log_amp, ring, cone_mask, n_rings, q):
    """Aggregate log-amplitudes per ring inside a cone.

    Parameters
    ----------
    log_amp : 1D float array
        ``ln |F * w|`` per frequency sample (``-inf`` marks unusable samples).
    ring : 1D int array
        Ring index per sample, ``-1`` for samples outside the annulus.
    cone_mask : 1D bool array
        Samples belonging to the cone.
    n_rings : int
    q : float
        ``inf`` takes the maximum; otherwise ``ln (sum exp(q*a))/q``.

    Returns
    -------
    prof : float array of length ``n_rings`` (``-inf`` for empty rings)
    count : int array, usable samples per ring
    """
    log_amp = np.asarray(log_amp, dtype=np.float64)
    ring = np.asarray(ring, dtype=np.int64)
    sel = np.asarray(cone_mask).astype(bool) & (ring >= 0) & (ring < n_rings) & np.isfinite(log_amp)
    r = ring[sel]
    a = log_amp[sel]
    count = np.bincount(r, minlength=n_rings)[:n_rings]
    prof = np.full(n_rings, -np.inf)
    if r.size == 0:
        return prof, count
    np.maximum.at(prof, r, a)
    if np.isinf(q):
        return prof, count
    top = prof[r]
    s = np.bincount(r, weights=np.exp(q * (a - top)), minlength=n_rings)[:n_rings]
    nz = count > 0
    prof[nz] = prof[nz] + np.log(s[nz]) / q
    return prof, count
