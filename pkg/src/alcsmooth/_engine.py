"""Weighted-sum engine shared by the estimators and the bandwidth selectors.

For a target t the estimators all reduce to a pair of sums over the data,

    num(t) = sum_i w_i(t) * y_i        den(t) = sum_i w_i(t)

where w_i is a product of per-dimension domain kernels and, for the
anisotropic variant, one extra kernel on pilot-value differences. Two
evaluation paths produce these sums:

* a windowed path for compact-support domain kernels in one or two
  dimensions: data are sorted along the first coordinate once and each
  target only visits the slice that can carry weight (numba-compiled);
* a dense chunked path for everything else (Gaussian domain kernel or
  q > 2), evaluated with numpy broadcasting under a fixed memory budget.

Path choice depends only on the inputs, and each path accumulates in a
fixed order, so repeated calls are bit-identical regardless of scheduling.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .kernels import KernelFamily, eval_kernel

_KERNEL_CODE = {
    KernelFamily.UNIFORM: 0,
    KernelFamily.EPANECHNIKOV: 1,
    KernelFamily.GAUSSIAN: 2,
}

# Dense-path memory budget: at most this many matrix elements per chunk.
_CHUNK_ELEMS = 1 << 22


@njit(inline="always")
def _k(code, u):
    if code == 0:
        if -1.0 <= u <= 1.0:
            return 0.5
        return 0.0
    if code == 1:
        if -1.0 <= u <= 1.0:
            return 0.75 * (1.0 - u * u)
        return 0.0
    return 0.3989422804014327 * np.exp(-0.5 * u * u)


@njit(cache=True)
def _sums_1d(xs, ys, ps, tx, pt, h, hr, dom_code, rng_code, has_range):
    m = tx.size
    num = np.zeros(m, dtype=np.float64)
    den = np.zeros(m, dtype=np.float64)
    for i in range(m):
        t = tx[i]
        if has_range and not np.isfinite(pt[i]):
            continue
        lo = np.searchsorted(xs, t - h, side="left")
        hi = np.searchsorted(xs, t + h, side="right")
        accn = 0.0
        accd = 0.0
        for j in range(lo, hi):
            w = _k(dom_code, (xs[j] - t) / h)
            if has_range and w > 0.0:
                w *= _k(rng_code, (ps[j] - pt[i]) / hr)
            accn += w * ys[j]
            accd += w
        num[i] = accn
        den[i] = accd
    return num, den


@njit(cache=True)
def _sums_2d(x1s, x2s, ys, ps, t1, t2, pt, h1, h2, hr, dom_code, rng_code, has_range):
    m = t1.size
    num = np.zeros(m, dtype=np.float64)
    den = np.zeros(m, dtype=np.float64)
    for i in range(m):
        a = t1[i]
        b = t2[i]
        if has_range and not np.isfinite(pt[i]):
            continue
        lo = np.searchsorted(x1s, a - h1, side="left")
        hi = np.searchsorted(x1s, a + h1, side="right")
        accn = 0.0
        accd = 0.0
        for j in range(lo, hi):
            u2 = (x2s[j] - b) / h2
            if u2 < -1.0 or u2 > 1.0:
                continue
            w = _k(dom_code, (x1s[j] - a) / h1) * _k(dom_code, u2)
            if has_range and w > 0.0:
                w *= _k(rng_code, (ps[j] - pt[i]) / hr)
            accn += w * ys[j]
            accd += w
        num[i] = accn
        den[i] = accd
    return num, den


def _sums_dense(x, y, targets, kernel, h, pilot_data, pilot_targets, range_kernel, range_bw):
    n, q = x.shape
    m = targets.shape[0]
    num = np.empty(m, dtype=np.float64)
    den = np.empty(m, dtype=np.float64)
    if range_kernel is not None:
        bad = ~np.isfinite(pilot_targets)
        pt = np.where(bad, 0.0, pilot_targets)
    chunk = max(1, _CHUNK_ELEMS // max(n, 1))
    for s in range(0, m, chunk):
        tc = targets[s : s + chunk]
        w = eval_kernel(kernel, (x[:, 0][:, None] - tc[:, 0][None, :]) / h[0])
        for j in range(1, q):
            w *= eval_kernel(kernel, (x[:, j][:, None] - tc[:, j][None, :]) / h[j])
        if range_kernel is not None:
            w *= eval_kernel(range_kernel, (pilot_data[:, None] - pt[s : s + chunk][None, :]) / range_bw)
        num[s : s + chunk] = (w * y[:, None]).sum(axis=0)
        den[s : s + chunk] = w.sum(axis=0)
    if range_kernel is not None and bad.any():
        num[bad] = 0.0
        den[bad] = 0.0
    return num, den


def weighted_sums(
    x: np.ndarray,
    y: np.ndarray,
    targets: np.ndarray,
    kernel: KernelFamily,
    h: np.ndarray,
    pilot_data: np.ndarray | None = None,
    pilot_targets: np.ndarray | None = None,
    range_kernel: KernelFamily | None = None,
    range_bw: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Kernel-weighted sums of ``y`` and of the weights at each target.

    ``x`` is (n, q), ``targets`` (m, q) and ``h`` (q,). When ``range_kernel``
    is given, ``pilot_data``/``pilot_targets`` supply the values whose
    differences feed it, scaled by ``range_bw``. Targets whose pilot value
    is not finite get zero sums (flagged undefined by the caller).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    targets = np.ascontiguousarray(targets, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.float64)
    n, q = x.shape
    m = targets.shape[0]
    has_range = range_kernel is not None
    if m == 0:
        return np.empty(0), np.empty(0)

    if kernel.compact_support and q in (1, 2):
        order = np.argsort(x[:, 0], kind="stable")
        empty = np.empty(0, dtype=np.float64)
        ps = np.ascontiguousarray(pilot_data, dtype=np.float64)[order] if has_range else empty
        pt = np.ascontiguousarray(pilot_targets, dtype=np.float64) if has_range else empty
        ys = y[order]
        dom = _KERNEL_CODE[kernel]
        rng = _KERNEL_CODE[range_kernel] if has_range else 0
        hr = float(range_bw) if has_range else 1.0
        if q == 1:
            xs = np.ascontiguousarray(x[order, 0])
            return _sums_1d(
                xs, ys, ps, targets[:, 0].copy(), pt, float(h[0]), hr, dom, rng, has_range
            )
        x1s = np.ascontiguousarray(x[order, 0])
        x2s = np.ascontiguousarray(x[order, 1])
        return _sums_2d(
            x1s, x2s, ys, ps,
            targets[:, 0].copy(), targets[:, 1].copy(), pt,
            float(h[0]), float(h[1]), hr, dom, rng, has_range,
        )

    pd = np.asarray(pilot_data, dtype=np.float64) if has_range else None
    pt = np.asarray(pilot_targets, dtype=np.float64) if has_range else None
    rb = float(range_bw) if has_range else None
    return _sums_dense(x, y, targets, kernel, h, pd, pt, range_kernel, rb)
