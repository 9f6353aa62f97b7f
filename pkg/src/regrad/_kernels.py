"""Hot loops, in two interchangeable flavours.

Each kernel exists as ``<name>_np`` (pure numpy) and ``<name>_nb`` (numba
``@njit``).  The unsuffixed name is bound to the numba version unless numba
is missing or ``REGRAD_DISABLE_NUMBA`` is set to a truthy value.  Both
flavours must agree to rounding; tests compare them directly.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

_FLAG = os.environ.get("REGRAD_DISABLE_NUMBA", "").strip().lower()
NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and _FLAG not in ("1", "true", "yes", "on")


def _njit(func):
    if not NUMBA_AVAILABLE:
        return None
    return numba.njit(cache=True, nogil=True)(func)


# -- batched amplitudes -------------------------------------------------------

def power_of_sums_np(coeffs, cols, p):
    """``(sum_j coeffs[:, cols[j]]) ** p`` row-wise, by repeated multiplication."""
    n = coeffs.shape[0]
    s = np.zeros(n, dtype=np.complex128)
    for j in cols:
        s = s + coeffs[:, j]
    out = s.copy()
    for _ in range(p - 1):
        out = out * s
    return out


def _power_of_sums(coeffs, cols, p):
    n = coeffs.shape[0]
    out = np.empty(n, dtype=np.complex128)
    for i in range(n):
        s = 0j
        for j in cols:
            s = s + coeffs[i, j]
        acc = s
        for _ in range(p - 1):
            acc = acc * s
        out[i] = acc
    return out


power_of_sums_nb = _njit(_power_of_sums)


# -- collision search ---------------------------------------------------------

def _quantize(x, y, tol):
    return np.stack(
        [np.round(x.real / tol), np.round(x.imag / tol), np.round(y.real / tol), np.round(y.imag / tol)]
    ).astype(np.int64)


def _bucket_bounds(keys):
    # lexsort uses the last row as primary key; stable, so ties keep index order
    order = np.lexsort(keys[::-1])
    sk = keys[:, order]
    change = np.any(sk[:, 1:] != sk[:, :-1], axis=0)
    starts = np.concatenate(([0], np.nonzero(change)[0] + 1, [order.size])).astype(np.int64)
    return order.astype(np.int64), starts


_CHUNK = 512


def collision_search_np(x, y, z, tol):
    """First pair (i, j), i < j in scan order, with |x_i-x_j|, |y_i-y_j| <= tol
    and |z_i-z_j| > 10*tol among states sharing a quantized (x, y) bucket.

    Returns (-1, -1) when no such pair exists.
    """
    if x.size < 2:
        return -1, -1
    order, starts = _bucket_bounds(_quantize(x, y, tol))
    for b in range(starts.size - 1):
        idx = order[starts[b]:starts[b + 1]]
        if idx.size < 2:
            continue
        xs, ys, zs = x[idx], y[idx], z[idx]
        for a0 in range(0, idx.size, _CHUNK):
            sl = slice(a0, a0 + _CHUNK)
            close = (np.abs(xs[sl, None] - xs[None, :]) <= tol) & (np.abs(ys[sl, None] - ys[None, :]) <= tol)
            far = np.abs(zs[sl, None] - zs[None, :]) > 10.0 * tol
            upper = np.arange(a0, a0 + close.shape[0])[:, None] < np.arange(idx.size)[None, :]
            hit = close & far & upper
            if hit.any():
                a, c = np.argwhere(hit)[0]
                return int(idx[a0 + a]), int(idx[c])
    return -1, -1


def _collision_scan(x, y, z, tol, order, starts):
    for b in range(starts.size - 1):
        lo = starts[b]
        hi = starts[b + 1]
        for u in range(lo, hi):
            i = order[u]
            for v in range(u + 1, hi):
                j = order[v]
                if abs(x[i] - x[j]) <= tol and abs(y[i] - y[j]) <= tol and abs(z[i] - z[j]) > 10.0 * tol:
                    return i, j
    return -1, -1


_collision_scan_nb = _njit(_collision_scan)


def collision_search_nb(x, y, z, tol):
    if x.size < 2:
        return -1, -1
    order, starts = _bucket_bounds(_quantize(x, y, tol))
    i, j = _collision_scan_nb(x, y, z, tol, order, starts)
    return int(i), int(j)


# -- normal equations for grid regraduation -----------------------------------

def normal_matrix_np(m, k, w, i, j):
    """Assemble ``A.T @ A`` where row r of A reads
    ``(1-w)·e[k] + w·e[k+1] - e[i] - e[j]``."""
    out = np.zeros(m * m)
    for lo in range(0, k.size, 1 << 16):
        sl = slice(lo, lo + (1 << 16))
        one = np.ones_like(w[sl])
        cols = np.stack([k[sl], k[sl] + 1, i[sl], j[sl]], axis=1)
        vals = np.stack([1.0 - w[sl], w[sl], -one, -one], axis=1)
        flat = (cols[:, :, None] * m + cols[:, None, :]).ravel()
        prod = (vals[:, :, None] * vals[:, None, :]).ravel()
        out += np.bincount(flat, weights=prod, minlength=m * m)
    return out.reshape(m, m)


def _normal_matrix(m, k, w, i, j):
    out = np.zeros((m, m))
    cols = np.empty(4, dtype=np.int64)
    vals = np.empty(4)
    for r in range(k.size):
        cols[0] = k[r]
        cols[1] = k[r] + 1
        cols[2] = i[r]
        cols[3] = j[r]
        vals[0] = 1.0 - w[r]
        vals[1] = w[r]
        vals[2] = -1.0
        vals[3] = -1.0
        for a in range(4):
            for b in range(4):
                out[cols[a], cols[b]] += vals[a] * vals[b]
    return out


normal_matrix_nb = _njit(_normal_matrix)


if USE_NUMBA:
    power_of_sums = power_of_sums_nb
    collision_search = collision_search_nb
    normal_matrix = normal_matrix_nb
else:
    power_of_sums = power_of_sums_np
    collision_search = collision_search_np
    normal_matrix = normal_matrix_np


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def warmup():
    """Trigger JIT compilation so later timings exclude it."""
    c = np.ones((2, 2), dtype=np.complex128)
    power_of_sums(c, np.array([0, 1], dtype=np.int64), 2)
    collision_search(c[:, 0], c[:, 1], c[:, 0], 1e-9)
    normal_matrix(3, np.array([0]), np.array([0.5]), np.array([1]), np.array([2]))
