"""Pure numpy implementations of the hot convolution kernels.

Used when the compiled extension is unavailable.  Both lanes must agree on
every weight to ~1e-13 relative; exact bit-equality is not promised because
the accumulation trees differ.
"""

from __future__ import annotations

import numpy as np

# pairs per expansion block; bounds peak memory of the outer products
_BLOCK_PAIRS = 1 << 22


def _dedup_int_keys(keys: np.ndarray, weights: np.ndarray):
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    weights = weights[order]
    boundary = np.empty(len(keys), dtype=bool)
    boundary[0] = True
    np.not_equal(keys[1:], keys[:-1], out=boundary[1:])
    starts = np.flatnonzero(boundary)
    return keys[starts], np.add.reduceat(weights, starts)


def accumulate_packed(
    ka: np.ndarray, wa: np.ndarray, kb: np.ndarray, wb: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Sparse convolution on additive int64 keys.

    Returns (unique sorted keys, accumulated weights); the accumulation
    order per output key is fixed by the input order, so results are
    reproducible run to run.
    """
    ma, mb = len(ka), len(kb)
    if ma == 0 or mb == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    chunk = max(1, _BLOCK_PAIRS // mb)
    parts_k = []
    parts_w = []
    for i0 in range(0, ma, chunk):
        i1 = min(ma, i0 + chunk)
        keys = (ka[i0:i1, None] + kb[None, :]).ravel()
        wts = (wa[i0:i1, None] * wb[None, :]).ravel()
        k_u, w_u = _dedup_int_keys(keys, wts)
        parts_k.append(k_u)
        parts_w.append(w_u)
    if len(parts_k) == 1:
        return parts_k[0], parts_w[0]
    return _dedup_int_keys(np.concatenate(parts_k), np.concatenate(parts_w))


def dense_convolve_1d(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Direct (non-FFT) dense 1-d convolution."""
    return np.convolve(a, b)
