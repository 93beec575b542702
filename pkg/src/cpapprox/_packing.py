"""Coordinate-array helpers: lexicographic keys, dedup, row lookup.

Coordinates are (m, d) int64 arrays.  Two key encodings are used:

* byte keys: fixed-width big-endian bytes whose memcmp order equals the
  numeric lexicographic order of the rows.  Always available.
* packed int64 keys: mixed-radix encoding relative to a bounding box.  Only
  available when the box is small enough; packed keys are *additive*
  (``pack(u + v) = pack(u) + pack(v)`` for boxes set up accordingly), which
  is what the convolution kernels exploit.
"""

from __future__ import annotations

import numpy as np

_SIGN_FLIP = np.uint64(1) << np.uint64(63)

# Largest product of output-box side lengths for which packed int64 keys are
# used; leaves headroom below 2**63.
PACK_CELL_LIMIT = 1 << 62


def byte_keys(coords: np.ndarray) -> np.ndarray:
    """Return an (m,) bytes array whose sort order is lexicographic."""
    m, d = coords.shape
    u = coords.view(np.uint64) ^ _SIGN_FLIP
    be = np.ascontiguousarray(u.astype(">u8"))
    return be.view(f"S{8 * d}").reshape(m)


def lex_argsort(coords: np.ndarray) -> np.ndarray:
    """Stable argsort of rows in lexicographic order."""
    return np.argsort(byte_keys(coords), kind="stable")


def dedup_sorted(
    coords: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Canonicalize arbitrary (coords, weights): lex-sort, sum duplicate
    rows in stable (appearance) order, drop exact zeros."""
    if len(weights) == 0:
        return coords.reshape(0, coords.shape[1] if coords.ndim == 2 else 1), weights
    keys = byte_keys(coords)
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    coords = coords[order]
    weights = weights[order]
    boundary = np.empty(len(keys), dtype=bool)
    boundary[0] = True
    np.not_equal(keys[1:], keys[:-1], out=boundary[1:])
    starts = np.flatnonzero(boundary)
    if len(starts) != len(keys):
        weights = np.add.reduceat(weights, starts)
        coords = coords[starts]
    nz = np.flatnonzero(weights)
    if len(nz) != len(weights):
        coords = coords[nz]
        weights = weights[nz]
    return np.ascontiguousarray(coords), np.ascontiguousarray(weights)


def find_rows(sorted_coords: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Indices of ``queries`` rows inside lex-sorted ``sorted_coords``.

    Returns -1 where a query row is absent.
    """
    if len(sorted_coords) == 0:
        return np.full(len(queries), -1, dtype=np.int64)
    keys = byte_keys(sorted_coords)
    qkeys = byte_keys(queries)
    pos = np.searchsorted(keys, qkeys)
    pos_c = np.minimum(pos, len(keys) - 1)
    hit = keys[pos_c] == qkeys
    return np.where(hit, pos_c, -1).astype(np.int64)


def box_strides(dims_out: np.ndarray) -> np.ndarray | None:
    """Mixed-radix strides for an output box, or None if it would overflow."""
    dims = np.asarray(dims_out, dtype=np.int64)
    cells = 1
    for side in dims:
        cells *= int(side)
        if cells > PACK_CELL_LIMIT:
            return None
    strides = np.ones(len(dims), dtype=np.int64)
    for k in range(len(dims) - 2, -1, -1):
        strides[k] = strides[k + 1] * dims[k + 1]
    return strides


def pack_keys(coords: np.ndarray, lo: np.ndarray, strides: np.ndarray) -> np.ndarray:
    """Additive int64 keys of rows relative to per-operand origin ``lo``."""
    return (coords - lo) @ strides


def unpack_keys(keys: np.ndarray, lo: np.ndarray, strides: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pack_keys` for the output box origin."""
    d = len(strides)
    out = np.empty((len(keys), d), dtype=np.int64)
    rem = keys
    for k in range(d):
        q, rem = np.divmod(rem, strides[k])
        out[:, k] = q + lo[k]
    return out
