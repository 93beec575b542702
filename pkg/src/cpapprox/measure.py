"""Arithmetic on finitely supported signed measures over Z^d.

A measure is stored sparsely: a lex-sorted (m, d) int64 coordinate array and
an (m,) float64 weight vector, plus ``trunc_err`` — an upper bound, in TV
norm, on the discrepancy between the stored measure and the exact measure it
stands for.  Every operation propagates this bound; truncation and the FFT
fast path are the only places it grows beyond the inputs' contribution.

All reductions run in a fixed order (lexicographic keys, fixed block sizes),
so repeated runs produce identical results.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels, _packing
from .errors import CoordinateOverflowError, DimensionMismatchError

COORD_LIMIT = 1 << 40

_EPS = float(np.finfo(np.float64).eps)

# convolution path tuning: estimated seconds per unit work
_T_SPARSE = 8e-9 if _kernels.IMPL == "cython" else 2.5e-8
_T_DENSE = 1.5e-9
_T_FFT = 7.5e-9
_FFT_CELL_CAP = 1 << 24
_DENSE_CELL_CAP = 1 << 26


class SignedLatticeMeasure:
    """Finite signed measure on Z^d.  Treat instances as immutable."""

    __slots__ = ("dim", "coords", "weights", "trunc_err", "tv")

    def __init__(self, dim, coords, weights, trunc_err=0.0, _canonical=False):
        if dim < 1:
            raise ValueError(f"dimension must be >= 1, got {dim}")
        if trunc_err < 0:
            raise ValueError("trunc_err must be nonnegative")
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, dim)
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        if len(coords) != len(weights):
            raise ValueError("coords/weights length mismatch")
        if not _canonical:
            coords, weights = _packing.dedup_sorted(coords, weights)
        self.dim = int(dim)
        self.coords = coords
        self.weights = weights
        self.trunc_err = float(trunc_err)
        self.tv = float(np.sum(np.abs(weights))) if len(weights) else 0.0
        self.coords.setflags(write=False)
        self.weights.setflags(write=False)

    @classmethod
    def from_items(cls, dim, items, trunc_err=0.0):
        """Build from an iterable of (point, weight) pairs; point is a tuple."""
        pts = []
        wts = []
        for p, w in items:
            pts.append(p)
            wts.append(w)
        coords = np.asarray(pts, dtype=np.int64).reshape(-1, dim)
        return cls(dim, coords, np.asarray(wts, dtype=np.float64), trunc_err)

    @classmethod
    def point_mass(cls, point, weight=1.0):
        point = tuple(int(c) for c in point)
        return cls(len(point), [point], [weight], 0.0, _canonical=True)

    @classmethod
    def zero(cls, dim):
        return cls(dim, np.empty((0, dim), dtype=np.int64), [], 0.0, _canonical=True)

    def __len__(self):
        return len(self.weights)

    def items(self):
        for row, w in zip(self.coords, self.weights):
            yield tuple(int(c) for c in row), float(w)

    def as_dict(self):
        return dict(self.items())

    def weight_at(self, point):
        q = np.asarray([point], dtype=np.int64).reshape(1, self.dim)
        idx = _packing.find_rows(self.coords, q)[0]
        return float(self.weights[idx]) if idx >= 0 else 0.0

    def total_mass(self):
        return float(np.sum(self.weights)) if len(self) else 0.0

    def with_trunc_err(self, trunc_err):
        return SignedLatticeMeasure(
            self.dim, self.coords, self.weights, trunc_err, _canonical=True
        )

    def __repr__(self):
        return (
            f"SignedLatticeMeasure(dim={self.dim}, atoms={len(self)}, "
            f"tv={self.tv:.6g}, trunc_err={self.trunc_err:.3g})"
        )


def identity(dim):
    """Unit mass at the origin."""
    return SignedLatticeMeasure.point_mass((0,) * dim)


def _check_same_dim(measures):
    dims = {m.dim for m in measures}
    if len(dims) != 1:
        raise DimensionMismatchError(f"mixed dimensions: {sorted(dims)}")


def linear_combine(terms):
    """Atomwise weighted sum of measures.

    ``terms`` is a nonempty list of (coefficient, measure); the result's
    trunc_err is sum(|coef| * trunc_err).
    """
    terms = list(terms)
    if not terms:
        raise ValueError("linear_combine requires at least one term")
    _check_same_dim([m for _, m in terms])
    dim = terms[0][1].dim
    coords = np.concatenate([m.coords for _, m in terms], axis=0)
    weights = np.concatenate(
        [np.float64(c) * m.weights for c, m in terms], axis=0
    )
    err = sum(abs(float(c)) * m.trunc_err for c, m in terms)
    return SignedLatticeMeasure(dim, coords, weights, err)


def scale(M, c):
    return linear_combine([(c, M)])


def tv_norm(M):
    """Total-variation norm with its error bound: (sum |weights|, trunc_err)."""
    return M.tv, M.trunc_err


def tv_distance(A, B):
    """TV distance (half the TV norm of the difference) with error bound."""
    diff = linear_combine([(1.0, A), (-1.0, B)])
    return diff.tv / 2.0, diff.trunc_err / 2.0


def symmetry_check(M):
    """True iff weight(x) == weight(-x) exactly for every atom."""
    if len(M) == 0:
        return True
    neg = np.ascontiguousarray(-M.coords)
    idx = _packing.find_rows(M.coords, neg)
    if np.any(idx < 0):
        return False
    return bool(np.all(M.weights[idx] == M.weights))


def _bounding_box(M):
    return M.coords.min(axis=0), M.coords.max(axis=0)


def _fft_noise_bound(A, B, cells):
    l2a = float(np.sqrt(np.sum(A.weights**2)))
    l2b = float(np.sqrt(np.sum(B.weights**2)))
    amp = min(l2a * B.tv, A.tv * l2b)
    return 24.0 * _EPS * (math.log2(cells) + 4.0) * math.sqrt(cells) * amp


def _scatter_dense(M, lo, shape):
    grid = np.zeros(shape, dtype=np.float64)
    grid[tuple((M.coords - lo).T)] = M.weights
    return grid


def _fft_convolve(A, B, lo_out, shape_out, noise_est):
    loA, _ = _bounding_box(A)
    loB, _ = _bounding_box(B)
    shapeA = A.coords.max(axis=0) - loA + 1
    shapeB = B.coords.max(axis=0) - loB + 1
    pad = [1 << int(np.ceil(np.log2(max(2, s)))) for s in shape_out]
    axes = list(range(A.dim))
    fa = np.fft.rfftn(_scatter_dense(A, loA, shapeA), s=pad, axes=axes)
    fb = np.fft.rfftn(_scatter_dense(B, loB, shapeB), s=pad, axes=axes)
    grid = np.fft.irfftn(fa * fb, s=pad, axes=axes)
    grid = grid[tuple(slice(0, s) for s in shape_out)]

    # Remove FFT noise-floor entries: raise a threshold while the dropped
    # computed mass stays within 2*noise_est.  The true discarded mass is
    # then within 3*noise_est, plus noise_est for the noise on kept entries.
    flat = np.abs(grid.ravel())
    tau = 2.0 * noise_est / max(1, flat.size)
    best = 0.0
    for _ in range(60):
        dropped = float(np.sum(flat, where=flat <= tau))
        if dropped > 2.0 * noise_est:
            break
        best = tau
        tau *= 2.0
    if best > 0.0:
        grid[np.abs(grid) <= best] = 0.0
    idx = np.nonzero(grid)
    coords = np.stack(idx, axis=1).astype(np.int64) + lo_out
    weights = grid[idx]
    return coords, weights, 4.0 * noise_est


def _shift_convolve(A, B):
    # one operand is a single atom: exact translate-and-scale
    if len(A) == 1:
        single, other = A, B
    else:
        single, other = B, A
    coords = other.coords + single.coords[0]
    weights = other.weights * single.weights[0]
    return coords, weights


def _sparse_convolve(A, B, lo_out, shape_out):
    strides = _packing.box_strides(shape_out)
    if strides is not None:
        loA, _ = _bounding_box(A)
        loB, _ = _bounding_box(B)
        ka = _packing.pack_keys(A.coords, loA, strides)
        kb = _packing.pack_keys(B.coords, loB, strides)
        keys, weights = _kernels.accumulate_packed(ka, A.weights, kb, B.weights)
        nz = np.flatnonzero(weights)
        if len(nz) != len(weights):
            keys, weights = keys[nz], weights[nz]
        coords = _packing.unpack_keys(keys, loA + loB, strides)
        return coords, weights
    # gigantic box: blocked expansion on raw coordinate rows
    mb = len(B)
    chunk = max(1, (1 << 22) // max(1, mb))
    parts_c, parts_w = [], []
    for i0 in range(0, len(A), chunk):
        i1 = min(len(A), i0 + chunk)
        cs = (A.coords[i0:i1, None, :] + B.coords[None, :, :]).reshape(-1, A.dim)
        ws = (A.weights[i0:i1, None] * B.weights[None, :]).ravel()
        cs, ws = _packing.dedup_sorted(cs, ws)
        parts_c.append(cs)
        parts_w.append(ws)
    return _packing.dedup_sorted(np.concatenate(parts_c), np.concatenate(parts_w))


def _dense1d_convolve(A, B, lo_out):
    loA = int(A.coords[0, 0])
    loB = int(B.coords[0, 0])
    wa = np.zeros(int(A.coords[-1, 0]) - loA + 1)
    wb = np.zeros(int(B.coords[-1, 0]) - loB + 1)
    wa[(A.coords[:, 0] - loA)] = A.weights
    wb[(B.coords[:, 0] - loB)] = B.weights
    out = _kernels.dense_convolve_1d(wa, wb)
    idx = np.flatnonzero(out)
    coords = (idx + lo_out[0]).reshape(-1, 1).astype(np.int64)
    return coords, out[idx]


def _operand_rank(M):
    return (len(M), M.coords.tobytes(), M.weights.tobytes())


def convolve(A, B, fft_noise_budget=0.0):
    """Convolution of two measures.

    trunc_err of the result is ``tv(A)*err_B + (tv(B)+err_B)*err_A``; when
    the FFT fast path is engaged (only if ``fft_noise_budget`` > 0 permits),
    a bounded estimate of FFT roundoff is added on top and the budget is
    respected with an 8x safety factor.

    Operands are put into a canonical order first, so A*B and B*A run the
    identical accumulation and agree exactly.
    """
    _check_same_dim([A, B])
    base_err = A.tv * B.trunc_err + (B.tv + B.trunc_err) * A.trunc_err
    if _operand_rank(B) < _operand_rank(A):
        A, B = B, A
    if len(A) == 0 or len(B) == 0:
        return SignedLatticeMeasure.zero(A.dim).with_trunc_err(base_err)

    loA, hiA = _bounding_box(A)
    loB, hiB = _bounding_box(B)
    lo_out = loA + loB
    hi_out = hiA + hiB
    if np.any(np.abs(lo_out) > COORD_LIMIT) or np.any(np.abs(hi_out) > COORD_LIMIT):
        raise CoordinateOverflowError(
            f"convolution support exceeds |coordinate| <= 2^40: "
            f"box [{lo_out}, {hi_out}]"
        )
    shape_out = hi_out - lo_out + 1

    if len(A) == 1 or len(B) == 1:
        coords, weights = _shift_convolve(A, B)
        return SignedLatticeMeasure(
            A.dim, coords, weights, base_err, _canonical=len(B) == 1 or len(A) == 1
        )

    pairs = len(A) * len(B)
    cells = float(np.prod(shape_out.astype(np.float64)))
    cost_sparse = pairs * _T_SPARSE
    best_path, best_cost = "sparse", cost_sparse

    if A.dim == 1:
        wa_len = int(hiA[0] - loA[0]) + 1
        wb_len = int(hiB[0] - loB[0]) + 1
        if wa_len * wb_len <= _DENSE_CELL_CAP:
            cost_dense = wa_len * wb_len * _T_DENSE
            if cost_dense < best_cost:
                best_path, best_cost = "dense1d", cost_dense

    noise_est = 0.0
    if fft_noise_budget > 0.0 and cells <= _FFT_CELL_CAP:
        noise_est = _fft_noise_bound(A, B, cells)
        if 8.0 * noise_est <= fft_noise_budget:
            cost_fft = 3.0 * cells * math.log2(max(2.0, cells)) * _T_FFT
            if cost_fft < best_cost:
                best_path, best_cost = "fft", cost_fft

    if best_path == "fft":
        coords, weights, extra = _fft_convolve(A, B, lo_out, shape_out, noise_est)
        return SignedLatticeMeasure(
            A.dim, coords, weights, base_err + extra, _canonical=True
        )
    if best_path == "dense1d":
        coords, weights = _dense1d_convolve(A, B, lo_out)
        return SignedLatticeMeasure(A.dim, coords, weights, base_err, _canonical=True)
    coords, weights = _sparse_convolve(A, B, lo_out, shape_out)
    return SignedLatticeMeasure(A.dim, coords, weights, base_err, _canonical=True)


def truncate(M, eps):
    """Drop a smallest-|weight| set of atoms of total |weight| <= eps.

    Ties are broken by lexicographic key.  Symmetric inputs are truncated in
    +-x pairs so symmetry is preserved exactly.  Removed mass is added to
    trunc_err.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps == 0.0 or len(M) == 0:
        return M
    absw = np.abs(M.weights)
    if symmetry_check(M):
        neg = np.ascontiguousarray(-M.coords)
        partner = _packing.find_rows(M.coords, neg)
        rep = np.minimum(np.arange(len(M)), partner)
        is_rep = rep == np.arange(len(M))
        rep_idx = np.flatnonzero(is_rep)
        unit_w = np.where(
            partner[rep_idx] == rep_idx, absw[rep_idx], 2.0 * absw[rep_idx]
        )
        order = rep_idx[np.lexsort((rep_idx, unit_w))]
        csum = np.cumsum(unit_w[np.lexsort((rep_idx, unit_w))])
        ncut = int(np.searchsorted(csum, eps, side="right"))
        if ncut == 0:
            return M
        drop_reps = order[:ncut]
        drop = np.zeros(len(M), dtype=bool)
        drop[drop_reps] = True
        drop[partner[drop_reps]] = True
        removed = float(csum[ncut - 1])
    else:
        order = np.lexsort((np.arange(len(M)), absw))
        csum = np.cumsum(absw[order])
        ncut = int(np.searchsorted(csum, eps, side="right"))
        if ncut == 0:
            return M
        drop = np.zeros(len(M), dtype=bool)
        drop[order[:ncut]] = True
        removed = float(csum[ncut - 1])
    keep = ~drop
    return SignedLatticeMeasure(
        M.dim,
        M.coords[keep],
        M.weights[keep],
        M.trunc_err + removed,
        _canonical=True,
    )


def convolution_power(F, n, tol=0.0, fft_noise_budget=None):
    """n-fold convolution power by square-and-multiply.

    Each convolution step is followed by a truncation with budget
    tol/(2*ceil(log2 n)+1); with tol=0 the result equals iterated
    convolution up to float associativity.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if n == 1:
        return F
    steps = 2 * math.ceil(math.log2(n)) + 1
    budget = tol / steps
    fft_budget = budget / 2.0 if fft_noise_budget is None else fft_noise_budget
    result = F
    for bit in bin(n)[3:]:
        result = truncate(convolve(result, result, fft_budget), budget)
        if bit == "1":
            result = truncate(convolve(result, F, fft_budget), budget)
    return result


# ---------------------------------------------------------------------------
# probability measures


class SymmetricDistribution:
    """Probability measure on Z^d, symmetric under x -> -x, with mass at the
    origin strictly inside (0, 1).

    Symmetry is enforced at construction by averaging weights over +-x.
    """

    __slots__ = ("measure", "q")

    def __init__(self, measure):
        if len(measure) == 0:
            raise ValueError("distribution must have at least one atom")
        coords = measure.coords
        weights = measure.weights
        neg = np.ascontiguousarray(-coords)
        idx = _packing.find_rows(coords, neg)
        if np.any(idx < 0):
            raise ValueError("support is not symmetric under negation")
        sym_w = 0.5 * (weights + weights[idx])
        m = SignedLatticeMeasure(
            measure.dim, coords, sym_w, measure.trunc_err, _canonical=True
        )
        if np.any(m.weights < 0):
            raise ValueError("negative weight in a distribution")
        total = m.total_mass()
        if abs(total - 1.0) > m.trunc_err + 1e-12:
            raise ValueError(
                f"weights sum to {total!r}, not 1 within trunc_err={m.trunc_err!r}"
            )
        q = m.weight_at((0,) * m.dim)
        if not 0.0 < q < 1.0:
            raise ValueError(f"origin mass q={q!r} must lie strictly in (0,1)")
        self.measure = m
        self.q = q

    @classmethod
    def from_items(cls, dim, items, trunc_err=0.0):
        return cls(SignedLatticeMeasure.from_items(dim, items, trunc_err))

    @property
    def dim(self):
        return self.measure.dim

    def support_pairs(self):
        """Number N of +-x pairs off the origin."""
        return (len(self.measure) - 1) // 2

    def __repr__(self):
        return f"SymmetricDistribution(dim={self.dim}, atoms={len(self.measure)}, q={self.q:.4g})"


# ---------------------------------------------------------------------------
# text format

_HEADER = "dim={dim} trunc_err={err}"


def dumps_measure(M):
    lines = [_HEADER.format(dim=M.dim, err=repr(M.trunc_err))]
    for point, w in M.items():
        lines.append(" ".join(str(c) for c in point) + " " + repr(w))
    return "\n".join(lines) + "\n"


def loads_measure(text):
    header = None
    pts = []
    wts = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            fields = dict(kv.split("=", 1) for kv in line.split())
            header = (int(fields["dim"]), float(fields["trunc_err"]))
            continue
        parts = line.split()
        if len(parts) != header[0] + 1:
            raise ValueError(f"bad atom line: {raw!r}")
        pts.append(tuple(int(c) for c in parts[:-1]))
        wts.append(float(parts[-1]))
    if header is None:
        raise ValueError("missing header line")
    dim, err = header
    coords = np.asarray(pts, dtype=np.int64).reshape(-1, dim)
    return SignedLatticeMeasure(dim, coords, wts, err)


def write_measure(M, path):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dumps_measure(M))


def read_measure(path):
    with open(path, "r", encoding="ascii") as fh:
        return loads_measure(fh.read())
