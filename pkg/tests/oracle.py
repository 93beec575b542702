"""Independent brute-force oracle for d=1 measures.

Everything here avoids the library's code paths on purpose:

* convolution powers: dense Laurent-coefficient lists over exact rationals,
  multiplied by repeated O(N*M) schoolbook convolution (no squaring);
* compound Poisson exponentials: the Poisson mixture sum_j pois(j; lam) F^{*j}
  with exact rational convolution powers, Poisson weights from mpmath, and
  80-bit accumulation; the Poisson tail is cut at an analytically bounded
  1e-25.

Keep supports small and masses dyadic-ish; rational denominators grow with
the power.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

try:
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction

import mpmath


class DenseRational:
    """Laurent polynomial: coefficient list plus offset of the first term."""

    def __init__(self, offset, coeffs):
        self.offset = int(offset)
        self.coeffs = list(coeffs)

    @classmethod
    def from_dict(cls, atoms):
        ks = sorted(atoms)
        lo, hi = ks[0], ks[-1]
        coeffs = [_Q(0)] * (hi - lo + 1)
        for k, v in atoms.items():
            coeffs[k - lo] = _Q(v.numerator, v.denominator) if isinstance(
                v, Fraction
            ) else _Q(v)
        return cls(lo, coeffs)

    @classmethod
    def from_measure(cls, M):
        """Exact lift of a float-weighted measure (floats are rationals)."""
        atoms = {}
        for (k,), w in M.items():
            atoms[k] = Fraction(w)
        return cls.from_dict(atoms)

    def to_dict(self):
        return {
            self.offset + i: c for i, c in enumerate(self.coeffs) if c != 0
        }

    def conv(self, other):
        out = [_Q(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                if b != 0:
                    out[i + j] += a * b
        return DenseRational(self.offset + other.offset, out)

    def power(self, n):
        if n < 1:
            raise ValueError("n >= 1")
        acc = self
        for _ in range(n - 1):
            acc = acc.conv(self)
        return acc

    def tv_norm(self):
        return sum(abs(c) for c in self.coeffs)

    def total(self):
        return sum(self.coeffs)

    def sub(self, other):
        lo = min(self.offset, other.offset)
        hi = max(self.offset + len(self.coeffs), other.offset + len(other.coeffs))
        out = [_Q(0)] * (hi - lo)
        for i, c in enumerate(self.coeffs):
            out[self.offset - lo + i] += c
        for i, c in enumerate(other.coeffs):
            out[other.offset - lo + i] -= c
        return DenseRational(lo, out)


def tv_between_dicts(da, db):
    """Exact TV norm of the difference of two rational atom dicts."""
    keys = set(da) | set(db)
    return sum(abs(da.get(k, _Q(0)) - db.get(k, _Q(0))) for k in keys)


def poisson_weights_longdouble(lam, tail=1e-25):
    """Longdouble Poisson(lam) pmf values 0..J with 1-cdf(J) <= tail."""
    with mpmath.workdps(40):
        lam_mp = mpmath.mpf(lam)
        weights = []
        w = mpmath.e ** (-lam_mp)
        cum = w
        j = 0
        weights.append(w)
        while 1.0 - cum > mpmath.mpf(tail) or j < lam:
            j += 1
            w = w * lam_mp / j
            weights.append(w)
            cum += w
            if j > 100 * (lam + 10):
                raise RuntimeError("poisson tail did not converge")
        return np.array([np.longdouble(mpmath.nstr(x, 25)) for x in weights])


def cp_exponential_dense(F_dense, lam, tail=1e-25):
    """exp{lam(F - I)} for a probability F via the Poisson mixture.

    Returns (offset, longdouble coefficient array).  Accumulation error is
    ~ J * width * 1e-19 in TV, far below the 1e-9 comparisons it backs.
    """
    weights = poisson_weights_longdouble(lam, tail)
    J = len(weights) - 1
    lo = min(0, J * F_dense.offset)
    hi = max(0, J * (F_dense.offset + len(F_dense.coeffs) - 1))
    width = hi - lo + 1
    # align accumulated array so index 0 is lattice point `lo`
    acc = np.zeros(width, dtype=np.longdouble)
    # j = 0 term: identity at 0
    acc[-lo] += weights[0]
    cur = F_dense
    for j in range(1, J + 1):
        vals = np.array([np.longdouble(c.numerator) / np.longdouble(c.denominator)
                         for c in cur.coeffs], dtype=np.longdouble)
        start = cur.offset - lo
        acc[start:start + len(vals)] += weights[j] * vals
        if j < J:
            cur = cur.conv(F_dense)
    return lo, acc


def dense_longdouble(M):
    """Dense longdouble array of a float measure (d=1)."""
    ks = [k for (k,), _ in M.items()]
    lo, hi = min(ks), max(ks)
    arr = np.zeros(hi - lo + 1, dtype=np.longdouble)
    for (k,), w in M.items():
        arr[k - lo] += np.longdouble(w)
    return lo, arr


def tv_distance_arrays(lo_a, a, lo_b, b):
    lo = min(lo_a, lo_b)
    hi = max(lo_a + len(a), lo_b + len(b))
    buf = np.zeros(hi - lo, dtype=np.longdouble)
    buf[lo_a - lo:lo_a - lo + len(a)] += a
    buf[lo_b - lo:lo_b - lo + len(b)] -= b
    return float(np.sum(np.abs(buf)) / 2)
