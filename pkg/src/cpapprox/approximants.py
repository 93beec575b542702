"""Exponentials of signed measures and the compound-Poisson-type approximants.

The exponential uses scaling and squaring: the exponent is halved until its
TV norm is at most 1, a Taylor polynomial is summed with an explicit series
remainder, and the result is squared back up with per-step truncation
budgets.  All error terms land in ``trunc_err``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

from .errors import NumericalRefusalError
from .measure import (
    SignedLatticeMeasure,
    SymmetricDistribution,
    convolution_power,
    convolve,
    identity,
    linear_combine,
    scale,
    truncate,
    tv_distance,
)

_MAX_SCALING_STEPS = 60
_CANCELLATION_FLOOR = 1e-8


@dataclass(frozen=True)
class ApproximantKind:
    """Which approximant to compare against the n-fold convolution."""

    tag: str  # conv | cp | hipp | first | berg
    k: int | None = None

    _TAGS = ("conv", "cp", "hipp", "first", "berg")

    def __post_init__(self):
        if self.tag not in self._TAGS:
            raise ValueError(f"unknown approximant tag {self.tag!r}")
        if self.tag == "berg":
            if self.k is None or self.k < 0:
                raise ValueError("berg requires expansion order k >= 0")
        elif self.k is not None:
            raise ValueError(f"{self.tag!r} takes no order parameter")

    @classmethod
    def parse(cls, token):
        token = token.strip().lower()
        if token.startswith("berg"):
            return cls("berg", int(token[4:] or 0))
        return cls(token)

    def label(self):
        return f"berg{self.k}" if self.tag == "berg" else self.tag


CONV_POWER = ApproximantKind("conv")
ACCOMPANYING_CP = ApproximantKind("cp")
HIPP_SCP = ApproximantKind("hipp")
FIRST_ORDER_CP = ApproximantKind("first")


def bergstrom_kind(k):
    return ApproximantKind("berg", k)


@dataclass
class ApproximationResult:
    n: int
    kind: ApproximantKind
    tv_distance: float
    err_interval: float
    support_size: int
    elapsed: float

    def interval(self):
        return (max(0.0, self.tv_distance - self.err_interval),
                self.tv_distance + self.err_interval)


def _taylor_order(norm_scaled, target):
    k = 0
    power = norm_scaled
    fact = 1.0
    while True:
        k += 1
        fact *= k + 0  # (k)!
        remainder = power * norm_scaled / (fact * (k + 1)) * math.exp(norm_scaled)
        # power*norm_scaled = norm^{k+1}; fact*(k+1) = (k+1)!
        if remainder <= target or k >= 170:
            return k
        power *= norm_scaled


def measure_exp(M, tol, fft_noise_budget=None):
    """exp{M} = sum_j M^{*j}/j! with total added truncation error <= tol
    (before amplification, which is reported exactly in trunc_err)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    norm = M.tv
    input_err = M.trunc_err
    core = M.with_trunc_err(0.0)
    if norm == 0.0:
        result = identity(M.dim)
    else:
        s = max(0, math.ceil(math.log2(norm)))
        if s > _MAX_SCALING_STEPS:
            raise NumericalRefusalError(
                f"exponent TV norm {norm:.3g} needs {s} halvings (limit "
                f"{_MAX_SCALING_STEPS})"
            )
        ms = scale(core, 0.5**s)
        norm_s = ms.tv
        k = _taylor_order(norm_s, tol / 2.0 ** (s + 1))
        tiny = tol / 2.0 ** (s + 2) / (2.0 * k)
        total = identity(M.dim)
        term = identity(M.dim)
        max_tv = 1.0
        for j in range(1, k + 1):
            term = scale(convolve(term, ms, fft_noise_budget=tiny / 2.0), 1.0 / j)
            term = truncate(term, tiny / 2.0)
            total = truncate(linear_combine([(1.0, total), (1.0, term)]), tiny / 2.0)
            max_tv = max(max_tv, total.tv)
        total = total.with_trunc_err(
            total.trunc_err
            + norm_s ** (k + 1) / math.factorial(k + 1) * math.exp(norm_s)
        )
        for j in range(1, s + 1):
            step = tol / 2.0 ** (s + 1 - j)
            total = convolve(total, total, fft_noise_budget=step / 2.0)
            total = truncate(total, step / 2.0)
            max_tv = max(max_tv, total.tv)
        if total.tv < _CANCELLATION_FLOOR * max_tv:
            raise NumericalRefusalError(
                f"catastrophic cancellation in exp: final TV {total.tv:.3g} vs "
                f"peak intermediate {max_tv:.3g}"
            )
        result = total
    if input_err > 0.0:
        # ||exp(M+E) - exp(M)|| <= ||exp(M)|| (e^{||E||} - 1)
        bound = (result.tv + result.trunc_err) * math.expm1(input_err)
        result = result.with_trunc_err(result.trunc_err + bound)
    return result


def _centered(F):
    """F - I for a SymmetricDistribution (or measure) F."""
    m = F.measure if isinstance(F, SymmetricDistribution) else F
    return linear_combine([(1.0, m), (-1.0, identity(m.dim))])


def cp_accompanying(F, lam, tol, fft_noise_budget=None):
    """Compound Poisson law exp{lam (F - I)}."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return measure_exp(scale(_centered(F), lam), tol, fft_noise_budget)


def hipp_power(F, a, tol):
    """Second-order signed-exponent approximant exp{a(F-I) - a(F-I)^{*2}/2}.

    Defined for any nonzero real a (negative powers appear in telescoping
    identities).
    """
    if a == 0:
        raise ValueError("a must be nonzero")
    g = _centered(F)
    g2 = convolve(g, g, fft_noise_budget=tol / 4.0)
    exponent = linear_combine([(float(a), g), (-float(a) / 2.0, g2)])
    return measure_exp(exponent, tol / 2.0)


def first_order_cp(F, n, tol):
    """exp{n(F-I)} * (I - n(F-I)^{*2}/2): first-order correction to the
    accompanying law.  The correction factor has total mass zero, so the
    output mass stays 1 up to the reported error."""
    cp = cp_accompanying(F, float(n), tol / 2.0)
    g = _centered(F)
    g2 = convolve(g, g, fft_noise_budget=tol / (8.0 * max(1.0, float(n))))
    corr = linear_combine([(1.0, identity(g.dim)), (-0.5 * n, g2)])
    return convolve(cp, corr, fft_noise_budget=tol / 4.0)


_FLOAT_MAX = 1.7976931348623157e308


def bergstrom_partial(F, n, k, tol):
    """Partial sum sum_{m=0}^{k} C(n,m) D^{*(n-m)} * (F-D)^{*m} of the
    telescoping expansion of F^{*n} around the Hipp approximant."""
    if k >= n:
        raise ValueError(f"expansion order k={k} must satisfy k <= n-1")
    if k < 0:
        raise ValueError("k must be nonnegative")
    q = F.q
    d_norm_bound = 3.5 / math.sqrt(q)
    per_term = tol / (k + 1)
    terms = []
    fd = None
    for m in range(0, k + 1):
        c = math.comb(n, m)
        if c > _FLOAT_MAX:
            raise OverflowError(f"binomial C({n},{m}) exceeds float range")
        budget = per_term / float(c)
        if m == 0:
            pm = identity(F.dim)
        else:
            if fd is None:
                d1 = hipp_power(F, 1.0, budget / (8.0 * n))
                fd = linear_combine([(1.0, F.measure), (-1.0, d1)])
            pm = convolution_power(fd, m, budget / (4.0 * d_norm_bound)) if m > 1 else fd
        dp = hipp_power(F, float(n - m), budget / (4.0 * max(1.0, pm.tv)))
        term = convolve(dp, pm, fft_noise_budget=budget / 4.0)
        terms.append((float(c), term))
    return linear_combine(terms)


def build_approximant(F, n, kind, tol, conv_power=None):
    """The measure a given ApproximantKind denotes, at tolerance tol."""
    if kind.tag == "conv":
        if conv_power is not None:
            return conv_power
        return convolution_power(F.measure, n, tol)
    if kind.tag == "cp":
        return cp_accompanying(F, float(n), tol)
    if kind.tag == "hipp":
        return hipp_power(F, float(n), tol)
    if kind.tag == "first":
        return first_order_cp(F, n, tol)
    if kind.tag == "berg":
        return bergstrom_partial(F, n, kind.k, tol)
    raise ValueError(f"unhandled kind {kind!r}")


def approximate(F, n, kind, tol):
    """TV distance between F^{*n} and the chosen approximant, with the
    half-sum of truncation errors as the reported interval radius."""
    if n < 1:
        raise ValueError("n must be >= 1")
    t0 = time.perf_counter()
    power = convolution_power(F.measure, n, tol / 2.0)
    approx = power if kind.tag == "conv" else build_approximant(F, n, kind, tol / 2.0)
    dist, err = tv_distance(power, approx)
    return ApproximationResult(
        n=n,
        kind=kind,
        tv_distance=dist,
        err_interval=err,
        support_size=len(approx),
        elapsed=time.perf_counter() - t0,
    )
