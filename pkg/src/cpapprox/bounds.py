"""Functionals of symmetric lattice distributions and evaluators for every
explicit error bound, with unspecified absolute constants kept symbolic.

Each evaluator produces a BoundReport: an explicit part computed from the
distribution, plus one coefficient per occurrence of an unspecified constant.
Reports never bake in a guessed constant; totals are formed against a
user-supplied BoundConfig.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _packing
from .approximants import hipp_power, measure_exp
from .measure import (
    SignedLatticeMeasure,
    SymmetricDistribution,
    convolution_power,
    convolve,
    identity,
    linear_combine,
    scale,
)

E = math.e


# ---------------------------------------------------------------------------
# delta functional


def _nonzero_masses(F):
    m = F.measure
    origin = np.all(m.coords == 0, axis=1)
    return m.weights[~origin]


def delta_functional(F, y):
    """Truncated-intensity functional: sum over nonzero atoms of
    min(1, y*e*p_x)."""
    if y < 0:
        raise ValueError("y must be nonnegative")
    p = _nonzero_masses(F)
    return float(np.sum(np.minimum(1.0, (y * E) * p)))


def delta_functional_many(F, ys):
    """Vectorized delta over a grid of y values (sorted-p suffix sums)."""
    ys = np.asarray(ys, dtype=np.float64)
    p = np.sort(_nonzero_masses(F))  # ascending
    suffix = np.concatenate([[0.0], np.cumsum(p)])
    # for each y: atoms with p >= 1/(y e) contribute 1, the rest y*e*p
    with np.errstate(divide="ignore"):
        thr = np.where(ys > 0, 1.0 / (ys * E), np.inf)
    split = np.searchsorted(p, thr)  # p[:split] < thr
    n_sat = len(p) - split
    return n_sat + ys * E * suffix[split]


# ---------------------------------------------------------------------------
# line mixtures


@dataclass(frozen=True)
class LineComponent:
    """One line of a mixture: direction, probability weight, and the
    normalized one-dimensional projection."""

    direction: tuple
    p: float
    masses: dict  # k -> normalized mass, k in Z\{0}
    sigma: float  # sqrt(sum k^2 mass(k)); may be math.inf
    span_ok: bool
    k0: int | None  # witness of adjacent occupancy, if any


@dataclass(frozen=True)
class LineMixture:
    dim: int
    q: float
    components: tuple
    trunc_err: float = 0.0

    @property
    def span_ok(self):
        return all(c.span_ok for c in self.components)

    def sigma_values(self):
        return [c.sigma for c in self.components]

    def sqrt_sigma_sum(self):
        """S = sum_m sqrt(1 + sigma_m)."""
        return float(sum(math.sqrt(1.0 + s) for s in self.sigma_values()))

    def on_coordinate_axes(self):
        return all(
            sum(abs(c) for c in comp.direction) == 1 for comp in self.components
        )


def _primitive_direction(row):
    g = int(np.gcd.reduce(np.abs(row)))
    prim = tuple(int(c) // g for c in row)
    for c in prim:
        if c != 0:
            if c < 0:
                prim = tuple(-x for x in prim)
                g = -g
            break
    return prim, g  # row == g * prim, prim lexicographically positive


def decompose_line_mixture(F):
    """Partition the off-origin support into maximal collinear groups.

    Every point lies on some line through the origin, so decomposition never
    fails; components that violate the adjacent-occupancy (unit-span)
    requirement are flagged via span_ok rather than raised.
    """
    m = F.measure
    origin = np.all(m.coords == 0, axis=1)
    coords = m.coords[~origin]
    weights = m.weights[~origin]
    if len(coords) == 0:
        raise ValueError("distribution has no off-origin mass")
    groups = {}
    for row, w in zip(coords, weights):
        prim, k = _primitive_direction(row)
        groups.setdefault(prim, {})[k] = float(w)
    comps = []
    for prim in sorted(groups):
        raw = groups[prim]
        p_m = math.fsum(raw.values())
        masses = {k: w / p_m for k, w in raw.items()}
        sigma2 = math.fsum(k * k * mass for k, mass in masses.items())
        ks = sorted(masses)
        k0 = None
        for k in ks:
            if k + 1 in masses and k != 0 and k + 1 != 0:
                k0 = k
                break
        comps.append(
            LineComponent(
                direction=prim,
                p=p_m,
                masses=masses,
                sigma=math.sqrt(sigma2),
                span_ok=k0 is not None,
                k0=k0,
            )
        )
    return LineMixture(
        dim=m.dim, q=F.q, components=tuple(comps), trunc_err=m.trunc_err
    )


def with_sigma(mixture, sigmas):
    """Replace per-component sigmas (e.g. with analytic values, or +inf for
    distributions whose untruncated projection has no variance)."""
    if len(sigmas) != len(mixture.components):
        raise ValueError("sigma count mismatch")
    comps = tuple(
        replace(c, sigma=float(s)) for c, s in zip(mixture.components, sigmas)
    )
    return replace(mixture, components=comps)


# ---------------------------------------------------------------------------
# known one-dimensional-method inputs (comparison baselines)


def g_function(x):
    """g(x) = 2 e^x (e^{-x} - 1 + x)/x^2, evaluated by series near 0."""
    if abs(x) < 1e-3:
        total = 0.0
        term_num = 1.0  # x^{s-2} running power
        fact = 2.0  # s!
        s = 2
        while True:
            term = 2.0 * (s - 1) * term_num / fact
            total += term
            if abs(term) < 1e-20:
                return total
            s += 1
            fact *= s
            term_num *= x
    return 2.0 * math.exp(x) * (math.exp(-x) - 1.0 + x) / (x * x)


@dataclass(frozen=True)
class KnownBoundInputs:
    """Inputs of the coordinate-axes baseline bounds: row i of p_im gives the
    line probabilities of vector i; alpha and lambda_m are derived."""

    p_im: np.ndarray
    sigma_m: tuple
    lambda_m: np.ndarray = field(init=False)
    q_i: np.ndarray = field(init=False)
    alpha: float = field(init=False)
    n_pairs: int | None = None

    def __post_init__(self):
        p = np.asarray(self.p_im, dtype=np.float64)
        if p.ndim != 2:
            raise ValueError("p_im must be a (n, K) matrix")
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("probabilities must lie in [0,1]")
        lam = p.sum(axis=0)
        q = 1.0 - p.sum(axis=1)
        if np.any(q < 0) or np.any(q >= 1):
            raise ValueError("each row must sum to at most 1 (and below 1)")
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(lam > 0, p**2 / np.where(lam > 0, lam, 1.0), 0.0)
        alpha = 0.0
        for i in range(p.shape[0]):
            cand1 = 2.0 ** (-1.5) * float(ratio[i].sum())
            cand2 = float(p[i].sum()) ** 2
            alpha += g_function(2.0 * (1.0 - q[i])) * min(cand1, cand2)
        object.__setattr__(self, "p_im", p)
        object.__setattr__(self, "lambda_m", lam)
        object.__setattr__(self, "q_i", q)
        object.__setattr__(self, "alpha", float(alpha))

    @classmethod
    def from_iid_mixture(cls, mixture, n):
        p_row = [c.p for c in mixture.components]
        return cls(
            p_im=np.tile(np.asarray(p_row, dtype=np.float64), (n, 1)),
            sigma_m=tuple(mixture.sigma_values()),
            n_pairs=None,
        )


# ---------------------------------------------------------------------------
# bound reports


class BoundConfig:
    """Assumed values for the unspecified absolute constants, keyed by a
    stable per-occurrence identifier.  Unset constants default to 1.0."""

    def __init__(self, values=None):
        self.values = {}
        for key, val in (values or {}).items():
            if val <= 0:
                raise ValueError(f"constant {key!r} must be positive")
            self.values[key] = float(val)

    def get(self, key):
        return self.values.get(key, 1.0)

    def __repr__(self):
        return f"BoundConfig({self.values})"


@dataclass
class BoundReport:
    bound_id: str
    explicit_part: float
    generic_terms: list  # [(constant_id, coefficient)]
    applicable: bool
    reason: str = ""
    total_at_C: float = float("nan")

    def total_at(self, constants=None):
        """explicit_part + sum C[id] * coef; `constants` maps id -> value
        (anything missing counts as 1; pass zeros to recover the explicit
        part exactly)."""
        total = self.explicit_part
        for cid, coef in self.generic_terms:
            if constants is None:
                c = 1.0
            elif isinstance(constants, BoundConfig):
                c = constants.get(cid)
            else:
                c = constants.get(cid, 1.0)
            total += c * coef
        return total

    def csv_row(self, params=None):
        cells = [self.bound_id, repr(self.explicit_part)]
        cells += [f"{cid}={coef!r}" for cid, coef in self.generic_terms]
        cells.append("applicable" if self.applicable else f"inapplicable:{self.reason}")
        return ",".join(cells)


def _report(bound_id, explicit, terms, cfg):
    rep = BoundReport(bound_id, float(explicit), terms, True)
    rep.total_at_C = rep.total_at(cfg)
    return rep


def _inapplicable(bound_id, reason):
    return BoundReport(bound_id, 0.0, [], False, reason, float("nan"))


def _need(params, *names):
    missing = [k for k in names if k not in params]
    if missing:
        raise ValueError(f"missing parameters {missing}")
    return [params[k] for k in names]


def _pairs_count(F):
    n_atoms = len(F.measure)
    return (n_atoms - 1) // 2


def _finite_sigmas(mixture):
    return all(math.isfinite(s) for s in mixture.sigma_values())


def evaluate_bound(bound_id, inp, params=None, cfg=None):
    """Evaluate one bound's right-hand side on the given input.

    inp is a SymmetricDistribution, LineMixture or KnownBoundInputs,
    whichever the bound consumes; inapplicable inputs yield a report with
    applicable=False and a reason, never an exception.
    """
    params = dict(params or {})
    if bound_id not in _BOUNDS:
        raise KeyError(f"unknown bound_id {bound_id!r}")
    kind, fn = _BOUNDS[bound_id]
    if kind == "dist" and not isinstance(inp, SymmetricDistribution):
        raise TypeError(f"{bound_id} expects a SymmetricDistribution")
    if kind == "mixture":
        if isinstance(inp, SymmetricDistribution):
            inp = decompose_line_mixture(inp)
        elif not isinstance(inp, LineMixture):
            raise TypeError(f"{bound_id} expects a LineMixture")
    if kind == "known" and not isinstance(inp, KnownBoundInputs):
        raise TypeError(f"{bound_id} expects KnownBoundInputs")
    return fn(inp, params, cfg)


def _bound_thm1(F, params, cfg):
    (n,) = _need(params, "n")
    q = F.q
    d2 = delta_functional(F, n / 2.0) ** 2
    explicit = 4.0 * d2 / (E**2 * n)
    mixed = explicit * (delta_functional(F, n * q) + 1.0) / (q**4 * math.sqrt(n))
    tail = (1.0 - q) ** 4.5 / (q**5 * n**1.5)
    return _report("thm1", explicit, [("thm1.mixed", mixed), ("thm1.tail", tail)], cfg)


def _bound_thm1star(F, params, cfg):
    (n,) = _need(params, "n")
    coef = (1.0 + delta_functional(F, float(n)) ** 2) / (n * F.q**3.5)
    return _report("thm1star", 0.0, [("thm1star.main", coef)], cfg)


def _bound_thm2(F, params, cfg):
    (n,) = _need(params, "n")
    q = F.q
    explicit = 50.2 * delta_functional(F, n * q / 6.0) ** 3 / (q**3.5 * n**2)
    mixed = explicit / (q**3.5 * math.sqrt(n))
    tail = (1.0 - q) ** 7.5 / (q**8 * n**2.5)
    return _report("thm2", explicit, [("thm2.mixed", mixed), ("thm2.tail", tail)], cfg)


def _bound_thm3(F, params, cfg):
    (n,) = _need(params, "n")
    q = F.q
    dnq = delta_functional(F, float(n) * q)
    main = (dnq**3 + dnq**4) / (q**5.5 * n**2)
    tail = (1.0 - q) ** 6 / (q**6.5 * n**2)
    return _report("thm3", 0.0, [("thm3.main", main), ("thm3.tail", tail)], cfg)


def _bound_thm4(F, params, cfg):
    (n,) = _need(params, "n")
    coef = (delta_functional(F, float(n)) ** 2 + 1.0) / (F.q**3.5 * n)
    return _report("thm4", 0.0, [("thm4.main", coef)], cfg)


def _bound_thm5(F, params, cfg):
    a, b = _need(params, "a", "b")
    if a <= 0 or b <= 0:
        return _inapplicable("thm5", "requires a, b > 0")
    N = _pairs_count(F)
    if N < F.dim:
        return _inapplicable("thm5", f"requires N >= d, got N={N}, d={F.dim}")
    explicit = (1.0 + (2.0 * N + 1.0) / E) * abs(b - a) / max(a, b)
    return _report("thm5", explicit, [], cfg)


def _bound_trivial_exp(F, params, cfg):
    a, b = _need(params, "a", "b")
    explicit = 2.0 * abs(b - a) * (1.0 - F.q)
    return _report("trivial_exp", explicit, [], cfg)


def _bound_cor1_cp(F, params, cfg):
    (n,) = _need(params, "n")
    N = _pairs_count(F)
    if N < F.dim:
        return _inapplicable("cor1.cp", f"requires N >= d, got N={N}, d={F.dim}")
    explicit = 2.17 * N**2 / n
    mixed = explicit * N / (F.q**5 * math.sqrt(n))
    return _report("cor1.cp", explicit, [("cor1.mixed", mixed)], cfg)


def _make_cor1(name, power_N, power_q, power_n):
    def _fn(F, params, cfg):
        (n,) = _need(params, "n")
        N = _pairs_count(F)
        if N < F.dim:
            return _inapplicable(name, f"requires N >= d, got N={N}, d={F.dim}")
        coef = N**power_N / (F.q**power_q * n**power_n)
        return _report(name, 0.0, [(f"{name}.main", coef)], cfg)

    return _fn


def _mixture_guard(name, mixture, need_span=True, need_sigma=True):
    reasons = []
    if need_span and not mixture.span_ok:
        bad = [c.direction for c in mixture.components if not c.span_ok]
        reasons.append(f"span condition fails on lines {bad}")
    if need_sigma and not _finite_sigmas(mixture):
        bad = [
            f"sigma_{i+1}=inf"
            for i, c in enumerate(mixture.components)
            if not math.isfinite(c.sigma)
        ]
        reasons.append(" and ".join(bad))
    if reasons:
        return _inapplicable(name, "; ".join(reasons))
    return None


def _bound_thm6(mix, params, cfg):
    (n,) = _need(params, "n")
    bad = _mixture_guard("thm6", mix)
    if bad:
        return bad
    S = mix.sqrt_sigma_sum()
    explicit = 1.76 * S**2 / n
    mixed = explicit * S / (math.sqrt(n) * mix.q**5)
    return _report("thm6", explicit, [("thm6.mixed", mixed)], cfg)


def _make_line_bound(name, s_power, q_power, n_power):
    def _fn(mix, params, cfg):
        (n,) = _need(params, "n")
        bad = _mixture_guard(name, mix)
        if bad:
            return bad
        coef = mix.sqrt_sigma_sum() ** s_power / (n**n_power * mix.q**q_power)
        return _report(name, 0.0, [(f"{name}.main", coef)], cfg)

    return _fn


def _bound_thm10(mix, params, cfg):
    a, b = _need(params, "a", "b")
    if a <= 0 or b <= 0:
        return _inapplicable("thm10", "requires a, b > 0")
    bad = _mixture_guard("thm10", mix)
    if bad:
        return bad
    explicit = 1.7 * abs(b - a) / max(a, b) * mix.sqrt_sigma_sum()
    return _report("thm10", explicit, [], cfg)


def _bound_bergd(F, params, cfg):
    n, k = _need(params, "n", "k")
    if k >= n:
        return _inapplicable("bergd", f"requires k <= n-1, got k={k}, n={n}")
    q = F.q
    dnq = delta_functional(F, float(n) * q)
    main = dnq ** (3 * (k + 1)) / (q ** (6 * k + 5.5) * float(n) ** (2 * (k + 1)))
    tail = (1.0 - q) ** (6 * (k + 1)) / (
        q ** (6 * k + 6.5) * float(n) ** (2 * (k + 1))
    )
    return _report(
        "bergd", 0.0, [(f"bergd.main.k{k}", main), (f"bergd.tail.k{k}", tail)], cfg
    )


def _bound_bergcor(F, params, cfg):
    n, k = _need(params, "n", "k")
    if k >= n:
        return _inapplicable("bergcor", f"requires k <= n-1, got k={k}, n={n}")
    N = _pairs_count(F)
    if N < F.dim:
        return _inapplicable("bergcor", f"requires N >= d, got N={N}, d={F.dim}")
    coef = float(N) ** (3 * (k + 1)) / (
        F.q ** (6 * k + 6.5) * float(n) ** (2 * (k + 1))
    )
    return _report("bergcor", 0.0, [(f"bergcor.k{k}", coef)], cfg)


def _bound_m3(F, params, cfg):
    n, k = _need(params, "n", "k")
    if k > n - 1:
        return _inapplicable("lemma_m3", f"requires k <= n-1, got k={k}, n={n}")
    q = F.q
    p = 1.0 - q
    coef = p ** (1.5 * (k + 1)) / (
        float(n) ** (0.5 * (k + 1)) * q ** (0.5 * (3 * k + 4))
    )
    return _report("lemma_m3", 0.0, [(f"m3.k{k}", coef)], cfg)


def _bound_p1is5(mix, params, cfg):
    (n,) = _need(params, "n")
    reasons = []
    if mix.q < 0.8:
        reasons.append(f"q={mix.q:g} < 4/5")
    if not _finite_sigmas(mix):
        reasons += [
            f"sigma_{i+1}=inf"
            for i, c in enumerate(mix.components)
            if not math.isfinite(c.sigma)
        ]
    if not mix.on_coordinate_axes():
        reasons.append("support not restricted to coordinate axes")
    if reasons:
        return _inapplicable("p1is5", " and ".join(reasons))
    explicit = 17.34 / n * mix.sqrt_sigma_sum() ** 2
    return _report("p1is5", explicit, [], cfg)


def _bound_krc1(known, params, cfg):
    twoae = 2.0 * known.alpha * E
    reasons = []
    if twoae >= 1.0:
        reasons.append(f"2*alpha*e={twoae:g} >= 1")
    if not all(math.isfinite(s) for s in known.sigma_m):
        reasons += [
            f"sigma_{i+1}=inf"
            for i, s in enumerate(known.sigma_m)
            if not math.isfinite(s)
        ]
    if reasons:
        return _inapplicable("krc1", " and ".join(reasons))
    lam = known.lambda_m
    if np.any(lam <= 0):
        return _inapplicable("krc1", "some lambda_m is zero")
    sig_sum = sum(1.0 + s for s in known.sigma_m)
    psq = (known.p_im**2).sum(axis=0)
    explicit = (
        15.98 / (1.0 - twoae) ** 1.5 * sig_sum * float(np.sum(psq / lam**2))
    )
    return _report("krc1", explicit, [], cfg)


_BOUNDS = {
    "thm1": ("dist", _bound_thm1),
    "thm1star": ("dist", _bound_thm1star),
    "thm2": ("dist", _bound_thm2),
    "thm3": ("dist", _bound_thm3),
    "thm4": ("dist", _bound_thm4),
    "thm5": ("dist", _bound_thm5),
    "trivial_exp": ("dist", _bound_trivial_exp),
    "cor1.cp": ("dist", _bound_cor1_cp),
    "cor1.consec": ("dist", _make_cor1("cor1.consec", 2, 3.5, 1)),
    "cor1.hipp": ("dist", _make_cor1("cor1.hipp", 3, 3.5, 2)),
    "cor1.first": ("dist", _make_cor1("cor1.first", 4, 6.5, 2)),
    "thm6": ("mixture", _bound_thm6),
    "thm6star": ("mixture", _make_line_bound("thm6star", 2, 3.5, 1)),
    "thm7": ("mixture", _make_line_bound("thm7", 3, 6.5, 2)),
    "thm8": ("mixture", _make_line_bound("thm8", 4, 6.5, 2)),
    "thm9": ("mixture", _make_line_bound("thm9", 2, 3.5, 1)),
    "thm10": ("mixture", _bound_thm10),
    "bergd": ("dist", _bound_bergd),
    "bergcor": ("dist", _bound_bergcor),
    "lemma_m3": ("dist", _bound_m3),
    "p1is5": ("mixture", _bound_p1is5),
    "krc1": ("known", _bound_krc1),
}

BOUND_IDS = tuple(sorted(_BOUNDS))


# ---------------------------------------------------------------------------
# computable lemma left-hand sides


def _as_measure(F):
    return F.measure if isinstance(F, SymmetricDistribution) else F


def _smoothing_lhs(F, k, lam, tol):
    """||(F-I)^{*k} * exp{lam (F-I)}||."""
    m = _as_measure(F)
    g = linear_combine([(1.0, m), (-1.0, identity(m.dim))])
    gk = convolution_power(g, k, 0.0) if k >= 1 else identity(m.dim)
    e = measure_exp(scale(g, lam), tol / 2.0)
    return convolve(e, gk, fft_noise_budget=tol / 2.0)


def lemma_lhs(lemma_id, F, params=None, tol=1e-9):
    """Compute a lemma's left-hand side numerically; returns (value, rhs).

    rhs is the explicit right-hand side, or None when the paper's bound has
    an unspecified constant.  The returned value carries no interval; use
    the measure's trunc_err via lemma_lhs_measure when needed.
    """
    value, err, rhs = lemma_lhs_with_err(lemma_id, F, params, tol)
    return value, rhs


def lemma_lhs_with_err(lemma_id, F, params=None, tol=1e-9):
    params = dict(params or {})
    if lemma_id in ("koD3", "fexp", "dexp"):
        if lemma_id == "koD3":
            k, lam = _need(params, "k", "lam")
        else:
            k, lam = _need(params, "k", "a")
        out = _smoothing_lhs(F, int(k), float(lam), tol)
        if lemma_id == "koD3":
            rhs = (2.0 * k / (E * lam)) ** (k / 2.0)
        elif lemma_id == "fexp":
            d = delta_functional(F, lam / k)
            rhs = (2.0 * k) ** k * d**k / (E**k * lam**k)
        else:
            mix = params.get("mixture") or decompose_line_mixture(F)
            if not (mix.span_ok and _finite_sigmas(mix)):
                raise ValueError("dexp requires unit-span lines with finite sigma")
            S = mix.sqrt_sigma_sum()
            rhs = (3.6 * k) ** k / (E**k * lam**k) * S**k
        return out.tv, out.trunc_err, rhs

    if lemma_id == "e2p":
        tau = float(params.get("tau", 1.0))
        if "p_list" in params:
            ps = np.asarray(params["p_list"], dtype=np.float64)
        else:
            p, n = _need(params, "p", "n")
            ps = np.full(int(n), float(p))
        if np.any(ps <= 0) or np.any(ps >= 1) or not 0 <= tau <= 1:
            raise ValueError("e2p requires p_i in (0,1) and tau in [0,1]")
        p0 = float(ps.max())
        m = _as_measure(F)
        g = linear_combine([(1.0, m), (-1.0, identity(m.dim))])
        g2 = convolve(g, g, fft_noise_budget=tol / 4.0)
        exponent = linear_combine(
            [
                ((1.0 + p0) / 2.0 * float(ps.sum()), g),
                (-tau / 2.0 * float(np.sum(ps**2)), g2),
            ]
        )
        out = measure_exp(exponent, tol / 2.0)
        return out.tv, out.trunc_err, 3.5 / math.sqrt(1.0 - p0)

    if lemma_id == "cero46":
        j, lam = _need(params, "j", "lam")
        m = _as_measure(F)
        if m.dim != 1:
            raise ValueError("cero46 is a one-dimensional lemma")
        if m.weight_at((0,)) != 0.0:
            raise ValueError("cero46 requires no mass at the origin")
        sigma = math.sqrt(float(np.sum(m.weights * m.coords[:, 0] ** 2)))
        g = linear_combine([(1.0, m), (-1.0, identity(1))])
        gj = convolution_power(g, int(j), 0.0)
        e = measure_exp(scale(g, float(lam)), tol / 2.0)
        out = convolve(e, gj, fft_noise_budget=tol / 2.0)
        rhs = 3.6 * math.sqrt(1.0 + sigma) * j ** (j + 0.25) / (lam**j * E**j)
        return out.tv, out.trunc_err, rhs

    if lemma_id == "c6a":
        j, n, p = _need(params, "j", "n", "p")
        if not 0 < p < 1:
            raise ValueError("c6a requires p in (0,1)")
        qq = 1.0 - p
        m = _as_measure(F)
        g = linear_combine([(1.0, m), (-1.0, identity(m.dim))])
        base = linear_combine([(qq, identity(m.dim)), (p, m)])
        bn = convolution_power(base, int(n), tol / 2.0)
        gj = convolution_power(g, int(j), 0.0)
        out = convolve(bn, gj, fft_noise_budget=tol / 2.0)
        rhs = (
            math.sqrt(E)
            * j**0.25
            * (n / (n + j)) ** (n / 2.0)
            * (j / ((n + j) * p * qq)) ** (j / 2.0)
        )
        return out.tv, out.trunc_err, rhs

    if lemma_id == "d2ftrys_m":
        (mm,) = _need(params, "m")
        out = hipp_power(F, float(mm), tol)
        return out.tv, out.trunc_err, 3.5 / math.sqrt(F.q)

    if lemma_id == "d2ftrys_a":
        (a,) = _need(params, "a")
        out = hipp_power(F, float(a), tol)
        return out.tv, out.trunc_err, math.exp(4.0 * abs(a))

    if lemma_id in ("fd00", "fd2", "fd2_whole"):
        m = _as_measure(F)
        d1 = hipp_power(F, 1.0, tol)
        if lemma_id == "fd00":
            out = linear_combine([(1.0, d1), (-1.0, identity(m.dim))])
            return out.tv, out.trunc_err, None
        g = linear_combine([(1.0, m), (-1.0, identity(m.dim))])
        g3 = convolution_power(g, 3, 0.0)
        if lemma_id == "fd2_whole":
            out = linear_combine([(1.0, m), (-1.0, d1)])
        else:
            out = linear_combine([(1.0, m), (-1.0, d1), (-1.0 / 3.0, g3)])
        return out.tv, out.trunc_err, None

    if lemma_id == "m3":
        from .approximants import bergstrom_partial

        n, k = _need(params, "n", "k")
        power = convolution_power(_as_measure(F), int(n), tol / 2.0)
        partial = bergstrom_partial(F, int(n), int(k), tol / 2.0)
        out = linear_combine([(1.0, power), (-1.0, partial)])
        return out.tv, out.trunc_err, None

    raise KeyError(f"unknown lemma_id {lemma_id!r}")


LEMMA_IDS = (
    "koD3",
    "fexp",
    "dexp",
    "e2p",
    "cero46",
    "c6a",
    "d2ftrys_m",
    "d2ftrys_a",
    "fd00",
    "fd2",
    "fd2_whole",
    "m3",
)


# ---------------------------------------------------------------------------
# empirical constant fitting


def fit_constant(observations, bound_id, inp, params_base=None, cfg_fixed=None, free_id=None):
    """Smallest C making `lhs <= explicit + C*coef (+ fixed terms)` over the
    observed grid: max over observations of the shortfall ratio, clipped
    at zero.

    observations: list of (n, lhs) pairs; the bound must expose exactly one
    free constant once `cfg_fixed` pins the others.
    """
    observations = list(observations)
    if len(observations) < 3:
        raise ValueError("need at least 3 observations")
    params_base = dict(params_base or {})
    best = 0.0
    for n, lhs in observations:
        rep = evaluate_bound(bound_id, inp, {**params_base, "n": n})
        if not rep.applicable:
            raise ValueError(f"{bound_id} inapplicable at n={n}: {rep.reason}")
        free_terms = [
            (cid, coef)
            for cid, coef in rep.generic_terms
            if free_id is None or cid == free_id
        ]
        fixed_terms = [t for t in rep.generic_terms if t not in free_terms]
        if free_id is None and len(free_terms) != 1:
            raise ValueError(
                f"{bound_id} has {len(free_terms)} generic terms; pass free_id"
            )
        cid, coef = free_terms[0]
        if coef <= 0:
            raise ValueError(f"degenerate coefficient for {cid} at n={n}")
        fixed = rep.explicit_part
        for fid, fcoef in fixed_terms:
            fixed += (cfg_fixed.get(fid) if cfg_fixed else 1.0) * fcoef
        best = max(best, (lhs - fixed) / coef)
    return max(0.0, best)
