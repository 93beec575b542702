"""Frozen random-instance generator profiles for the lemma scans.

Scans must be reproducible across releases, so every tunable of the
generator lives here under a versioned name.  Draw sizes are jointly capped
(dimension vs coordinate range vs Poisson parameter) so a single trial never
needs more than ``cell_cap`` dense cells for its exponentials.
"""

from __future__ import annotations

import math

import numpy as np

from .measure import SymmetricDistribution

PROFILES = {
    "scan-v1": {
        "q_range": (0.08, 0.92),
        "coord_cap": {1: 6, 2: 3, 3: 1},
        "lambda_choices": (1, 2, 4, 8, 16, 32, 64, 128, 256),
        "n_choices": (1, 2, 4, 8, 16, 32, 64, 128, 256),
        "cell_cap": 3.0e6,
        "max_pairs": 9,
        "mixture_max_lines": 3,
        "mixture_extra_k": 4,
    }
}


def get_profile(name):
    try:
        return PROFILES[name]
    except KeyError:
        raise KeyError(f"unknown scan profile {name!r}") from None


def exp_box_cells(dist, lam):
    """Estimated dense-box cell count of exp{lam(F-I)} after truncation."""
    coords = dist.measure.coords
    spread = lam * (1.0 - dist.q)
    radius = spread + 8.0 * math.sqrt(spread + 1.0) + 8.0
    cells = 1.0
    for c in np.abs(coords).max(axis=0):
        cells *= 2.0 * float(c) * radius + 1.0
    return cells


def feasible_lambdas(dist, choices, cell_cap):
    ok = [lam for lam in choices if exp_box_cells(dist, lam) <= cell_cap]
    return ok or [min(choices)]


def random_symmetric(rng, dim_max, atoms_max, profile):
    """Random symmetric distribution: distinct +-x pairs with Dirichlet
    masses and a uniform origin mass q."""
    prof = get_profile(profile) if isinstance(profile, str) else profile
    d = int(rng.integers(1, dim_max + 1))
    cap = prof["coord_cap"].get(d, 1)
    max_pairs = min(prof["max_pairs"], max(1, (atoms_max - 1) // 2))
    n_pairs = int(rng.integers(1, max_pairs + 1))
    chosen = {}
    guard = 0
    while len(chosen) < n_pairs:
        guard += 1
        if guard > 1000:
            break
        pt = tuple(int(v) for v in rng.integers(-cap, cap + 1, size=d))
        if all(v == 0 for v in pt):
            continue
        neg = tuple(-v for v in pt)
        if pt in chosen or neg in chosen:
            continue
        chosen[pt] = None
    pts = sorted(chosen)
    qlo, qhi = prof["q_range"]
    q = float(rng.uniform(qlo, qhi))
    raw = rng.dirichlet(np.ones(len(pts)))
    items = [((0,) * d, q)]
    for pt, mass in zip(pts, raw):
        w = (1.0 - q) * float(mass) / 2.0
        items.append((pt, w))
        items.append((tuple(-v for v in pt), w))
    return SymmetricDistribution.from_items(d, items)


_DIRECTION_POOL = {
    1: [(1,)],
    2: [(1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2)],
    3: [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, 0, 1), (0, 1, 1), (1, 1, 1)],
}


def random_line_mixture(rng, dim_max, profile):
    """Random distribution satisfying the line-mixture structure, each line
    carrying an adjacent occupied pair (unit span) and finite variance."""
    prof = get_profile(profile) if isinstance(profile, str) else profile
    d = int(rng.integers(1, dim_max + 1))
    pool = _DIRECTION_POOL[d]
    n_lines = int(rng.integers(1, min(prof["mixture_max_lines"], len(pool)) + 1))
    dir_idx = rng.choice(len(pool), size=n_lines, replace=False)
    qlo, qhi = prof["q_range"]
    q = float(rng.uniform(qlo, qhi))
    line_weights = rng.dirichlet(np.ones(n_lines)) * (1.0 - q)
    items = [((0,) * d, q)]
    for di, p_m in zip(sorted(int(i) for i in dir_idx), line_weights):
        direction = np.asarray(pool[di], dtype=np.int64)
        k0 = int(rng.integers(1, 3))
        ks = [k0, k0 + 1]
        if rng.random() < 0.5:
            extra = int(rng.integers(1, prof["mixture_extra_k"] + 1))
            if extra not in ks:
                ks.append(extra)
        mass = rng.dirichlet(np.ones(len(ks)))
        for k, m in zip(ks, mass):
            w = float(p_m) * float(m) / 2.0
            items.append((tuple(int(v) for v in k * direction), w))
            items.append((tuple(int(v) for v in -k * direction), w))
    return SymmetricDistribution.from_items(d, items)
