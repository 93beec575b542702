"""Shared generators for the seeded property loops."""

from __future__ import annotations

import numpy as np

from cpapprox import SignedLatticeMeasure, SymmetricDistribution


def random_signed(rng, dim=1, max_atoms=12, coord_cap=4, weight_scale=1.0):
    m = int(rng.integers(1, max_atoms + 1))
    coords = rng.integers(-coord_cap, coord_cap + 1, size=(m, dim))
    weights = rng.uniform(-weight_scale, weight_scale, size=m)
    return SignedLatticeMeasure(dim, coords, weights)


def random_distribution(rng, dim=1, max_pairs=5, coord_cap=4, q_range=(0.1, 0.9)):
    n_pairs = int(rng.integers(1, max_pairs + 1))
    pts = {}
    while len(pts) < n_pairs:
        pt = tuple(int(v) for v in rng.integers(-coord_cap, coord_cap + 1, size=dim))
        if all(v == 0 for v in pt):
            continue
        neg = tuple(-v for v in pt)
        if pt in pts or neg in pts:
            continue
        pts[pt] = None
    q = float(rng.uniform(*q_range))
    masses = rng.dirichlet(np.ones(n_pairs)) * (1.0 - q) / 2.0
    items = [((0,) * dim, q)]
    for pt, w in zip(sorted(pts), masses):
        items.append((pt, float(w)))
        items.append((tuple(-v for v in pt), float(w)))
    return SymmetricDistribution.from_items(dim, items)


def dyadic_distribution(rng, half_width=4, denom_bits=6):
    """d=1 distribution with small dyadic masses (oracle-friendly)."""
    denom = 1 << denom_bits
    k = int(rng.integers(1, half_width + 1))
    cuts = np.sort(rng.integers(1, denom, size=2 * k))
    parts = np.diff(np.concatenate([[0], cuts, [denom]]))
    while np.any(parts == 0) or parts[k] == denom:
        cuts = np.sort(rng.integers(1, denom, size=2 * k))
        parts = np.diff(np.concatenate([[0], cuts, [denom]]))
    # symmetrize: pair off-origin parts
    weights = {}
    for i in range(k):
        w = (int(parts[i]) + int(parts[2 * k - i])) / (2.0 * denom)
        if w:
            weights[i + 1] = w
            weights[-(i + 1)] = w
    q = 1.0 - 2.0 * sum(w for kk, w in weights.items() if kk > 0)
    if not 0 < q < 1:
        return dyadic_distribution(rng, half_width, denom_bits)
    weights[0] = q
    items = [((kk,), w) for kk, w in sorted(weights.items())]
    return SymmetricDistribution.from_items(1, items)
