"""Shared multi-objective machinery: dominance, sorting, crowding, hypervolume.

All functions treat objective vectors as minimization costs and accept plain
sequences or numpy arrays of any objective count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scene import Layout


class MooError(ValueError):
    """Domain errors: empty populations, mismatched vector lengths."""


@dataclass(frozen=True)
class EvaluatedSolution:
    """A decision (layout) paired with its full objective vector."""

    decision: Layout
    objectives: tuple[float, ...]


def dominates(a, b) -> bool:
    """True iff a <= b componentwise with strict improvement somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise MooError(f"objective vectors differ in length: {a.shape} vs {b.shape}")
    if np.isnan(a).any() or np.isnan(b).any():
        raise MooError("objective vectors must not contain NaN")
    return bool((a <= b).all() and (a < b).any())


def _dominance_matrix(points: np.ndarray) -> np.ndarray:
    """dom[i, j] is True iff point i dominates point j."""
    le = (points[:, None, :] <= points[None, :, :]).all(axis=-1)
    lt = (points[:, None, :] < points[None, :, :]).any(axis=-1)
    return le & lt


def nondominated_mask(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if len(points) == 0:
        return np.zeros(0, dtype=bool)
    dom = _dominance_matrix(points)
    return ~dom.any(axis=0)


def fast_nondominated_sort(population) -> list[list[int]]:
    """Partition indices into non-dominated fronts (front 0 dominates all later ones)."""
    points = np.asarray(population, dtype=float)
    if len(points) == 0:
        raise MooError("population must be non-empty")
    if points.ndim != 2:
        raise MooError("population must be a list of equal-length objective vectors")
    dom = _dominance_matrix(points)
    n_dominators = dom.sum(axis=0)
    fronts: list[list[int]] = []
    remaining = np.ones(len(points), dtype=bool)
    while remaining.any():
        current = remaining & (n_dominators == 0)
        members = np.flatnonzero(current)
        fronts.append(members.tolist())
        remaining[members] = False
        n_dominators = n_dominators - dom[members].sum(axis=0)
    return fronts


def front_ranks(population) -> np.ndarray:
    """Per-index front rank from fast_nondominated_sort."""
    fronts = fast_nondominated_sort(population)
    ranks = np.empty(sum(len(f) for f in fronts), dtype=int)
    for r, members in enumerate(fronts):
        ranks[members] = r
    return ranks


def crowding_distance(front) -> np.ndarray:
    """NSGA-II crowding distance for one front.

    Per objective the extreme solutions get +inf; interior solutions accumulate
    the normalized gap between their neighbors. Objectives with zero range
    contribute nothing. Ties in the per-objective sort keep original index
    order (stable), so results are reproducible across runs.
    """
    values = np.asarray(front, dtype=float)
    if len(values) == 0:
        raise MooError("front must be non-empty")
    m, k = values.shape
    dist = np.zeros(m)
    for j in range(k):
        order = np.argsort(values[:, j], kind="stable")
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        vmin, vmax = values[order[0], j], values[order[-1], j]
        if vmax > vmin and m > 2:
            gaps = (values[order[2:], j] - values[order[:-2], j]) / (vmax - vmin)
            interior = order[1:-1]
            finite = ~np.isinf(dist[interior])
            dist[interior[finite]] += gaps[finite]
    return dist


# ---------------------------------------------------------------------------
# Hypervolume
# ---------------------------------------------------------------------------

def reference_point(k: int, margin: float = 0.1) -> tuple[float, ...]:
    """Convention for normalized [0,1] objective space: (1 + margin, ...)."""
    return tuple(1.0 + margin for _ in range(k))


def _hv_2d(points: np.ndarray, ref: np.ndarray) -> float:
    keep = nondominated_mask(points)
    pts = points[keep]
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    hv = 0.0
    for i in range(len(pts)):
        width = (pts[i + 1, 0] if i + 1 < len(pts) else ref[0]) - pts[i, 0]
        hv += width * (ref[1] - pts[i, 1])
    return hv


def _hv_exact(points: np.ndarray, ref: np.ndarray) -> float:
    k = points.shape[1]
    if k == 1:
        return float(ref[0] - points[:, 0].min())
    if k == 2:
        return _hv_2d(points, ref)
    # Slice along the last axis: sweep levels, integrating the (k-1)-dim
    # hypervolume of the active set over each slab.
    levels = np.unique(points[:, -1])
    hv = 0.0
    for i, z in enumerate(levels):
        z_next = levels[i + 1] if i + 1 < len(levels) else ref[-1]
        active = points[points[:, -1] <= z][:, :-1]
        hv += _hv_exact(active, ref[:-1]) * (z_next - z)
    return float(hv)


def exact_hypervolume(points, ref) -> float:
    """Exact dominated volume via recursive slicing (practical for k <= 3)."""
    pts = np.asarray(points, dtype=float).reshape(-1, len(ref))
    ref = np.asarray(ref, dtype=float)
    pts = pts[(pts <= ref).all(axis=1)]
    if len(pts) == 0:
        return 0.0
    return _hv_exact(pts, ref)


def monte_carlo_hypervolume(points, ref, *, samples: int = 100_000, seed: int = 0,
                            lower=None) -> tuple[float, float]:
    """Monte Carlo estimate of the dominated volume, with its standard error.

    Samples uniformly in the box [lower, ref]; ``lower`` defaults to the
    componentwise minimum of the surviving points. The standard error is
    vol * sqrt(p (1 - p) / samples) for hit fraction p. A fixed ``lower``
    (e.g. zeros in normalized space) fixes the sample cloud across calls, so
    estimates of a growing dominated region are themselves non-decreasing.
    The generator is dedicated and seeded by the caller, independent of any
    solver randomness.
    """
    ref = np.asarray(ref, dtype=float)
    pts = np.asarray(points, dtype=float).reshape(-1, len(ref))
    pts = pts[(pts <= ref).all(axis=1)]
    if len(pts) == 0:
        return 0.0, 0.0
    lo = pts.min(axis=0) if lower is None else np.asarray(lower, dtype=float)
    span = ref - lo
    vol = float(np.prod(span))
    if vol <= 0.0:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    chunk = 20_000
    while done < samples:
        n = min(chunk, samples - done)
        u = lo + span * rng.random((n, len(ref)))
        dominated = (pts[None, :, :] <= u[:, None, :]).all(axis=-1).any(axis=-1)
        hits += int(dominated.sum())
        done += n
    p = hits / samples
    return vol * p, vol * float(np.sqrt(p * (1.0 - p) / samples))


def hypervolume(points, ref, *, samples: int = 100_000, seed: int = 0,
                method: str = "auto", lower=None) -> float:
    """Dominated volume of ``points`` relative to ``ref`` (minimization).

    Points not componentwise <= ref are filtered out first; an empty surviving
    set yields 0. With ``method="auto"`` the value is exact for k <= 3 and a
    seeded Monte Carlo estimate for k >= 4 (see monte_carlo_hypervolume for
    the error model).
    """
    ref = np.asarray(ref, dtype=float)
    if method == "exact" or (method == "auto" and len(ref) <= 3):
        return exact_hypervolume(points, ref)
    if method not in ("auto", "monte_carlo"):
        raise MooError(f"unknown hypervolume method {method!r}")
    value, _ = monte_carlo_hypervolume(points, ref, samples=samples, seed=seed, lower=lower)
    return value
