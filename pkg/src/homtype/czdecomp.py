"""Calderon-Zygmund stopping cubes at one height and across geometric heights."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dyadic import DyadicGrid
from .operators import _sigma, cube_averages, dyadic_maximal

__all__ = [
    "CZError",
    "CZDecomposition",
    "CZReport",
    "cz_at_height",
    "sparse_family",
    "sup_ccz",
    "structural_ccz",
    "verify_cz",
]


class CZError(ValueError):
    pass


@dataclass(frozen=True)
class CZDecomposition:
    """Single height: ``lam`` set and ``cubes`` filled.  Multi-level: ``a`` set,
    ``heights`` maps k to the cube ids at height a^k and ``sparse_sets`` maps
    (k, cube id) to E^k_j."""

    lam: Optional[float]
    cubes: tuple
    achieved_CCZ: float
    lambda0: float
    a: Optional[float] = None
    heights: dict = field(default_factory=dict)
    sparse_sets: dict = field(default_factory=dict)


def _threshold(grid: DyadicGrid, f, sigma) -> float:
    s = _sigma(grid, sigma) * grid.space.mass
    return float((np.abs(np.asarray(f, dtype=float)) * s).sum() / s.sum())


def _fit(c: float, avgs, lam: float) -> float:
    """Smallest float >= c with avg <= c * lam for every avg (in float arithmetic)."""
    for v in avgs:
        while c * lam < v:
            c = math.nextafter(c, math.inf)
    return c


def _stopping(grid: DyadicGrid, avg: np.ndarray, lam: float) -> list:
    blocked = np.zeros(len(grid.cubes), dtype=bool)
    out = []
    for ids in grid.level_ids:
        for i in ids:
            q = grid.cubes[i]
            if q.parent is not None and blocked[q.parent]:
                blocked[i] = True
            elif avg[i] > lam:
                out.append(i)
                blocked[i] = True
    return out


def cz_at_height(grid: DyadicGrid, f, sigma, lam: float) -> CZDecomposition:
    """Maximal cubes whose sigma-average of |f| exceeds ``lam`` (top-down stopping time)."""
    lam0 = _threshold(grid, f, sigma)
    if not lam > 0:
        raise CZError("height must be positive")
    if not lam > lam0:
        raise CZError(f"height must exceed the average over the whole space, {lam0!r}")
    avg = cube_averages(grid, f, sigma)
    cubes = _stopping(grid, avg, lam)
    c = max([1.0] + [avg[i] / lam for i in cubes])
    c = _fit(c, avg[cubes], lam)
    return CZDecomposition(float(lam), tuple(cubes), float(c), lam0)


def sup_ccz(grid: DyadicGrid, f, sigma=None) -> float:
    """sup over heights lambda > lambda0 of max avg(Q)/lambda over the CZ cubes at lambda.

    Q is a CZ cube exactly for lambda in [A, avg(Q)) with A the largest
    ancestor average, so the sup is the max of avg(Q)/A over cubes with
    avg(Q) > A.
    """
    avg = cube_averages(grid, f, sigma)
    anc = np.zeros(len(grid.cubes))
    best = 1.0
    for ids in grid.level_ids:
        for i in ids:
            p = grid.cubes[i].parent
            if p is None:
                anc[i] = avg[i]
                continue
            A = max(anc[p], avg[p])
            anc[i] = A
            if avg[i] > A > 0:
                best = max(best, avg[i] / A)
    return float(best)


def structural_ccz(grid: DyadicGrid, sigma=None) -> float:
    """max sigma(parent)/sigma(child): bounds every achieved C_CZ for any f."""
    m = grid.cube_measure(_sigma(grid, sigma))
    r = [m[q.parent] / m[q.id] for q in grid.cubes if q.parent is not None]
    return float(max(r, default=1.0))


def sparse_family(grid: DyadicGrid, f, sigma, a: float) -> CZDecomposition:
    """CZ cubes at every height a^k > lambda0 and the sets E^k_j = Q^k_j minus X_{a^(k+1)}."""
    if not a > 1:
        raise CZError("base must exceed 1")
    lam0 = _threshold(grid, f, sigma)
    avg = cube_averages(grid, f, sigma)
    top = float(avg.max())
    heights, sparse = {}, {}
    kk = []
    c = 1.0
    if lam0 > 0 and top > lam0:
        k = math.floor(math.log(lam0, a))
        while a**k <= lam0:
            k += 1
        m = dyadic_maximal(grid, f, sigma)
        C = grid.cube_matrix()
        while a**k < top:
            cubes = _stopping(grid, avg, a**k)
            heights[k] = tuple(cubes)
            c = max([c] + [avg[i] / a**k for i in cubes])
            kk.append(k)
            above = m > a ** (k + 1)
            for i in cubes:
                sparse[(k, i)] = frozenset(np.flatnonzero(C[i] & ~above).tolist())
            k += 1
        for k in kk:
            c = _fit(c, avg[list(heights[k])], a**k)
    if not a > c:
        raise CZError(f"base a={a!r} must exceed the measured C_CZ={c!r}")
    return CZDecomposition(None, (), float(c), lam0, float(a), heights, sparse)


@dataclass(frozen=True)
class CZReport:
    cover: bool
    sandwich: bool
    maximal: bool
    disjoint: bool
    sparse_disjoint: bool
    thick: bool
    min_thickness: float

    @property
    def passed(self) -> bool:
        return self.cover and self.sandwich and self.maximal and self.disjoint and self.sparse_disjoint and self.thick


def verify_cz(grid: DyadicGrid, f, sigma, dec: CZDecomposition) -> CZReport:
    """Exact checks of cover, sandwich, maximality, disjointness and sparse thickness."""
    avg = cube_averages(grid, f, sigma)
    sm = _sigma(grid, sigma) * grid.space.mass
    C = grid.cube_matrix()
    m = dyadic_maximal(grid, f, sigma)
    runs = {None: (dec.lam, dec.cubes)} if dec.a is None else {k: (dec.a**k, ids) for k, ids in dec.heights.items()}
    cover = sandwich = maximal = disjoint = True
    for lam, ids in runs.values():
        cnt = C[list(ids)].sum(axis=0) if ids else np.zeros(grid.space.n, dtype=int)
        disjoint &= bool((cnt <= 1).all())
        cover &= bool(np.array_equal(cnt > 0, m > lam))
        for i in ids:
            sandwich &= bool(lam < avg[i] <= dec.achieved_CCZ * lam)
            p = grid.cubes[i].parent
            maximal &= p is None or bool(avg[p] <= lam)
    seen = np.zeros(grid.space.n, dtype=bool)
    sparse_disjoint = True
    thick = True
    worst = 1.0
    for (k, i), E in dec.sparse_sets.items():
        idx = np.fromiter(E, dtype=int, count=len(E))
        if seen[idx].any() or not C[i, idx].all():
            sparse_disjoint = False
        seen[idx] = True
        r = float(sm[idx].sum() / sm[C[i]].sum())
        worst = min(worst, r)
        if not r >= (dec.a - dec.achieved_CCZ) / dec.a:
            thick = False
    return CZReport(cover, sandwich, maximal, disjoint, sparse_disjoint, thick, worst)
