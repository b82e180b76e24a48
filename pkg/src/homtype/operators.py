"""Hardy-Littlewood and dyadic maximal operators with their type checks."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ._kernels import ball_max, csr
from .dyadic import DyadicGrid
from .space import FiniteSpace

__all__ = [
    "hl_maximal",
    "hl_maximal_many",
    "cube_averages",
    "dyadic_maximal",
    "truncated_dyadic_maximal",
    "superlevel_set",
    "weak11_check",
    "weak11_lambdas",
    "strongpp_check",
    "domination_check",
]

_CSR_CACHE: dict = {}


def _ball_csr(space: FiniteSpace):
    key = id(space)
    hit = _CSR_CACHE.get(key)
    if hit is None or hit[0] is not space:
        hit = (space, csr(space.balls.members))
        if len(_CSR_CACHE) > 64:
            _CSR_CACHE.clear()
        _CSR_CACHE[key] = hit
    return hit[1]


def hl_maximal_many(space: FiniteSpace, F) -> np.ndarray:
    """Uncentered maximal function of every row of ``F`` (shape k x n)."""
    F = np.atleast_2d(np.abs(np.asarray(F, dtype=float)))
    fam = space.balls
    avg = (fam.members.astype(float) @ (F * space.mass[None, :]).T) / fam.measures[:, None]
    indptr, indices = _ball_csr(space)
    return ball_max(indptr, indices, np.ascontiguousarray(avg), space.n).T.copy()


def hl_maximal(space: FiniteSpace, f) -> np.ndarray:
    """(Mf)(x) = max over canonical balls B containing x of the mu-average of |f| on B."""
    return hl_maximal_many(space, np.asarray(f, dtype=float)[None, :])[0]


def _sigma(grid: DyadicGrid, sigma) -> np.ndarray:
    if sigma is None:
        return np.ones(grid.space.n)
    s = np.asarray(sigma, dtype=float).reshape(-1)
    if s.size != grid.space.n or np.any(s <= 0) or not np.all(np.isfinite(s)):
        raise ValueError("sigma must be strictly positive and finite on every point")
    return s


def cube_averages(grid: DyadicGrid, f, sigma=None) -> np.ndarray:
    """sigma-average of |f| over every cube, indexed by cube id."""
    s = _sigma(grid, sigma) * grid.space.mass
    f = np.abs(np.asarray(f, dtype=float))
    C = grid.cube_matrix().astype(float)
    return (C @ (f * s)) / (C @ s)


def _level_max(grid: DyadicGrid, avg: np.ndarray, levels) -> np.ndarray:
    out = np.zeros(grid.space.n)
    for j in levels:
        np.maximum(out, avg[grid.labels[j]], out=out)
    return out


def dyadic_maximal(grid: DyadicGrid, f, sigma=None) -> np.ndarray:
    """(M^D_sigma f)(x) = max over cubes Q containing x of the sigma-average of |f| on Q."""
    return _level_max(grid, cube_averages(grid, f, sigma), range(grid.n_levels))


def truncated_dyadic_maximal(grid: DyadicGrid, f, sigma, nmax: int) -> np.ndarray:
    """Same sup restricted to cubes of generation <= nmax."""
    if not grid.bottom_generation <= nmax <= grid.top_generation:
        raise ValueError(f"nmax={nmax} outside generations {grid.bottom_generation}..{grid.top_generation}")
    levels = [j for j, g in enumerate(grid.generations) if g <= nmax]
    return _level_max(grid, cube_averages(grid, f, sigma), levels)


def superlevel_set(grid: DyadicGrid, f, sigma, lam: float) -> frozenset:
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    m = dyadic_maximal(grid, f, sigma)
    return frozenset(np.flatnonzero(m > lam).tolist())


def weak11_lambdas(values) -> np.ndarray:
    """Heights at which {M > lambda} changes: midpoints and left limits of the distinct values."""
    v = np.unique(np.asarray(values, dtype=float))
    v = v[v > 0]
    if v.size == 0:
        return v
    mids = 0.5 * (v[:-1] + v[1:])
    left = np.nextafter(v, 0.0)
    lam = np.unique(np.concatenate([[0.5 * v[0]], mids, left]))
    return lam[lam > 0]


def weak11_check(grid: DyadicGrid, f, sigma=None, lambdas=None) -> float:
    """max over lambda of lambda * sigma({M^D_sigma f > lambda}) / sum |f| sigma mu."""
    s = _sigma(grid, sigma) * grid.space.mass
    f = np.abs(np.asarray(f, dtype=float))
    total = float((f * s).sum())
    if total == 0:
        return 0.0
    m = dyadic_maximal(grid, f, sigma)
    lam = weak11_lambdas(m) if lambdas is None else np.asarray(lambdas, dtype=float)
    if lam.size == 0:
        return 0.0
    order = np.argsort(m)
    ms = m[order]
    tail = np.concatenate([np.cumsum(s[order][::-1])[::-1], [0.0]])
    mass_above = tail[np.searchsorted(ms, lam, side="right")]
    return float((lam * mass_above).max() / total)


def strongpp_check(grid: DyadicGrid, f, sigma, p: float) -> float:
    """||M^D_sigma f||_{L^p(sigma)} / ||f||_{L^p(sigma)}."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    s = _sigma(grid, sigma) * grid.space.mass
    f = np.abs(np.asarray(f, dtype=float))
    den = float((f**p * s).sum())
    if den == 0:
        return 0.0
    m = dyadic_maximal(grid, f, sigma)
    return float(((m**p * s).sum() / den) ** (1.0 / p))


def domination_check(space: FiniteSpace, grids: Sequence[DyadicGrid], f) -> float:
    """max over x of Mf(x) / sum_i M^{D_i} f(x)."""
    if not grids:
        raise ValueError("need at least one grid")
    f = np.abs(np.asarray(f, dtype=float))
    if not f.any():
        return 0.0
    M = hl_maximal(space, f)
    den = sum(dyadic_maximal(g, f) for g in grids)
    return float((M / den).max())
