"""Finite spaces of homogeneous type.

A :class:`FiniteSpace` is a point set ``0..n-1`` with a materialized
quasi-metric table and strictly positive point masses.  Balls are open,
``B(x, r) = {y : d(x, y) < r}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "FiniteSpace",
    "BallFamily",
    "LowerMassReport",
    "euclidean_grid",
    "power_metric",
    "cantor",
    "explicit",
    "generate_space",
    "ball",
    "measure",
    "quasimetric_constant",
    "doubling_constant",
    "default_radii",
    "lower_mass_check",
]


class SpaceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteSpace:
    """Points ``0..n-1`` with distance table ``dist`` and masses ``mass``.

    ``coords`` is optional bookkeeping (grid coordinates) and plays no role
    in any computation.
    """

    dist: np.ndarray
    mass: np.ndarray
    a0_declared: Optional[float] = None
    coords: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        dist = np.array(self.dist, dtype=float)
        mass = np.array(self.mass, dtype=float).reshape(-1)
        n = mass.size
        if n == 0:
            raise SpaceError("a space needs at least one point")
        if dist.shape != (n, n):
            raise SpaceError(f"distance table has shape {dist.shape}, expected {(n, n)}")
        if not np.all(np.isfinite(dist)) or np.any(dist < 0):
            raise SpaceError("distances must be finite and nonnegative")
        if not np.array_equal(dist, dist.T):
            raise SpaceError("distance table is not symmetric")
        if np.any(np.diag(dist) != 0):
            raise SpaceError("d(x, x) must be 0")
        off = dist[~np.eye(n, dtype=bool)]
        if np.any(off <= 0):
            raise SpaceError("d(x, y) = 0 for some x != y")
        if not np.all(np.isfinite(mass)) or np.any(mass <= 0):
            raise SpaceError("point masses must be strictly positive and finite")
        if self.a0_declared is not None and self.a0_declared < 1:
            raise SpaceError("declared quasi-metric constant must be >= 1")
        dist.setflags(write=False)
        mass.setflags(write=False)
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "mass", mass)

    @property
    def n(self) -> int:
        return self.mass.size

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())

    @cached_property
    def diameter(self) -> float:
        return float(self.dist.max())

    @cached_property
    def distinct_distances(self) -> np.ndarray:
        """Sorted distinct positive distances realized in the space."""
        d = np.unique(self.dist)
        return d[d > 0]

    @cached_property
    def balls(self) -> "BallFamily":
        return BallFamily.canonical(self)

    def with_mass(self, mass: Sequence[float]) -> "FiniteSpace":
        """Same quasi-metric, new point masses (e.g. ``W * mu`` for a weight W)."""
        return FiniteSpace(self.dist, mass, self.a0_declared, self.coords)

    def subspace(self, pts: Iterable[int]) -> "FiniteSpace":
        idx = np.asarray(sorted(set(int(i) for i in pts)), dtype=int)
        coords = None if self.coords is None else self.coords[idx]
        return FiniteSpace(self.dist[np.ix_(idx, idx)], self.mass[idx], self.a0_declared, coords)


@dataclass(frozen=True, eq=False)
class BallFamily:
    """Every distinct ball of a finite space, one row per ball.

    ``members[b]`` is the indicator of ball ``b``; the ball is realized as
    ``B(centers[b], radii[b])``.
    """

    members: np.ndarray
    centers: np.ndarray
    radii: np.ndarray
    measures: np.ndarray

    def __len__(self):
        return self.members.shape[0]

    def ball(self, b: int) -> frozenset:
        return frozenset(np.flatnonzero(self.members[b]).tolist())

    @classmethod
    def canonical(cls, space: FiniteSpace) -> "BallFamily":
        # On a finite space r -> B(x, r) is a step function; the distinct balls
        # around x are the prefixes of x's points sorted by distance, cut at
        # distinct distance values.
        n = space.n
        rows, centers, radii = [], [], []
        far = space.diameter + 1.0
        for x in range(n):
            d = space.dist[x]
            levels = np.unique(d)
            nxt = np.append(levels[1:], np.inf)
            for lv, up in zip(levels, nxt):
                rows.append(d <= lv)
                centers.append(x)
                radii.append(far if np.isinf(up) else 0.5 * (lv + up))
        members = np.array(rows, dtype=bool)
        packed = np.packbits(members, axis=1)
        _, first = np.unique(packed, axis=0, return_index=True)
        first = np.sort(first)
        members = members[first]
        members.setflags(write=False)
        centers = np.asarray(centers, dtype=int)[first]
        radii = np.asarray(radii, dtype=float)[first]
        measures = members.astype(float) @ space.mass
        return cls(members, centers, radii, measures)


# --------------------------------------------------------------------------
# generators


def euclidean_grid(dim: int, side: int, spacing: float = 1.0, mass: str = "uniform") -> FiniteSpace:
    """Regular grid ``{0, h, ..., (side-1)h}^dim`` with Euclidean distance.

    ``mass="uniform"`` puts mass 1 on every point, ``mass="density"`` puts
    the cell volume ``h**dim`` (so refinements of the same cube keep total
    mass fixed).
    """
    if dim < 1 or side < 1:
        raise SpaceError("dim and side must be positive")
    if spacing <= 0:
        raise SpaceError("spacing must be positive")
    axes = [np.arange(side)] * dim
    idx = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    # integer offsets keep equal lattice gaps bitwise equal after scaling
    diff = idx[:, None, :] - idx[None, :, :]
    dist = spacing * np.sqrt((diff**2).sum(-1))
    return FiniteSpace(dist, _masses(idx.shape[0], spacing**dim, mass), 1.0, idx * spacing)


def power_metric(side: int, gamma: float, spacing: float = 1.0, mass: str = "uniform") -> FiniteSpace:
    """1-D grid with ``d(x, y) = |x - y|**gamma``; quasi-metric constant ``2**(gamma-1)``."""
    if gamma < 1:
        raise SpaceError("power metric needs gamma >= 1")
    if side < 1 or spacing <= 0:
        raise SpaceError("side and spacing must be positive")
    i = np.arange(side)
    dist = (spacing * np.abs(i[:, None] - i[None, :])) ** gamma
    return FiniteSpace(dist, _masses(side, spacing, mass), 2.0 ** (gamma - 1), (i * spacing)[:, None].astype(float))


def cantor(depth: int, ratio: float = 1.0 / 3.0) -> FiniteSpace:
    """Gap endpoints of the generation-``depth`` Cantor construction.

    Each generation-``depth-1`` interval ``[a, a+L]`` contributes its two
    points ``a + ratio*L`` and ``a + (1-ratio)*L``; all ``2**depth`` points
    carry mass ``2**-depth``.
    """
    if depth < 1:
        raise SpaceError("cantor depth must be >= 1")
    if not 0 < ratio < 0.5:
        raise SpaceError("contraction ratio must lie in (0, 1/2)")
    lefts = np.array([0.0])
    length = 1.0
    for _ in range(depth - 1):
        lefts = np.concatenate([lefts, lefts + (1 - ratio) * length])
        length *= ratio
    lefts = np.sort(lefts)
    pts = np.sort(np.concatenate([lefts + ratio * length, lefts + (1 - ratio) * length]))
    dist = np.abs(pts[:, None] - pts[None, :])
    return FiniteSpace(dist, np.full(pts.size, 2.0**-depth), 1.0, pts[:, None])


def explicit(dist, mass, a0_declared=None) -> FiniteSpace:
    return FiniteSpace(dist, mass, a0_declared)


def generate_space(spec: dict) -> FiniteSpace:
    """Build a space from a description mapping such as ``{"kind": "euclidean_grid", "dim": 1, ...}``."""
    spec = dict(spec)
    kind = spec.pop("kind")
    if kind == "euclidean_grid":
        return euclidean_grid(int(spec.get("dim", 1)), int(spec["side"]), float(spec.get("spacing", 1.0)), spec.get("mass", "uniform"))
    if kind == "power_metric":
        return power_metric(int(spec["side"]), float(spec["gamma"]), float(spec.get("spacing", 1.0)), spec.get("mass", "uniform"))
    if kind == "cantor":
        return cantor(int(spec["depth"]), float(spec.get("ratio", 1.0 / 3.0)))
    if kind == "explicit":
        from .files import load_space

        return load_space(spec["path"])
    raise SpaceError(f"unknown space kind {kind!r}")


def _masses(n, cell, rule):
    if rule == "uniform":
        return np.ones(n)
    if rule == "density":
        return np.full(n, float(cell))
    raise SpaceError(f"unknown mass rule {rule!r}")


# --------------------------------------------------------------------------
# queries


def ball(space: FiniteSpace, center: int, r: float) -> frozenset:
    if not r > 0:
        raise ValueError("ball radius must be positive")
    return frozenset(np.flatnonzero(space.dist[center] < r).tolist())


def measure(space: FiniteSpace, pts: Iterable[int]) -> float:
    idx = np.fromiter((int(i) for i in pts), dtype=int)
    if idx.size == 0:
        return 0.0
    return float(space.mass[np.unique(idx)].sum())


def quasimetric_constant(space: FiniteSpace) -> float:
    """Smallest A0 with d(x,y) <= A0 (d(x,z) + d(z,y)) over all nondegenerate triples."""
    n = space.n
    if n < 3:
        return 1.0
    d = space.dist
    best = 1.0
    for z in range(n):
        s = d[:, z][:, None] + d[z, :][None, :]
        ratio = np.divide(d, s, out=np.zeros_like(d), where=s > 0)
        ratio[z, :] = 0.0
        ratio[:, z] = 0.0
        best = max(best, float(ratio.max()))
    return best


def default_radii(space: FiniteSpace) -> np.ndarray:
    """One radius inside every interval on which both ``mu(B(x,r))`` and ``mu(B(x,2r))`` are constant."""
    d = space.distinct_distances
    if d.size == 0:
        return np.array([1.0])
    brk = np.unique(np.concatenate([[0.0], d, d / 2.0]))
    mids = 0.5 * (brk[:-1] + brk[1:])
    return np.append(mids, 2.0 * brk[-1])


def _ball_masses(space: FiniteSpace, radii: np.ndarray) -> np.ndarray:
    """``out[x, i] = mu(B(x, radii[i]))``."""
    order = np.argsort(space.dist, axis=1, kind="stable")
    sd = np.take_along_axis(space.dist, order, axis=1)
    cm = np.concatenate([np.zeros((space.n, 1)), np.cumsum(space.mass[order], axis=1)], axis=1)
    out = np.empty((space.n, radii.size))
    for x in range(space.n):
        out[x] = cm[x, np.searchsorted(sd[x], radii, side="left")]
    return out


def doubling_constant(space: FiniteSpace, radii: Optional[Sequence[float]] = None) -> float:
    """max over centers and radii of mu(B(x, 2r)) / mu(B(x, r))."""
    if space.n == 1:
        return 1.0
    radii = default_radii(space) if radii is None else np.asarray(radii, dtype=float)
    if radii.size == 0 or np.any(radii <= 0):
        raise ValueError("radii must be nonempty and positive")
    small = _ball_masses(space, radii)
    big = _ball_masses(space, 2.0 * radii)
    return max(1.0, float((big / small).max()))


@dataclass(frozen=True)
class LowerMassReport:
    constant: float
    exponent: float
    # (x, R, y, r): the infimum is approached with R just above and r at the given values
    witness: tuple


def lower_mass_check(space: FiniteSpace, doubling: Optional[float] = None) -> LowerMassReport:
    """Largest C with mu(B(y,r))/mu(B(x,R)) >= C (r/R)^s, s = log2 C_mu, for all 0<r<R, y in B(x,R).

    Both ball masses are step functions of the radius; on a pair of steps the
    factor (R/r)^s is smallest with r at the top of its step and R at the
    bottom of its own, so the scan runs over steps of the distinct-distance
    set and uses those endpoints.
    """
    cmu = doubling_constant(space) if doubling is None else float(doubling)
    s = math.log2(cmu)
    if space.n == 1:
        return LowerMassReport(1.0, s, (0, 1.0, 0, 1.0))
    D = np.concatenate([[0.0], space.distinct_distances])  # step i is (D[i], D[i+1]]
    m = D.size
    # closed-ball masses at each distance level: mu({z : d(x,z) <= D[i]})
    order = np.argsort(space.dist, axis=1, kind="stable")
    sd = np.take_along_axis(space.dist, order, axis=1)
    cm = np.concatenate([np.zeros((space.n, 1)), np.cumsum(space.mass[order], axis=1)], axis=1)
    closed = np.stack([cm[x, np.searchsorted(sd[x], D, side="right")] for x in range(space.n)])
    upper = np.append(D[1:], np.inf)  # top of step i
    # g[y, j] = min_{i<j} closed[y, i] * upper[i]^-s  (r at the top of step i)
    scaled = closed * upper[None, :] ** (-s)
    g = np.full((space.n, m), np.inf)
    g[:, 1:] = np.minimum.accumulate(scaled[:, :-1], axis=1)
    arg_g = np.zeros((space.n, m), dtype=int)
    for y in range(space.n):
        run = 0
        for j in range(1, m):
            if scaled[y, j - 1] < scaled[y, run]:
                run = j - 1
            arg_g[y, j] = run
    best = (np.inf, None)
    for x in range(space.n):
        for j in range(1, m):  # R just above D[j]; ball is {d <= D[j]}
            inside = space.dist[x] <= D[j]
            ys = np.flatnonzero(inside)
            base = closed[x, j]
            cand_lower = D[j] ** s * g[ys, j] / base  # i < j
            cand_same = closed[ys, j] / base  # r, R in the same step: factor -> 1
            k = int(np.argmin(cand_lower))
            if cand_lower[k] < best[0]:
                i = arg_g[ys[k], j]
                best = (float(cand_lower[k]), (x, float(D[j]), int(ys[k]), float(upper[i])))
            k = int(np.argmin(cand_same))
            if cand_same[k] < best[0]:
                best = (float(cand_same[k]), (x, float(D[j]), int(ys[k]), float(D[j])))
    # the same-step candidates with y = x give 1, so best[0] <= 1
    return LowerMassReport(best[0], s, best[1])
