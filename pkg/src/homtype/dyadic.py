"""Hierarchical dyadic grids on finite quasi-metric spaces.

Construction: globally nested maximal nets N_0 = {top} <= N_1 <= ... <= N_L = X
with separations S * d0^-j.  A center entering at level j is linked to its
nearest center of level j - 1; the level-j cube of a center is the set of
points whose ancestor chain passes through it.  Partition, nesting and the
parent/child structure hold by construction.  Generation labels are then
fitted so that every inner ball B(center, d0^k) lies inside its cube, and the
outer sandwich constant is measured.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .space import FiniteSpace, quasimetric_constant

__all__ = [
    "DyadicCube",
    "DyadicGrid",
    "GridConstructionError",
    "GridReport",
    "default_d0",
    "build_grid",
    "verify_grid",
    "adjacent_family",
    "AdjacentFamily",
]


class GridConstructionError(RuntimeError):
    pass


@dataclass(frozen=True)
class DyadicCube:
    id: int
    generation: int
    center: int
    members: frozenset
    parent: Optional[int] = None
    children: tuple = ()


def _ulp_up(x: float, k: int = 4) -> float:
    for _ in range(k):
        x = math.nextafter(x, math.inf)
    return x


@dataclass(frozen=True, eq=False)
class DyadicGrid:
    """Cubes of every level, coarse to fine.

    ``level_ids[j]`` lists the cube ids of level ``j`` whose generation is
    ``generations[j]`` (strictly decreasing in ``j``).
    """

    space: FiniteSpace
    d0: float
    seed: int
    cubes: tuple
    level_ids: tuple
    generations: tuple
    achieved_Cd: float
    achieved_eps: float

    @classmethod
    def from_levels(
        cls,
        space: FiniteSpace,
        levels: Sequence[Sequence[tuple]],
        generations: Sequence[int],
        d0: float,
        seed: int = 0,
        achieved_Cd: Optional[float] = None,
        achieved_eps: Optional[float] = None,
    ) -> "DyadicGrid":
        """Assemble a grid from ``levels[j] = [(center, members), ...]``.

        Parents are found by containment; a cube contained in no cube of the
        previous level gets ``parent=None`` (the verifier reports it).
        Missing constants are measured.
        """
        if len(levels) != len(generations) or not levels:
            raise ValueError("need one generation per level")
        if d0 <= 1:
            raise ValueError("d0 must exceed 1")
        raw, ids = [], []
        for j, lev in enumerate(levels):
            row = []
            for c, mem in lev:
                row.append(len(raw))
                raw.append((j, int(c), frozenset(int(x) for x in mem)))
            ids.append(tuple(row))
        parent = [None] * len(raw)
        kids = [[] for _ in raw]
        for j in range(1, len(levels)):
            for i in ids[j]:
                for q in ids[j - 1]:
                    if raw[i][2] <= raw[q][2]:
                        parent[i] = q
                        kids[q].append(i)
                        break
        cubes = tuple(
            DyadicCube(i, int(generations[j]), c, mem, parent[i], tuple(kids[i])) for i, (j, c, mem) in enumerate(raw)
        )
        grid = cls(space, float(d0), int(seed), cubes, tuple(ids), tuple(int(g) for g in generations), 0.0, 0.0)
        cd = _measured_cd(grid) if achieved_Cd is None else float(achieved_Cd)
        eps = _measured_eps(grid) if achieved_eps is None else float(achieved_eps)
        object.__setattr__(grid, "achieved_Cd", cd)
        object.__setattr__(grid, "achieved_eps", eps)
        return grid

    @property
    def n_levels(self) -> int:
        return len(self.level_ids)

    @property
    def top_generation(self) -> int:
        return self.generations[0]

    @property
    def bottom_generation(self) -> int:
        return self.generations[-1]

    @property
    def levels(self) -> dict:
        """generation -> list of cubes."""
        return {g: [self.cubes[i] for i in ids] for g, ids in zip(self.generations, self.level_ids)}

    @cached_property
    def cube_matrix_(self) -> np.ndarray:
        M = np.zeros((len(self.cubes), self.space.n), dtype=bool)
        for q in self.cubes:
            M[q.id, list(q.members)] = True
        M.setflags(write=False)
        return M

    def cube_matrix(self) -> np.ndarray:
        """Indicator rows of all cubes, indexed by cube id."""
        return self.cube_matrix_

    @cached_property
    def labels(self) -> np.ndarray:
        """``labels[j, x]`` = id of the level-``j`` cube containing ``x`` (-1 if none)."""
        out = np.full((self.n_levels, self.space.n), -1, dtype=int)
        for j, ids in enumerate(self.level_ids):
            for i in ids:
                out[j, list(self.cubes[i].members)] = i
        out.setflags(write=False)
        return out

    @cached_property
    def cube_generation(self) -> np.ndarray:
        return np.array([q.generation for q in self.cubes], dtype=int)

    @cached_property
    def cube_level(self) -> np.ndarray:
        out = np.empty(len(self.cubes), dtype=int)
        for j, ids in enumerate(self.level_ids):
            out[list(ids)] = j
        return out

    def cube_measure(self, weight=None) -> np.ndarray:
        m = self.space.mass if weight is None else self.space.mass * np.asarray(weight, dtype=float)
        return self.cube_matrix().astype(float) @ m

    def level_of_generation(self, k: int) -> int:
        try:
            return self.generations.index(int(k))
        except ValueError:
            raise ValueError(f"generation {k} not in grid ({self.bottom_generation}..{self.top_generation})") from None


def _measured_cd(grid: DyadicGrid) -> float:
    d = grid.space.dist
    worst = 0.0
    for q in grid.cubes:
        r = float(d[q.center, list(q.members)].max())
        worst = max(worst, r / grid.d0**q.generation)
    # outer balls are open, so the constant must sit strictly above the ratio
    return max(1.0, _ulp_up(worst))


def _measured_eps(grid: DyadicGrid) -> float:
    mu = grid.cube_measure()
    best = 1.0
    for q in grid.cubes:
        if q.parent is not None:
            best = min(best, mu[q.id] / mu[q.parent])
    return float(best)


def default_d0(space: FiniteSpace) -> float:
    a0 = space.a0_declared if space.a0_declared is not None else quasimetric_constant(space)
    return max(2.0, 8.0 * a0 * a0)


def _medoid(space: FiniteSpace) -> int:
    return int(np.argmin(space.dist @ space.mass))


def _top_scale(space: FiniteSpace, d0: float) -> float:
    """Smallest power of d0 strictly above the diameter."""
    if space.n == 1:
        return 1.0
    S = d0 ** math.ceil(math.log(space.diameter, d0))
    while S <= space.diameter:
        S *= d0
    while S / d0 > space.diameter:
        S /= d0
    return S


def build_grid(
    space: FiniteSpace,
    d0: Optional[float] = None,
    seed: int = 0,
    top: Optional[int] = None,
    scale: Optional[float] = None,
) -> DyadicGrid:
    """Nested-net dyadic grid.

    ``top`` defaults to the mass-weighted medoid and ``scale`` (the level-0
    separation) to the smallest power of d0 above the diameter.
    """
    d0 = default_d0(space) if d0 is None else float(d0)
    if not d0 > 1:
        raise ValueError("d0 must exceed 1")
    n = space.n
    dist = space.dist
    rank = np.random.default_rng(seed).permutation(n)
    top = _medoid(space) if top is None else int(top)
    order = np.lexsort((rank, dist[top]))

    S = _top_scale(space, d0) if scale is None else float(scale)
    if not S > 0:
        raise ValueError("scale must be positive")
    first = np.full(n, -1, dtype=int)
    first[top] = 0
    nets = [np.array([top])]
    parent = np.full(n, -1, dtype=int)
    j = 0
    while len(nets[-1]) < n:
        j += 1
        sep = S * d0 ** (-j)
        if j > 4000:
            raise GridConstructionError(f"nets failed to exhaust the space at separation {sep:.3g}")
        net = list(nets[-1])
        for x in order:
            if first[x] >= 0:
                continue
            if dist[x, net].min() >= sep:
                net.append(int(x))
                first[x] = j
        prev = nets[-1]
        for x in net[len(prev):]:
            dp = dist[x, prev]
            cand = prev[dp == dp.min()]
            parent[x] = int(cand[np.argmin(rank[cand])])
        nets.append(np.asarray(net, dtype=int))
    L = len(nets)

    # ancestor of every point at every level
    anc = np.empty((L, n), dtype=int)
    for x in range(n):
        y = x
        for lv in range(L - 1, -1, -1):
            while first[y] > lv:
                y = parent[y]
            anc[lv, x] = y
    levels = []
    rho = []
    for lv in range(L):
        row = []
        r = math.inf
        for c in nets[lv]:
            inside = anc[lv] == c
            row.append((int(c), np.flatnonzero(inside).tolist()))
            if not inside.all():
                r = min(r, float(dist[c, ~inside].min()))
        levels.append(row)
        rho.append(r)
    K = None
    for lv, r in enumerate(rho):
        if math.isinf(r):
            continue
        kk = math.floor(math.log(r, d0)) + 1
        while d0**kk > r:
            kk -= 1
        kk += lv
        K = kk if K is None else min(K, kk)
    if K is None:
        K = L - 1
    gens = [K - lv for lv in range(L)]
    grid = DyadicGrid.from_levels(space, levels, gens, d0, seed)
    return grid


@dataclass(frozen=True)
class GridReport:
    partition: bool
    nested: bool
    parents: bool
    child_mass: bool
    sandwich: bool
    achieved_Cd: float
    achieved_eps: float
    witnesses: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.partition and self.nested and self.parents and self.child_mass and self.sandwich


def verify_grid(space: FiniteSpace, grid: DyadicGrid) -> GridReport:
    """Exhaustive check of the five grid properties; constants recomputed from scratch."""
    wit = {}
    n = space.n
    cubes = grid.cubes
    mu = np.array([space.mass[list(q.members)].sum() if q.members else 0.0 for q in cubes])

    partition = True
    for j, ids in enumerate(grid.level_ids):
        count = np.zeros(n, dtype=int)
        for i in ids:
            if not cubes[i].members:
                partition = False
                wit.setdefault("partition", ("empty cube", i))
            count[list(cubes[i].members)] += 1
        bad = np.flatnonzero(count != 1)
        if bad.size:
            partition = False
            wit.setdefault("partition", ("point covered %d times at level %d" % (count[bad[0]], j), int(bad[0])))

    nested = True
    for a in cubes:
        for b in cubes:
            if b.id <= a.id:
                continue
            s, t = a.members, b.members
            if s & t and not (s <= t or t <= s):
                nested = False
                wit.setdefault("nested", (a.id, b.id, min(s ^ t)))

    parents = True
    for j, ids in enumerate(grid.level_ids):
        for i in ids:
            q = cubes[i]
            if j > 0:
                holders = [p for p in grid.level_ids[j - 1] if q.members <= cubes[p].members]
                if len(holders) != 1 or q.parent != holders[0]:
                    parents = False
                    wit.setdefault("parents", ("bad parent", i))
            if j < grid.n_levels - 1:
                kids = [c for c in grid.level_ids[j + 1] if cubes[c].members <= q.members]
                if not kids:
                    parents = False
                    wit.setdefault("parents", ("no child", i))

    eps = 1.0
    child_mass = True
    for q in cubes:
        if q.parent is None or mu[q.parent] == 0:
            continue
        r = mu[q.id] / mu[q.parent]
        eps = min(eps, r)
        if r < grid.achieved_eps:
            child_mass = False
            wit.setdefault("child_mass", (q.id, r))

    sandwich = True
    cd = 0.0
    for q in cubes:
        rad = grid.d0**q.generation
        d = space.dist[q.center]
        inner = set(np.flatnonzero(d < rad).tolist())
        if q.center not in q.members:
            sandwich = False
            wit.setdefault("sandwich", ("center outside cube", q.id, q.center))
        if not inner <= q.members:
            sandwich = False
            wit.setdefault("sandwich", ("inner ball escapes", q.id, min(inner - q.members)))
        if q.members:
            far = max(q.members, key=lambda x: d[x])
            cd = max(cd, d[far] / rad)
            if not d[far] < grid.achieved_Cd * rad:
                sandwich = False
                wit.setdefault("sandwich", ("outside outer ball", q.id, int(far)))
    cd = max(1.0, _ulp_up(cd))
    return GridReport(partition, nested, parents, child_mass, sandwich, float(cd), float(eps), wit)


@dataclass(frozen=True)
class AdjacentFamily:
    grids: tuple
    # max over balls B of the best mu(Q)/mu(B) with Q a cube of some grid, Q >= B
    covering_factor: float
    witness_ball: int


def covering_factor(space: FiniteSpace, grids: Sequence[DyadicGrid]) -> tuple[float, int]:
    fam = space.balls
    best = np.full(len(fam), np.inf)
    B = fam.members.astype(float)
    for g in grids:
        C = g.cube_matrix()
        contains = B @ (~C).T.astype(float) == 0  # balls x cubes: B <= Q
        muq = g.cube_measure()
        ratio = np.where(contains, muq[None, :] / fam.measures[:, None], np.inf)
        best = np.minimum(best, ratio.min(axis=1))
    b = int(np.argmax(best))
    return float(best[b]), b


def adjacent_family(space: FiniteSpace, count: int, seeds: Optional[Sequence[int]] = None, d0: Optional[float] = None) -> AdjacentFamily:
    """``count`` grids with shifted top centers and distinct seeds.

    Grid ``i`` is rooted at the point whose distance from the medoid is
    closest to ``i * s / count``, with ``s`` the first nontrivial net
    separation; the shift moves the coarse nets the way translated grids do
    on Euclidean space.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    seeds = list(range(count)) if seeds is None else [int(s) for s in seeds]
    if len(seeds) != count:
        raise ValueError("need one seed per grid")
    d0 = default_d0(space) if d0 is None else float(d0)
    base = build_grid(space, d0, seeds[0])
    grids = [base]
    if count > 1:
        m = _medoid(space)
        j = next((j for j, ids in enumerate(base.level_ids) if len(ids) > 1), 1)
        step = _top_scale(space, d0) * d0 ** (-j) / count
        dm = space.dist[m]
        for i in range(1, count):
            top = int(np.argmin(np.abs(dm - i * step)))
            grids.append(build_grid(space, d0, seeds[i], top=top))
    cf, b = covering_factor(space, grids)
    return AdjacentFamily(tuple(grids), cf, b)
