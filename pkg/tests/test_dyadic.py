import numpy as np
import pytest

from homtype.dyadic import DyadicGrid, adjacent_family, build_grid, covering_factor, default_d0, verify_grid
from homtype.space import cantor, euclidean_grid, explicit, power_metric


def test_eight_point_line():
    s = euclidean_grid(1, 8)
    g = build_grid(s, d0=2, seed=0)
    assert g.generations == (1, 0, -1, -2)
    assert [len(ids) for ids in g.level_ids] == [1, 2, 4, 8]
    assert verify_grid(s, g).passed


@pytest.mark.parametrize(
    "space",
    [euclidean_grid(1, 16), euclidean_grid(2, 5, 0.2, "density"), power_metric(12, 2.0), cantor(3)],
    ids=["line", "square", "power", "cantor"],
)
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_verify_passes(space, seed):
    g = build_grid(space, seed=seed)
    rep = verify_grid(space, g)
    assert rep.passed, rep.witnesses
    assert rep.achieved_Cd <= g.achieved_Cd
    assert rep.achieved_eps == pytest.approx(g.achieved_eps)
    assert 0 < g.achieved_eps <= 1


def brute_partition_ok(space, grid):
    for ids in grid.level_ids:
        seen = []
        for i in ids:
            seen.extend(grid.cubes[i].members)
        if sorted(seen) != list(range(space.n)):
            return False
    return True


def test_levels_partition_brute():
    s = euclidean_grid(1, 20)
    g = build_grid(s, seed=4)
    assert brute_partition_ok(s, g)
    assert len(g.level_ids[0]) == 1
    assert all(len(g.cubes[i].members) == 1 for i in g.level_ids[-1])


def _levels(grid):
    return [[(grid.cubes[i].center, sorted(grid.cubes[i].members)) for i in ids] for ids in grid.level_ids]


def test_moving_a_point_is_detected():
    s = euclidean_grid(1, 8)
    g = build_grid(s, d0=2, seed=0)
    lv = _levels(g)
    # move one point between the two cubes of level 1 without touching finer levels
    (c0, m0), (c1, m1) = lv[1]
    x = m0[-1] if m0[-1] != c0 else m0[0]
    lv[1] = [(c0, [y for y in m0 if y != x]), (c1, sorted(m1 + [x]))]
    bad = DyadicGrid.from_levels(s, lv, g.generations, g.d0)
    rep = verify_grid(s, bad)
    assert not rep.passed
    assert not (rep.nested and rep.parents)


def test_missing_point_is_detected():
    s = euclidean_grid(1, 8)
    g = build_grid(s, d0=2)
    lv = _levels(g)
    lv[-1] = lv[-1][:-1]
    rep = verify_grid(s, DyadicGrid.from_levels(s, lv, g.generations, g.d0))
    assert not rep.partition
    assert "partition" in rep.witnesses


def test_tight_constant_is_detected():
    s = euclidean_grid(1, 8)
    g = build_grid(s, d0=2)
    tight = DyadicGrid.from_levels(s, _levels(g), g.generations, g.d0, achieved_Cd=1.0, achieved_eps=g.achieved_eps)
    assert not verify_grid(s, tight).sandwich


def test_one_point_space():
    s = explicit(np.zeros((1, 1)), [1.0])
    g = build_grid(s)
    assert g.n_levels == 1 and verify_grid(s, g).passed
    fam = adjacent_family(s, 1)
    assert fam.covering_factor == 1.0


def test_trivial_single_level_grid():
    s = euclidean_grid(1, 3)
    g = DyadicGrid.from_levels(s, [[(1, [0, 1, 2])]], [1], 2.0)
    rep = verify_grid(s, g)
    assert rep.passed
    assert rep.achieved_eps == 1.0


def test_determinism_and_seeds():
    s = euclidean_grid(2, 6)
    a, b = build_grid(s, seed=3), build_grid(s, seed=3)
    assert [q.members for q in a.cubes] == [q.members for q in b.cubes]
    assert a.generations == b.generations


def test_labels_and_cube_matrix_agree():
    s = power_metric(10, 1.5)
    g = build_grid(s, seed=1)
    C = g.cube_matrix()
    L = g.labels
    for j in range(g.n_levels):
        for x in range(s.n):
            assert C[L[j, x], x]
            assert g.cube_level[L[j, x]] == j


def test_default_d0():
    assert default_d0(euclidean_grid(1, 4)) == 8.0
    assert default_d0(power_metric(6, 2.0)) == 32.0


def test_adjacent_family_covering():
    s = euclidean_grid(1, 32, 1 / 32, "density")
    fam = adjacent_family(s, 3)
    assert len(fam.grids) == 3
    for g in fam.grids:
        assert verify_grid(s, g).passed
    cf, b = covering_factor(s, fam.grids)
    assert cf == fam.covering_factor and b == fam.witness_ball
    one, _ = covering_factor(s, fam.grids[:1])
    assert cf <= one
    # the whole space is always a cube containing every ball
    assert cf <= s.total_mass / s.balls.measures.min() + 1e-12


def test_adjacent_family_argument_errors():
    s = euclidean_grid(1, 4)
    with pytest.raises(ValueError):
        adjacent_family(s, 0)
    with pytest.raises(ValueError):
        adjacent_family(s, 2, seeds=[1])
