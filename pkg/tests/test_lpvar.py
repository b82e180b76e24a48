import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from homtype.exponents import ExponentFunction
from homtype.lpvar import (
    holder_pairing,
    luxemburg_norm,
    luxemburg_norms,
    modular,
    norm_modular_bridge,
    transfer_inequality_check,
)
from homtype.space import euclidean_grid, explicit


def two_points(m=(1.0, 1.0)):
    return explicit(np.array([[0.0, 1.0], [1.0, 0.0]]), m)


def test_golden_ratio():
    # lam solves 1/lam + 1/lam^2 = 1
    s = two_points()
    got = luxemburg_norm(s, ExponentFunction([1.0, 2.0]), [1.0, 1.0])
    assert abs(got - (1 + math.sqrt(5)) / 2) <= 1e-8


@pytest.mark.parametrize("a,b", [(3.0, 1.0), (1.0, 3.0), (0.5, 4.0), (2.0, 2.0)])
def test_mixed_two_point_closed_form(a, b):
    # p = (2, inf), f = (a, b), unit masses: the modular adds the sup part, so
    # lam solves a^2/lam^2 + b/lam = 1 whenever b/lam <= 1
    s = two_points()
    p = ExponentFunction([2.0, np.inf])
    lam = (b + math.sqrt(b * b + 4 * a * a)) / 2
    assert luxemburg_norm(s, p, [a, b]) == pytest.approx(lam, abs=1e-8)


def test_mixed_example_value():
    s = two_points()
    got = luxemburg_norm(s, ExponentFunction([2.0, np.inf]), [1.0, 3.0])
    assert got == pytest.approx((3 + math.sqrt(13)) / 2, abs=1e-8)
    assert got == pytest.approx(3.3028, abs=1e-4)


@pytest.mark.parametrize("q", [1.0, 1.5, 2.0, 4.0])
def test_constant_exponent_matches_classical(q):
    s = euclidean_grid(1, 32, 1 / 32, "density")
    rng = np.random.default_rng(int(q * 10))
    F = rng.normal(size=(50, s.n)) * rng.uniform(0.01, 100, (50, 1))
    got = luxemburg_norms(s, ExponentFunction(np.full(s.n, q)), F)
    want = ((np.abs(F) ** q) @ s.mass) ** (1 / q)
    assert np.max(np.abs(got - want) / np.maximum(1, want)) <= 1e-9


def test_infinity_exponent_is_sup():
    s = euclidean_grid(1, 5)
    f = np.array([0.2, -3.0, 1.0, 0.0, 2.0])
    assert luxemburg_norm(s, ExponentFunction(np.full(5, np.inf)), f) == pytest.approx(3.0, abs=1e-9)


def test_zero_function():
    s = euclidean_grid(1, 4)
    assert luxemburg_norm(s, ExponentFunction([1.5, 2, 3, 4]), np.zeros(4)) == 0.0


@given(st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_unity_and_homogeneity(seed):
    rng = np.random.default_rng(seed)
    s = euclidean_grid(1, 12, 0.1, "density")
    p = ExponentFunction(rng.uniform(1, 8, s.n))
    f = rng.normal(size=s.n) * 10 ** rng.uniform(-3, 3)
    nrm = luxemburg_norm(s, p, f)
    assert abs(modular(s, p, f / nrm) - 1) <= 1e-6
    c = rng.uniform(0.1, 10)
    assert luxemburg_norm(s, p, c * f) == pytest.approx(c * nrm, rel=1e-8)


@given(st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    s = euclidean_grid(1, 10)
    p = ExponentFunction(rng.uniform(1, 5, s.n))
    f, g = rng.normal(size=(2, s.n))
    assert luxemburg_norm(s, p, f + g) <= (luxemburg_norm(s, p, f) + luxemburg_norm(s, p, g)) * (1 + 1e-8)


def test_holder_with_infinite_exponents():
    s = euclidean_grid(1, 6)
    rng = np.random.default_rng(0)
    p = ExponentFunction([1.0, 1.0, 2.0, 3.0, np.inf, np.inf])
    for _ in range(50):
        f, g = rng.normal(size=(2, 6))
        lhs, rhs = holder_pairing(s, p, f, g)
        assert lhs <= rhs


def test_bridge_report():
    s = euclidean_grid(1, 8, 0.1, "density")
    rng = np.random.default_rng(4)
    for scale in (1e-3, 1.0, 1e3):
        rep = norm_modular_bridge(s, ExponentFunction(rng.uniform(1.2, 4, 8)), scale * rng.random(8))
        assert rep.all_ok
    with pytest.raises(ValueError):
        norm_modular_bridge(s, ExponentFunction(np.full(8, np.inf)), np.ones(8))


def test_transfer_inequality():
    s = euclidean_grid(1, 20)
    rng = np.random.default_rng(1)
    sv = ExponentFunction(1.5 + 0.5 / np.log(math.e + s.dist[0]))
    rv = ExponentFunction(np.full(20, 1.5))
    for _ in range(20):
        f = rng.random(20)
        rep = transfer_inequality_check(s, 0, sv, rv, 1.0, f)
        assert rep.holds
        assert rep.variant == "two-sided"
    up = transfer_inequality_check(s, 0, rv, sv, 2.0, 10 * rng.random(20))
    assert up.variant == "one-sided" and up.holds
    with pytest.raises(ValueError):
        transfer_inequality_check(s, 0, sv, rv, 0.5, np.ones(20))
    with pytest.raises(ValueError):
        transfer_inequality_check(s, 0, sv, rv, 1.0, np.ones(20), c0=1e-6)
