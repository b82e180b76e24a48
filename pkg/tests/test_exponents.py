import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from homtype.exponents import (
    ExponentError,
    ExponentFunction,
    conjugate,
    constant_exponent,
    generate_exponent,
    lh0_constant,
    lhinf_constant,
    oscillation_bound_scan,
    p_extrema,
    partition_sets,
    ramp_exponent,
    sinusoid_exponent,
    step_exponent,
)
from homtype.space import euclidean_grid


def test_rejects_values_below_one():
    with pytest.raises(ExponentError):
        ExponentFunction([0.5, 2.0])
    with pytest.raises(ExponentError):
        ExponentFunction([np.nan])


def test_conjugate_endpoints():
    p = ExponentFunction([1.0, 2.0, 3.0, np.inf])
    q = conjugate(p)
    assert q.values[0] == np.inf and q.values[1] == 2.0 and q.values[2] == 1.5 and q.values[3] == 1.0


@given(st.lists(st.floats(min_value=1.0, max_value=50.0), min_size=1, max_size=20))
@settings(max_examples=200, deadline=None)
def test_double_conjugate_is_identity(vals):
    p = ExponentFunction(vals)
    assert np.array_equal(conjugate(conjugate(p)).values, p.values)
    q = conjugate(p)
    fin = np.isfinite(q.values) & (p.values > 1)
    assert np.allclose(1 / p.values[fin] + 1 / q.values[fin], 1.0)


def test_partition_sets():
    p = ExponentFunction([1.0, 2.0, np.inf, 1.0])
    one, inf, star = partition_sets(p)
    assert one == {0, 3} and inf == {2} and star == {1}


def test_extrema_on_region():
    p = ExponentFunction([1.5, 3.0, 2.0])
    assert p_extrema(p) == (1.5, 3.0)
    assert p_extrema(p, [1, 2]) == (2.0, 3.0)


def test_ramp_has_lhinf_constant_c():
    s = euclidean_grid(1, 40)
    p = ramp_exponent(s, 2.0, 0.7)
    assert lhinf_constant(s, p) == pytest.approx(0.7, rel=1e-12)


def test_constant_exponent_lh_zero():
    s = euclidean_grid(1, 10, 0.1)
    p = constant_exponent(s, 3.0)
    assert lh0_constant(s, p) == 0.0
    assert lhinf_constant(s, p) == 0.0
    osc, _ = oscillation_bound_scan(s, p)
    assert osc == 1.0


def test_lh0_brute_force():
    s = euclidean_grid(1, 12, 0.05)
    p = sinusoid_exponent(s, 2.5, 0.5, 2.0)
    brute = 0.0
    for x in range(s.n):
        for y in range(s.n):
            d = s.dist[x, y]
            if 0 < d < 0.5:
                brute = max(brute, abs(p.values[x] - p.values[y]) * math.log(1 / d))
    assert lh0_constant(s, p) == pytest.approx(brute)


def test_step_exponent_lh0_grows_with_refinement():
    vals = []
    for n in (16, 32, 64):
        s = euclidean_grid(1, n, 1.0 / n)
        vals.append(lh0_constant(s, step_exponent(s, 1.5, 3.0, 0.5)))
    assert vals[0] < vals[1] < vals[2]


def test_oscillation_bound_brute_force():
    s = euclidean_grid(1, 8, 0.125, "density")
    p = ramp_exponent(s, 2.0, 1.0)
    osc, b = oscillation_bound_scan(s, p)
    fam = s.balls
    brute = max(
        fam.measures[i] ** (p.values[fam.members[i]].min() - p.values[fam.members[i]].max()) for i in range(len(fam))
    )
    assert osc == pytest.approx(brute)
    assert osc >= 1.0


def test_generate_exponent_dispatch():
    s = euclidean_grid(1, 5)
    assert generate_exponent(s, {"kind": "constant", "value": 2}).p_plus == 2
    assert generate_exponent(s, {"kind": "step", "low": 1.2, "high": 2, "threshold": 2}).p_minus == 1.2
    with pytest.raises(ExponentError):
        generate_exponent(s, {"kind": "nope"})
    with pytest.raises(ExponentError):
        sinusoid_exponent(s, 1.2, 0.5)
