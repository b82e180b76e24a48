"""Exponent functions p(.) on a finite space and their log-Hoelder diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .space import FiniteSpace

__all__ = [
    "ExponentFunction",
    "p_extrema",
    "conjugate",
    "partition_sets",
    "lh0_constant",
    "lhinf_constant",
    "oscillation_bound_scan",
    "constant_exponent",
    "ramp_exponent",
    "sinusoid_exponent",
    "step_exponent",
    "generate_exponent",
]


class ExponentError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ExponentFunction:
    """Per-point exponents in ``[1, inf]`` (``np.inf`` is the infinity sentinel).

    ``p_inf`` is the limiting value used by the LH_inf condition and
    ``base_point`` the point it is measured from.
    """

    values: np.ndarray
    p_inf: Optional[float] = None
    base_point: int = 0

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size == 0:
            raise ExponentError("empty exponent")
        if np.any(np.isnan(v)) or np.any(v < 1):
            raise ExponentError("exponent values must lie in [1, inf]")
        if not 0 <= self.base_point < v.size:
            raise ExponentError("base point out of range")
        if self.p_inf is not None and not self.p_inf >= 1:
            raise ExponentError("p_inf must be >= 1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_dual", None)

    def __len__(self):
        return self.values.size

    @property
    def p_minus(self) -> float:
        return float(self.values.min())

    @property
    def p_plus(self) -> float:
        return float(self.values.max())

    @property
    def bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def with_base(self, base_point: int, p_inf: Optional[float] = None) -> "ExponentFunction":
        return ExponentFunction(self.values, self.p_inf if p_inf is None else p_inf, base_point)

    def conjugate(self) -> "ExponentFunction":
        return conjugate(self)


def _require_bounded(p: ExponentFunction):
    if not p.bounded:
        raise ExponentError("operation needs p_+ < inf")


def p_extrema(p: ExponentFunction, region: Optional[Iterable[int]] = None) -> tuple[float, float]:
    v = p.values
    if region is not None:
        idx = np.fromiter((int(i) for i in region), dtype=int)
        if idx.size == 0:
            raise ExponentError("empty region")
        v = v[idx]
    return float(v.min()), float(v.max())


def _conj_values(v):
    out = np.empty_like(v)
    one = v == 1
    inf = np.isinf(v)
    mid = ~(one | inf)
    out[one] = np.inf
    out[inf] = 1.0
    out[mid] = v[mid] / (v[mid] - 1.0)
    return out


def conjugate(p: ExponentFunction) -> ExponentFunction:
    """Pointwise p/(p-1) with 1 <-> inf.

    The result remembers its source so that conjugating twice returns the
    original values bit for bit.
    """
    if p._dual is not None:
        return p._dual
    pinf = None if p.p_inf is None else float(_conj_values(np.array([p.p_inf]))[0])
    q = ExponentFunction(_conj_values(p.values), pinf, p.base_point)
    object.__setattr__(q, "_dual", p)
    object.__setattr__(p, "_dual", q)
    return q


def partition_sets(p: ExponentFunction) -> tuple[frozenset, frozenset, frozenset]:
    """(X_1, X_inf, X_*): points with p = 1, p = inf, and 1 < p < inf."""
    v = p.values
    one = frozenset(np.flatnonzero(v == 1).tolist())
    inf = frozenset(np.flatnonzero(np.isinf(v)).tolist())
    star = frozenset(np.flatnonzero((v > 1) & np.isfinite(v)).tolist())
    return one, inf, star


def lh0_constant(space: FiniteSpace, p: ExponentFunction) -> float:
    """max over pairs with 0 < d < 1/2 of |p(x) - p(y)| * log(1/d)."""
    _require_bounded(p)
    d = space.dist
    mask = (d > 0) & (d < 0.5)
    if not mask.any():
        return 0.0
    v = p.values
    gap = np.abs(v[:, None] - v[None, :])
    return float((gap[mask] * -np.log(d[mask])).max())


def lhinf_constant(space: FiniteSpace, p: ExponentFunction, p_inf: Optional[float] = None, base_point: Optional[int] = None) -> float:
    """max over x of |p(x) - p_inf| * log(e + d(x0, x))."""
    _require_bounded(p)
    x0 = p.base_point if base_point is None else base_point
    pinf = p.p_inf if p_inf is None else p_inf
    if pinf is None:
        pinf = default_p_inf(space, p.values, x0)
    return float((np.abs(p.values - pinf) * np.log(math.e + space.dist[x0])).max())


def default_p_inf(space: FiniteSpace, values, base_point: int) -> float:
    """Exponent value at the point farthest from the base point (lowest index on ties)."""
    return float(np.asarray(values)[int(np.argmax(space.dist[base_point]))])


def oscillation_bound_scan(space: FiniteSpace, p: ExponentFunction) -> tuple[float, frozenset]:
    """max over canonical balls of mu(B)^(p_-(B) - p_+(B)) and the attaining ball."""
    _require_bounded(p)
    fam = space.balls
    v = p.values
    pmax = np.where(fam.members, v[None, :], -np.inf).max(axis=1)
    pmin = np.where(fam.members, v[None, :], np.inf).min(axis=1)
    vals = fam.measures ** (pmin - pmax)
    b = int(np.argmax(vals))
    return float(vals[b]), fam.ball(b)


# --------------------------------------------------------------------------
# generators


def constant_exponent(space: FiniteSpace, value: float, base_point: int = 0) -> ExponentFunction:
    return ExponentFunction(np.full(space.n, float(value)), float(value), base_point)


def ramp_exponent(space: FiniteSpace, p_inf: float, c: float, base_point: int = 0) -> ExponentFunction:
    """p(x) = p_inf + c / log(e + d(x0, x)); LH with C_inf = |c|."""
    v = p_inf + c / np.log(math.e + space.dist[base_point])
    return ExponentFunction(v, float(p_inf), base_point)


def sinusoid_exponent(space: FiniteSpace, center: float, amplitude: float, frequency: float = 1.0, phase: float = 0.0, base_point: int = 0) -> ExponentFunction:
    """p(x) = center + amplitude * sin(2 pi frequency d(x0, x) + phase).

    Lipschitz in the distance to the base point, hence LH_0 with constant
    of order ``amplitude * frequency``.
    """
    if center - abs(amplitude) < 1:
        raise ExponentError("sinusoid dips below 1")
    v = center + amplitude * np.sin(2 * math.pi * frequency * space.dist[base_point] + phase)
    return ExponentFunction(v, default_p_inf(space, v, base_point), base_point)


def step_exponent(space: FiniteSpace, low: float, high: float, threshold: float, base_point: int = 0) -> ExponentFunction:
    """Jump from ``low`` to ``high`` at distance ``threshold`` from the base point (not LH_0)."""
    v = np.where(space.dist[base_point] < threshold, float(low), float(high))
    return ExponentFunction(v, float(high), base_point)


def generate_exponent(space: FiniteSpace, spec: dict) -> ExponentFunction:
    spec = dict(spec)
    kind = spec.pop("kind")
    x0 = int(spec.pop("base_point", 0))
    if kind == "constant":
        return constant_exponent(space, spec["value"], x0)
    if kind == "ramp":
        return ramp_exponent(space, spec["p_inf"], spec["c"], x0)
    if kind == "sinusoid":
        return sinusoid_exponent(space, spec["center"], spec["amplitude"], spec.get("frequency", 1.0), spec.get("phase", 0.0), x0)
    if kind == "step":
        return step_exponent(space, spec["low"], spec["high"], spec["threshold"], x0)
    raise ExponentError(f"unknown exponent kind {kind!r}")
