"""Weights, the A_{p(.)} constant on balls and cubes, and A_inf-type diagnostics.

A weight is a plain float array of strictly positive values aligned with the
space's points.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exponents import ExponentFunction, conjugate, default_p_inf
from .lpvar import DEFAULT_TOL, luxemburg_norms
from .space import FiniteSpace, doubling_constant

__all__ = [
    "check_weight",
    "derived_weights",
    "power_weight",
    "step_weight",
    "lognormal_weight",
    "generate_weight",
    "apq_constant",
    "apq_on_sets",
    "apq_constant_dyadic",
    "classical_ap_constant",
    "subset_samples",
    "ainfty_diagnostics",
    "normbound_check",
    "fracexp_check",
    "norm_vs_Wmeasure_check",
    "unit_weight_constant",
    "ApqResult",
    "AinftyReport",
]


class WeightError(ValueError):
    pass


def check_weight(w, n: Optional[int] = None) -> np.ndarray:
    w = np.asarray(w, dtype=float).reshape(-1)
    if n is not None and w.size != n:
        raise WeightError(f"weight has {w.size} values, space has {n} points")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise WeightError("weights must be strictly positive and finite")
    return w


def _bounded_conj(p: ExponentFunction):
    if not p.bounded or p.p_minus <= 1:
        raise WeightError("needs 1 < p_- <= p_+ < inf")
    return conjugate(p)


def derived_weights(p: ExponentFunction, w) -> tuple[np.ndarray, np.ndarray]:
    """(W, sigma) = (w^p, w^-p')."""
    q = _bounded_conj(p)
    w = check_weight(w, len(p))
    return w ** p.values, w ** (-q.values)


def power_weight(space: FiniteSpace, exponent: float, base_point: int = 0) -> np.ndarray:
    """w(x) = max(d(x0, x), delta/2)^a with delta the smallest positive distance from x0.

    The floor keeps the weight finite and positive at the base point; on a
    regular grid it is the distance from a cell center to its edge.
    """
    d = space.dist[base_point]
    pos = d[d > 0]
    floor = 0.5 * pos.min() if pos.size else 1.0
    return np.maximum(d, floor) ** float(exponent)


def step_weight(space: FiniteSpace, low: float, high: float, threshold: float, base_point: int = 0) -> np.ndarray:
    """Two-level weight: ``low`` within ``threshold`` of the base point, ``high`` elsewhere."""
    return np.where(space.dist[base_point] < threshold, float(low), float(high))


def lognormal_weight(space: FiniteSpace, spread: float = 1.0, seed: int = 0) -> np.ndarray:
    """exp of uniform noise in [-spread, spread]: oscillation bounded by e^(2 spread)."""
    rng = np.random.default_rng(seed)
    return np.exp(rng.uniform(-spread, spread, space.n))


def generate_weight(space: FiniteSpace, spec: Optional[dict]) -> np.ndarray:
    spec = dict(spec or {"kind": "unit"})
    kind = spec.pop("kind")
    x0 = int(spec.get("base_point", 0))
    if kind == "unit":
        return np.ones(space.n)
    if kind == "power":
        return power_weight(space, float(spec["a"]), x0)
    if kind == "step":
        return step_weight(space, spec["low"], spec["high"], spec["threshold"], x0)
    if kind == "lognormal":
        return lognormal_weight(space, float(spec.get("spread", 1.0)), int(spec.get("seed", 0)))
    if kind == "values":
        from .files import load_function

        return check_weight(load_function(spec["path"]), space.n)
    raise WeightError(f"unknown weight kind {kind!r}")


@dataclass(frozen=True)
class ApqResult:
    constant: float
    witness: int
    ratios: np.ndarray = field(repr=False)
    norm_w: np.ndarray = field(repr=False)
    norm_winv: np.ndarray = field(repr=False)


def apq_on_sets(space: FiniteSpace, p: ExponentFunction, w, sets: np.ndarray, tol: float = DEFAULT_TOL) -> ApqResult:
    """max over the rows S of ``sets`` of ||w chi_S||_p ||w^-1 chi_S||_p' / mu(S)."""
    w = check_weight(w, space.n)
    q = conjugate(p)
    sets = np.asarray(sets, dtype=bool)
    nw = luxemburg_norms(space, p, sets * w[None, :], tol)
    ni = luxemburg_norms(space, q, sets / w[None, :], tol)
    ratios = nw * ni / (sets.astype(float) @ space.mass)
    b = int(np.argmax(ratios))
    return ApqResult(float(ratios[b]), b, ratios, nw, ni)


def apq_constant(space: FiniteSpace, p: ExponentFunction, w, balls=None, tol: float = DEFAULT_TOL) -> ApqResult:
    """[w]_{A_p(.)} over a ball family (default: every distinct ball of the space).

    ``witness`` indexes the attaining ball in ``space.balls`` (or in the
    supplied membership matrix).
    """
    if not p.bounded:
        raise WeightError("A_p(.) constant needs p_+ < inf")
    members = space.balls.members if balls is None else balls
    return apq_on_sets(space, p, w, members, tol)


def apq_constant_dyadic(grid, p: ExponentFunction, w, tol: float = DEFAULT_TOL) -> ApqResult:
    """Same product ratio over all cubes of the grid (rows of ``grid.cube_matrix()``)."""
    return apq_on_sets(grid.space, p, w, grid.cube_matrix(), tol)


def classical_ap_constant(space: FiniteSpace, v, p: float, sets=None) -> float:
    """sup_B (avg_B v)(avg_B v^(1 - p'))^(p - 1) for a constant p > 1."""
    v = check_weight(v, space.n)
    members = space.balls.members if sets is None else np.asarray(sets, dtype=bool)
    M = members.astype(float)
    mu = M @ space.mass
    a = (M @ (v * space.mass)) / mu
    pc = p / (p - 1)
    b = (M @ (v ** (1 - pc) * space.mass)) / mu
    return float((a * b ** (p - 1)).max())


# --------------------------------------------------------------------------
# (B, E subset of B) scans


def subset_samples(space: FiniteSpace, n_random: int = 32, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """(B rows, E rows): every ball paired with each sub-ball and ``n_random`` random subsets."""
    fam = space.balls.members
    rng = np.random.default_rng(seed)
    Bs, Es = [], []
    outside = ~fam
    for b in range(fam.shape[0]):
        sub = ~(fam & outside[b][None, :]).any(axis=1)
        for e in np.flatnonzero(sub):
            Bs.append(b)
            Es.append(fam[e])
        idx = np.flatnonzero(fam[b])
        for _ in range(n_random):
            pick = rng.random(idx.size) < 0.5
            if not pick.any():
                pick[rng.integers(idx.size)] = True
            row = np.zeros(space.n, dtype=bool)
            row[idx[pick]] = True
            Bs.append(b)
            Es.append(row)
    return fam[np.asarray(Bs, dtype=int)], np.asarray(Es, dtype=bool).reshape(-1, space.n)


@dataclass(frozen=True)
class AinftyReport:
    w_doubling: float
    # exponent -> smallest C with mu(E)/mu(B) <= C (W(E)/W(B))^eps
    c2_by_eps: dict
    # exponent -> smallest C with W(E)/W(B) <= C (mu(E)/mu(B))^delta
    c1_by_delta: dict
    best_eps: tuple
    best_delta: tuple


def ainfty_diagnostics(space: FiniteSpace, W, samples=None, p_plus: Optional[float] = None, grid: Sequence[float] = (0.5, 0.25, 0.125)) -> AinftyReport:
    W = check_weight(W, space.n)
    Bm, Em = subset_samples(space) if samples is None else samples
    Bf, Ef = Bm.astype(float), Em.astype(float)
    a = (Ef @ space.mass) / (Bf @ space.mass)
    wm = W * space.mass
    b = (Ef @ wm) / (Bf @ wm)
    exps = sorted(set(([1.0 / p_plus] if p_plus else []) + list(grid)), reverse=True)
    c2 = {e: float((a / b**e).max()) for e in exps}
    c1 = {e: float((b / a**e).max()) for e in exps}
    be = min(c2.items(), key=lambda kv: (kv[1], -kv[0]))
    bd = min(c1.items(), key=lambda kv: (kv[1], -kv[0]))
    return AinftyReport(doubling_constant(space.with_mass(wm)), c2, c1, be, bd)


def normbound_check(space: FiniteSpace, p: ExponentFunction, w, samples=None, tol: float = DEFAULT_TOL) -> float:
    """max over (B, E) of [mu(E)/mu(B)] / [||w chi_E||_p / ||w chi_B||_p]."""
    w = check_weight(w, space.n)
    Bm, Em = subset_samples(space) if samples is None else samples
    nb = luxemburg_norms(space, p, Bm * w[None, :], tol)
    ne = luxemburg_norms(space, p, Em * w[None, :], tol)
    frac = (Em.astype(float) @ space.mass) / (Bm.astype(float) @ space.mass)
    return float((frac * nb / ne).max())


def fracexp_check(space: FiniteSpace, p: ExponentFunction, w, tol: float = DEFAULT_TOL) -> tuple[float, int]:
    """max over balls of ||w chi_B||_p^(p_-(B) - p_+(B)) and the attaining ball index."""
    w = check_weight(w, space.n)
    fam = space.balls.members
    nb = luxemburg_norms(space, p, fam * w[None, :], tol)
    v = p.values
    gap = np.where(fam, v, np.inf).min(axis=1) - np.where(fam, v, -np.inf).max(axis=1)
    vals = nb**gap
    b = int(np.argmax(vals))
    return float(vals[b]), b


def norm_vs_Wmeasure_check(space: FiniteSpace, p: ExponentFunction, w, tol: float = DEFAULT_TOL) -> dict:
    """min/max of ||w chi_B||_p / W(B)^(1/p_inf) over balls with ||w chi_B||_p >= 1."""
    w = check_weight(w, space.n)
    fam = space.balls.members
    nb = luxemburg_norms(space, p, fam * w[None, :], tol)
    pinf = p.p_inf if p.p_inf is not None else default_p_inf(space, p.values, p.base_point)
    WB = fam.astype(float) @ (w ** p.values * space.mass)
    sel = nb >= 1
    if not sel.any():
        return {"count": 0, "min": None, "max": None}
    r = nb[sel] / WB[sel] ** (1.0 / pinf)
    return {"count": int(sel.sum()), "min": float(r.min()), "max": float(r.max())}


def unit_weight_constant(space: FiniteSpace, p: ExponentFunction, tol: float = DEFAULT_TOL) -> float:
    _bounded_conj(p)
    return apq_constant(space, p, np.ones(space.n), tol=tol).constant
