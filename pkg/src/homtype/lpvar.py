"""Modular, Luxemburg norm and the basic inequalities of L^{p(.)} on a finite space."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

from .exponents import ExponentFunction, conjugate
from .space import FiniteSpace

__all__ = [
    "modular",
    "modulars",
    "luxemburg_norm",
    "luxemburg_norms",
    "holder_pairing",
    "norm_modular_bridge",
    "transfer_inequality_check",
    "BridgeReport",
    "TransferReport",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-10
MAX_ITER = 200

Exponent = Union[ExponentFunction, np.ndarray]


def _pv(p) -> np.ndarray:
    return p.values if isinstance(p, ExponentFunction) else np.asarray(p, dtype=float)


def _mass(space) -> np.ndarray:
    return space.mass if isinstance(space, FiniteSpace) else np.asarray(space, dtype=float)


def _rho(A: np.ndarray, p: np.ndarray, mass: np.ndarray) -> np.ndarray:
    """Row-wise modular of nonnegative rows ``A``."""
    fin = np.isfinite(p)
    with np.errstate(over="ignore", invalid="ignore"):
        out = (np.power(A[:, fin], p[fin]) * mass[fin]).sum(axis=1)
    if not fin.all():
        out = out + A[:, ~fin].max(axis=1)
    return out


def modulars(space, p: Exponent, F) -> np.ndarray:
    F = np.atleast_2d(np.abs(np.asarray(F, dtype=float)))
    return _rho(F, _pv(p), _mass(space))


def modular(space, p: Exponent, f) -> float:
    """rho(f) = sum over finite-exponent points of |f|^p mu + max of |f| over X_inf."""
    return float(modulars(space, p, np.asarray(f, dtype=float)[None, :])[0])


def luxemburg_norms(space, p: Exponent, F, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Luxemburg norm of every row of ``F`` by bisection on lambda.

    A row stops once its bracket is narrower than ``tol * min(1, hi)``,
    which is the absolute tolerance ``tol`` for norms >= 1 and a relative
    one below that.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    A = np.atleast_2d(np.abs(np.asarray(F, dtype=float)))
    pv = _pv(p)
    mass = _mass(space)
    k = A.shape[0]
    out = np.zeros(k)
    nz = np.flatnonzero(A.max(axis=1) > 0)
    if nz.size == 0:
        return out
    A = A[nz]

    def rho(rows, lam):
        return _rho(A[rows] / lam[:, None], pv, mass)

    m = _rho(A, pv, mass)
    supp = A > 0
    pmin = np.where(supp, pv[None, :], np.inf).min(axis=1)
    pmax = np.where(supp, pv[None, :], -np.inf).max(axis=1)
    # norm-modular sandwich, valid when p is bounded on the support
    usable = np.isfinite(pmax) & np.isfinite(m) & (m > 0)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        a = np.where(m <= 1, m ** (1 / pmin), m ** (1 / pmax))
        b = np.where(m <= 1, m ** (1 / pmax), m ** (1 / pmin))
    usable &= np.isfinite(a) & np.isfinite(b) & (a > 0)
    top = A.max(axis=1)
    lo = np.where(usable, a * (1 - 1e-9), top)
    hi = np.where(usable, b * (1 + 1e-9), top)
    rows = np.arange(A.shape[0])
    for _ in range(4 * 1100):
        bad = rho(rows, lo) <= 1
        if not bad.any():
            break
        lo = np.where(bad, lo / 2, lo)
    for _ in range(4 * 1100):
        bad = rho(rows, hi) > 1
        if not bad.any():
            break
        hi = np.where(bad, hi * 2, hi)
    active = rows
    for _ in range(MAX_ITER):
        width = hi[active] - lo[active]
        keep = width > tol * np.minimum(1.0, hi[active])
        mid = 0.5 * (lo[active] + hi[active])
        keep &= (mid > lo[active]) & (mid < hi[active])
        active = active[keep]
        if active.size == 0:
            break
        mid = 0.5 * (lo[active] + hi[active])
        ok = rho(active, mid) <= 1
        hi[active] = np.where(ok, mid, hi[active])
        lo[active] = np.where(ok, lo[active], mid)
    out[nz] = 0.5 * (lo + hi)
    return out


def luxemburg_norm(space, p: Exponent, f, tol: float = DEFAULT_TOL) -> float:
    """inf{lambda > 0 : rho(f / lambda) <= 1}."""
    return float(luxemburg_norms(space, p, np.asarray(f, dtype=float)[None, :], tol)[0])


def holder_pairing(space, p: ExponentFunction, f, g, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """(sum |f g| mu, 4 ||f||_p ||g||_p')."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    lhs = float((np.abs(f * g) * _mass(space)).sum())
    rhs = 4.0 * luxemburg_norm(space, p, f, tol) * luxemburg_norm(space, conjugate(p), g, tol)
    return lhs, rhs


@dataclass(frozen=True)
class BridgeReport:
    modular: float
    norm: float
    p_minus: float
    p_plus: float
    # modular <= C2 implies norm <= C1 with C1 = 1 (C2 <= 1) or C2^(1/p_-)
    c1_from_modular: float
    forward_ok: bool
    # norm <= C1 implies modular <= (C1 + 1)^p_+
    converse_bound: float
    converse_ok: bool
    # rho <= 1 iff norm <= 1
    unit_ok: bool
    # rho(f / ||f||) = 1
    unity_modular: float
    unity_ok: bool
    # ||f||^p_+ <= rho <= ||f||^p_- when ||f|| <= 1, reversed otherwise
    sandwich_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.forward_ok and self.converse_ok and self.unit_ok and self.unity_ok and self.sandwich_ok


def norm_modular_bridge(space, p: ExponentFunction, f, tol: float = DEFAULT_TOL, unity_tol: float = 1e-6) -> BridgeReport:
    pv = _pv(p)
    if not np.all(np.isfinite(pv)):
        raise ValueError("norm/modular bridge needs p_+ < inf")
    f = np.asarray(f, dtype=float)
    rho = modular(space, pv, f)
    nrm = luxemburg_norm(space, pv, f, tol)
    pm, pp = float(pv.min()), float(pv.max())
    slack = tol * max(1.0, nrm)

    c1 = 1.0 if rho <= 1 else rho ** (1.0 / pm)
    forward_ok = nrm <= c1 * (1 + 1e-9) + slack
    conv = (nrm + 1.0) ** pp
    converse_ok = rho <= conv * (1 + 1e-12)
    if rho <= 1:
        unit_ok = nrm <= 1 + slack
    else:
        unit_ok = nrm >= 1 - slack
    if nrm > 0:
        unity = modular(space, pv, f / nrm)
        unity_ok = abs(unity - 1.0) <= unity_tol
        r = 1 + 1e-8 * pp
        if nrm <= 1:
            sandwich_ok = nrm**pp <= rho * r and rho <= nrm**pm * r
        else:
            sandwich_ok = nrm**pm <= rho * r and rho <= nrm**pp * r
    else:
        unity, unity_ok, sandwich_ok = 0.0, rho == 0, rho == 0
    return BridgeReport(rho, nrm, pm, pp, c1, bool(forward_ok), conv, bool(converse_ok), bool(unit_ok), unity, bool(unity_ok), bool(sandwich_ok))


@dataclass(frozen=True)
class TransferReport:
    lhs: float
    rhs: float
    constant: float
    c0: float
    variant: str

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def transfer_inequality_check(
    space: FiniteSpace,
    x0: int,
    s: Exponent,
    r: Exponent,
    t: float,
    f,
    region: Optional[Iterable[int]] = None,
    c0: Optional[float] = None,
) -> TransferReport:
    """Both sides of sum_G |f|^s <= C sum_G |f|^r + sum_G (e + d(x0, .))^(-t s_-(G)), C = e^(c0 t).

    With r >= s on G any f is admitted (one-sided variant); otherwise the
    gap may have either sign but |f| <= 1 is required (two-sided variant).
    ``c0`` defaults to the smallest admissible gap constant.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    sv, rv = _pv(s), _pv(r)
    if not (np.all(np.isfinite(sv)) and np.all(np.isfinite(rv))):
        raise ValueError("transfer inequality needs finite exponents")
    G = np.arange(space.n) if region is None else np.asarray(sorted(set(int(i) for i in region)), dtype=int)
    if G.size == 0:
        raise ValueError("empty region")
    f = np.abs(np.asarray(f, dtype=float))[G]
    mu = space.mass[G]
    log_w = np.log(math.e + space.dist[x0, G])
    gap = rv[G] - sv[G]
    need = float((np.abs(gap) * log_w).max())
    if c0 is None:
        c0 = need
    elif need > c0 * (1 + 1e-12):
        raise ValueError(f"gap condition violated: needs C0 >= {need:.6g}")
    if np.all(gap >= 0):
        variant = "one-sided"
    elif np.all(f <= 1):
        variant = "two-sided"
    else:
        raise ValueError("r < s somewhere on the region and |f| > 1 somewhere: neither variant applies")
    C = math.exp(c0 * t)
    s_minus = float(sv[G].min())
    lhs = float((f ** sv[G] * mu).sum())
    rhs = float(C * (f ** rv[G] * mu).sum() + ((math.e + space.dist[x0, G]) ** (-t * s_minus) * mu).sum())
    return TransferReport(lhs, rhs, C, float(c0), variant)
