"""Experiment harness: strong/weak type ratios, the necessity witness, refinement scans."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dyadic import build_grid
from .exponents import ExponentFunction, conjugate, generate_exponent
from .lpvar import DEFAULT_TOL, luxemburg_norm, luxemburg_norms
from .operators import hl_maximal_many
from .space import FiniteSpace, generate_space
from .weights import apq_constant, check_weight, generate_weight

__all__ = [
    "ExperimentConfig",
    "RatioRow",
    "RatioReport",
    "NecessityWitness",
    "space_for_n",
    "build_family",
    "strong_type_ratio",
    "weak_type_ratio",
    "necessity_witness",
    "blowup_scan",
    "BlowupReport",
    "emit_report",
    "is_bounded",
    "is_diverging",
    "classify",
    "CSV_COLUMNS",
]

CSV_COLUMNS = ("n", "family", "f_id", "norm_Mfw", "norm_fw", "ratio", "apq")


@dataclass
class ExperimentConfig:
    space: dict = field(default_factory=lambda: {"kind": "euclidean_grid", "dim": 1, "mass": "density"})
    exponent: dict = field(default_factory=lambda: {"kind": "constant", "value": 2.0})
    weight: dict = field(default_factory=lambda: {"kind": "unit"})
    grid: dict = field(default_factory=lambda: {"d0": None, "seed": 0})
    family: dict = field(default_factory=lambda: {"balls": 64, "cubes": True, "random": 64, "density": 0.25, "witness": 16})
    refinements: list = field(default_factory=lambda: [16, 32, 64])
    tol: float = DEFAULT_TOL
    seed: int = 0
    bounded_factor: float = 1.25
    diverging_factor: float = 1.5
    # optional assertion: "bounded" / "diverging" (strong/weak) or a blowup class
    expect: Optional[str] = None
    necessity_balls: int = 16

    def __post_init__(self):
        r = [int(n) for n in self.refinements]
        if not r or any(b <= a for a, b in zip(r, r[1:])):
            raise ValueError("refinement sequence must be nonempty and strictly increasing")
        self.refinements = r

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(doc) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        base = cls()
        kw = {}
        for k, v in doc.items():
            default = getattr(base, k)
            kw[k] = {**default, **v} if isinstance(default, dict) and isinstance(v, dict) else v
        return cls(**kw)

    def to_dict(self) -> dict:
        return asdict(self)


def space_for_n(spec: dict, n: int) -> FiniteSpace:
    """Member of a refinement family with (about) ``n`` points.

    Grids of dimension ``dim`` get side ``round(n^(1/dim))`` and, unless
    ``refine`` is false, spacing ``1/side`` so the family refines a fixed cube.
    """
    spec = dict(spec)
    kind = spec["kind"]
    if kind in ("euclidean_grid", "power_metric"):
        dim = int(spec.get("dim", 1)) if kind == "euclidean_grid" else 1
        side = max(1, int(round(n ** (1.0 / dim))))
        spec["side"] = side
        if spec.pop("refine", True):
            spec["spacing"] = 1.0 / side
        spec.setdefault("mass", "density")
    elif kind == "cantor":
        spec["depth"] = max(1, int(round(math.log2(n))))
    return generate_space(spec)


# --------------------------------------------------------------------------
# necessity witness


@dataclass(frozen=True)
class NecessityWitness:
    f: np.ndarray = field(repr=False)
    ball: frozenset = field(repr=False)
    scale: float  # w is replaced by scale * w so that ||w^-1 chi_B||_p' = 1
    lam: float
    R: float
    G: float
    branch: str
    norm_fw: float
    norm_bound: float
    mf_min: float
    mf_bound: float

    @property
    def norm_ok(self) -> bool:
        return self.norm_fw <= self.norm_bound

    @property
    def mf_ok(self) -> bool:
        return self.mf_min >= self.mf_bound

    @property
    def ok(self) -> bool:
        return self.norm_ok and self.mf_ok


def _ball_rows(space: FiniteSpace, ball) -> np.ndarray:
    if isinstance(ball, (int, np.integer)):
        return space.balls.members[int(ball)].copy()
    row = np.zeros(space.n, dtype=bool)
    row[list(ball)] = True
    return row


def necessity_witness(space: FiniteSpace, p: ExponentFunction, w, ball, tol: float = DEFAULT_TOL, mf: Optional[np.ndarray] = None) -> NecessityWitness:
    """Extremal test function for the weak-type inequality on one ball.

    ``ball`` is a canonical ball index or a point set.  The returned ``f``
    pairs with the normalized weight ``scale * w``.
    """
    if not p.bounded or p.p_minus <= 1:
        raise ValueError("necessity witness needs 1 < p_- <= p_+ < inf")
    w = check_weight(w, space.n)
    B = _ball_rows(space, ball)
    if not B.any():
        raise ValueError("empty ball")
    q = conjugate(p)
    scale = luxemburg_norm(space, q, B / w, tol)
    wt = scale * w
    muB = float(space.mass[B].sum())
    inv = np.where(B, 1.0 / wt, 0.0)
    qv = q.values

    def G(lam, R):
        F = B & (qv < R)
        return float(((inv[F] / lam) ** qv[F] * space.mass[F]).sum())

    lam0 = 0.75
    R = None
    for v in np.unique(qv[B]):
        cand = math.nextafter(float(v), math.inf)
        if G(lam0, cand) > 1.0 / 3.0:
            R = cand
            break
    if R is None:  # only possible through rounding in the normalization
        R = math.nextafter(float(qv[B].max()), math.inf)
    pm = p.p_minus
    qm = q.p_minus
    cap = min(2.0, 2.0 ** (pm / qm))
    if G(1.0, R) >= 1.0 / 3.0:
        branch = "G(1)>=1/3"
        lam = max(lam0, (cap * (1 - 1e-6)) ** (-1.0 / R))
    else:
        branch = "bisection"
        target = (1.0 / 3.0) * (1 + 1e-9)
        lo, hi = lam0, 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if G(mid, R) >= target:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15:
                break
        lam = lo
    F = B & (qv < R)
    f = np.zeros(space.n)
    f[F] = wt[F] ** (-qv[F]) / lam ** (qv[F] - 1.0)
    g = G(lam, R)
    norm_fw = luxemburg_norm(space, p, f * wt, tol)
    Mf = hl_maximal_many(space, f[None, :])[0] if mf is None else mf
    return NecessityWitness(
        f, frozenset(np.flatnonzero(B).tolist()), float(scale), float(lam), float(R), g, branch,
        norm_fw, 2.0 ** (1.0 / qm), float(Mf[B].min()), lam / (3.0 * muB),
    )


# --------------------------------------------------------------------------
# families and ratios


def _sample_balls(space: FiniteSpace, k: Optional[int], base_point: int, rng) -> list:
    fam = space.balls
    total = len(fam)
    if k is None or k >= total:
        return list(range(total))
    anchored = set(np.flatnonzero(fam.members[:, base_point] & (fam.centers == base_point)).tolist())
    rest = np.setdiff1d(np.arange(total), np.fromiter(anchored, dtype=int, count=len(anchored)))
    extra = rng.choice(rest, size=min(max(k - len(anchored), 0), rest.size), replace=False) if rest.size else []
    return sorted(anchored | set(int(b) for b in extra))


def build_family(space: FiniteSpace, p: ExponentFunction, w, spec: dict, seed: int = 0, grid=None, base_point: int = 0, tol: float = DEFAULT_TOL) -> list:
    """Test functions as ``(family, f_id, f)``: ball indicators, sigma chi_Q, random sparse, witnesses."""
    rng = np.random.default_rng(seed)
    out = []
    balls = _sample_balls(space, spec.get("balls"), base_point, rng)
    fam = space.balls
    for b in balls:
        out.append(("ball", f"b{b}", fam.members[b].astype(float)))
    if spec.get("cubes", True) and p.bounded and p.p_minus > 1:
        if grid is None:
            grid = build_grid(space, seed=seed)
        sigma = w ** (-conjugate(p).values)
        C = grid.cube_matrix()
        for q in grid.cubes:
            out.append(("cube", f"q{q.id}", np.where(C[q.id], sigma, 0.0)))
    density = float(spec.get("density", 0.25))
    for i in range(int(spec.get("random", 0))):
        supp = rng.random(space.n) < density
        if not supp.any():
            supp[rng.integers(space.n)] = True
        out.append(("random", f"r{i}", np.where(supp, rng.choice([-1.0, 1.0], space.n), 0.0)))
    nw = int(spec.get("witness", 0))
    if nw and p.bounded and p.p_minus > 1:
        for b in balls[:nw]:
            out.append(("witness", f"w{b}", necessity_witness(space, p, w, b, tol).f))
    return out


@dataclass(frozen=True)
class RatioRow:
    n: int
    family: str
    f_id: str
    norm_Mfw: float
    norm_fw: float
    ratio: float
    apq: float


@dataclass
class RatioReport:
    kind: str
    rows: list = field(default_factory=list)
    sup: dict = field(default_factory=dict)
    apq: dict = field(default_factory=dict)

    def extend(self, other: "RatioReport"):
        self.rows.extend(other.rows)
        self.sup.update(other.sup)
        self.apq.update(other.apq)

    def sequence(self, what: str = "sup") -> list:
        d = self.sup if what == "sup" else self.apq
        return [d[n] for n in sorted(d)]


def _apq_or_nan(space, p, w, tol):
    if not p.bounded:
        return float("nan")
    return apq_constant(space, p, w, tol=tol).constant


def strong_type_ratio(space: FiniteSpace, p: ExponentFunction, w, family: Sequence, tol: float = DEFAULT_TOL, apq: Optional[float] = None) -> RatioReport:
    """||(Mf) w||_p / ||f w||_p for every ``(family, f_id, f)``."""
    w = check_weight(w, space.n)
    rep = RatioReport("strong")
    apq = _apq_or_nan(space, p, w, tol) if apq is None else apq
    rep.apq[space.n] = apq
    if not family:
        rep.sup[space.n] = 0.0
        return rep
    F = np.array([np.abs(f) for _, _, f in family])
    M = hl_maximal_many(space, F)
    top = luxemburg_norms(space, p, M * w[None, :], tol)
    bot = luxemburg_norms(space, p, F * w[None, :], tol)
    ratio = top / bot
    for (fam, fid, _), a, b, r in zip(family, top, bot, ratio):
        rep.rows.append(RatioRow(space.n, fam, fid, float(a), float(b), float(r), apq))
    rep.sup[space.n] = float(ratio.max())
    return rep


def weak_numerators(space: FiniteSpace, p: ExponentFunction, w, M: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """sup over t of t ||w chi_{Mf > t}||_p per row of ``M``.

    The sup is approached as t rises to a value v of Mf, where the set is
    {Mf >= v}; it is evaluated there.
    """
    rows, owner, level = [], [], []
    for k, m in enumerate(M):
        for v in np.unique(m[m > 0]):
            rows.append(m >= v)
            owner.append(k)
            level.append(v)
    out = np.zeros(M.shape[0])
    if not rows:
        return out
    S = np.array(rows)
    nrm = luxemburg_norms(space, p, S * w[None, :], tol)
    val = np.asarray(level) * nrm
    np.maximum.at(out, np.asarray(owner), val)
    return out


def weak_type_ratio(space: FiniteSpace, p: ExponentFunction, w, family: Sequence, tol: float = DEFAULT_TOL, apq: Optional[float] = None) -> RatioReport:
    """sup_t t ||w chi_{Mf > t}||_p / ||f w||_p for every test function."""
    if not p.bounded:
        raise ValueError("weak-type ratio needs p_+ < inf")
    w = check_weight(w, space.n)
    rep = RatioReport("weak")
    apq = _apq_or_nan(space, p, w, tol) if apq is None else apq
    rep.apq[space.n] = apq
    if not family:
        rep.sup[space.n] = 0.0
        return rep
    F = np.array([np.abs(f) for _, _, f in family])
    M = hl_maximal_many(space, F)
    top = weak_numerators(space, p, w, M, tol)
    bot = luxemburg_norms(space, p, F * w[None, :], tol)
    ratio = top / bot
    for (fam, fid, _), a, b, r in zip(family, top, bot, ratio):
        rep.rows.append(RatioRow(space.n, fam, fid, float(a), float(b), float(r), apq))
    rep.sup[space.n] = float(ratio.max())
    return rep


# --------------------------------------------------------------------------
# refinement scans


def is_bounded(seq: Sequence[float], factor: float = 1.25) -> bool:
    """Last value <= factor * median of the sequence."""
    seq = np.asarray(seq, dtype=float)
    return bool(seq[-1] <= factor * np.median(seq))


def is_diverging(seq: Sequence[float], factor: float = 1.5) -> bool:
    """Monotone increase with last / first >= factor."""
    seq = np.asarray(seq, dtype=float)
    return bool(np.all(np.diff(seq) > 0) and seq[-1] >= factor * seq[0])


def classify(apq_seq, ratio_seq, bounded_factor: float = 1.25, diverging_factor: float = 1.5) -> str:
    if is_bounded(apq_seq, bounded_factor) and is_bounded(ratio_seq, bounded_factor):
        return "co-bounded"
    if is_diverging(apq_seq, diverging_factor) and is_diverging(ratio_seq, diverging_factor):
        return "co-diverging"
    return "mixed"


def instance(cfg: ExperimentConfig, n: int):
    space = space_for_n(cfg.space, n)
    p = generate_exponent(space, cfg.exponent)
    w = generate_weight(space, cfg.weight)
    return space, p, w


def _grid_for(cfg: ExperimentConfig, space):
    return build_grid(space, cfg.grid.get("d0"), int(cfg.grid.get("seed", cfg.seed)))


def run_ratio(cfg: ExperimentConfig, kind: str) -> RatioReport:
    rep = RatioReport(kind)
    fn = strong_type_ratio if kind == "strong" else weak_type_ratio
    for n in cfg.refinements:
        space, p, w = instance(cfg, n)
        x0 = p.base_point
        fam = build_family(space, p, w, cfg.family, cfg.seed, _grid_for(cfg, space), x0, cfg.tol)
        rep.extend(fn(space, p, w, fam, cfg.tol))
    return rep


@dataclass
class BlowupReport:
    ratios: RatioReport
    classification: str

    @property
    def apq(self) -> list:
        return self.ratios.sequence("apq")

    @property
    def sup(self) -> list:
        return self.ratios.sequence("sup")


def blowup_scan(cfg: ExperimentConfig) -> BlowupReport:
    """Per-n apq constant and sup strong-type ratio, with the co-bounded / co-diverging call."""
    if len(cfg.refinements) < 3:
        raise ValueError("blowup scan needs at least three refinements")
    rep = run_ratio(cfg, "strong")
    cls = classify(rep.sequence("apq"), rep.sequence("sup"), cfg.bounded_factor, cfg.diverging_factor)
    return BlowupReport(rep, cls)


# --------------------------------------------------------------------------
# output


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def report_csv(report: RatioReport) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_COLUMNS)
    for r in report.rows:
        wr.writerow([fmt(r.n), r.family, r.f_id, fmt(r.norm_Mfw), fmt(r.norm_fw), fmt(r.ratio), fmt(r.apq)])
    return buf.getvalue()


def emit_report(report, format: str, path) -> None:
    """Write ``report`` as CSV rows or as a JSON document; output is byte-stable."""
    path = Path(path)
    if format == "csv":
        if not isinstance(report, RatioReport):
            raise TypeError("csv output needs a RatioReport")
        path.write_text(report_csv(report))
    elif format in ("json", "structured-text"):
        from .files import dump_json

        if isinstance(report, RatioReport):
            doc = {
                "kind": report.kind,
                "sup": {str(n): v for n, v in sorted(report.sup.items())},
                "apq": {str(n): v for n, v in sorted(report.apq.items())},
                "rows": len(report.rows),
            }
        else:
            doc = report
        dump_json(doc, path)
    else:
        raise ValueError(f"unknown format {format!r}")
