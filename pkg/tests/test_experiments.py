import numpy as np
import pytest

from homtype.dyadic import build_grid
from homtype.experiments import (
    CSV_COLUMNS,
    ExperimentConfig,
    RatioReport,
    blowup_scan,
    build_family,
    classify,
    emit_report,
    is_bounded,
    is_diverging,
    necessity_witness,
    run_ratio,
    space_for_n,
    strong_type_ratio,
    weak_type_ratio,
)
from homtype.exponents import ramp_exponent
from homtype.lpvar import luxemburg_norm
from homtype.operators import hl_maximal
from homtype.space import euclidean_grid
from homtype.weights import apq_constant, power_weight


def small_cfg(**kw):
    doc = {
        "exponent": {"kind": "ramp", "p_inf": 2.0, "c": 0.5},
        "weight": {"kind": "power", "a": 0.25},
        "family": {"balls": 8, "random": 8, "witness": 4},
        "refinements": [8, 16, 24],
    }
    doc.update(kw)
    return ExperimentConfig.from_dict(doc)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"refinements": [16, 16]})
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"bogus": 1})
    cfg = small_cfg()
    assert cfg.family["cubes"] is True  # merged with defaults
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def test_space_for_n():
    assert space_for_n({"kind": "euclidean_grid", "dim": 2}, 36).n == 36
    s = space_for_n({"kind": "euclidean_grid", "dim": 1}, 32)
    assert s.total_mass == pytest.approx(1.0)
    assert space_for_n({"kind": "cantor"}, 16).n == 16


def test_classifiers():
    assert is_bounded([1.0, 1.1, 1.2, 1.3])
    assert not is_bounded([1.0, 2.0, 4.0, 8.0])
    assert is_diverging([1.0, 2.0, 4.0])
    assert not is_diverging([1.0, 1.2, 1.3])
    assert not is_diverging([1.0, 3.0, 2.0])
    assert classify([1, 1, 1], [2, 2, 2]) == "co-bounded"
    assert classify([1, 2, 4], [1, 3, 9]) == "co-diverging"
    assert classify([1, 1, 1], [1, 3, 9]) == "mixed"


def test_ratio_rows_match_direct_computation():
    s = euclidean_grid(1, 16, 1 / 16, "density")
    p = ramp_exponent(s, 2.0, 0.5)
    w = power_weight(s, 0.25)
    fam = build_family(s, p, w, {"balls": 4, "cubes": False, "random": 3, "witness": 0}, 0)
    rep = strong_type_ratio(s, p, w, fam)
    for (_, fid, f), row in zip(fam, rep.rows):
        assert row.f_id == fid
        num = luxemburg_norm(s, p, hl_maximal(s, f) * w)
        den = luxemburg_norm(s, p, f * w)
        assert row.ratio == pytest.approx(num / den, rel=1e-8)
    assert rep.apq[16] == pytest.approx(apq_constant(s, p, w).constant)


def test_strong_ratio_homogeneous():
    s = euclidean_grid(1, 12, 1 / 12, "density")
    p = ramp_exponent(s, 2.0, 0.5)
    w = power_weight(s, 0.25)
    fam = build_family(s, p, w, {"balls": 4, "cubes": False, "random": 4, "witness": 0}, 1)
    scaled = [(a, b, 7.5 * f) for a, b, f in fam]
    r1 = strong_type_ratio(s, p, w, fam)
    r2 = strong_type_ratio(s, p, w, scaled)
    for a, b in zip(r1.rows, r2.rows):
        assert a.ratio == pytest.approx(b.ratio, rel=1e-8)


def test_weak_below_strong():
    s = euclidean_grid(1, 16, 1 / 16, "density")
    p = ramp_exponent(s, 2.0, 0.5)
    w = power_weight(s, 0.5)
    fam = build_family(s, p, w, {"balls": 6, "cubes": True, "random": 6, "witness": 2}, 0, build_grid(s))
    wk = weak_type_ratio(s, p, w, fam)
    st = strong_type_ratio(s, p, w, fam)
    for a, b in zip(wk.rows, st.rows):
        assert a.ratio <= b.ratio * (1 + 1e-9)


def test_necessity_witness_certificates():
    s = euclidean_grid(1, 16, 1 / 16, "density")
    p = ramp_exponent(s, 2.0, 0.5)
    w = power_weight(s, 0.5)
    ap = apq_constant(s, p, w)
    W = necessity_witness(s, p, w, ap.witness)
    assert W.ok
    assert W.lam >= 0.75
    assert np.all(W.f >= 0)
    assert set(np.flatnonzero(W.f)) <= set(W.ball)


def test_emit_deterministic_and_header(tmp_path):
    cfg = small_cfg()
    r1 = run_ratio(cfg, "strong")
    r2 = run_ratio(cfg, "strong")
    emit_report(r1, "csv", tmp_path / "a.csv")
    emit_report(r2, "csv", tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    emit_report(RatioReport("strong"), "csv", tmp_path / "empty.csv")
    assert (tmp_path / "empty.csv").read_text() == ",".join(CSV_COLUMNS) + "\n"
    emit_report(r1, "structured-text", tmp_path / "a.json")
    with pytest.raises(ValueError):
        emit_report(r1, "xml", tmp_path / "a.xml")


def test_blowup_needs_three_refinements():
    with pytest.raises(ValueError):
        blowup_scan(small_cfg(refinements=[8, 16]))
    r = blowup_scan(small_cfg())
    assert r.classification in ("co-bounded", "co-diverging", "mixed")
    assert len(r.apq) == 3
