"""Command line interface.

Exit codes: 0 success, 1 usage or input error, 2 a checked property failed.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import czdecomp, dyadic, experiments, exponents, files, lpvar, operators, space, weights

EXIT_USAGE = 1
EXIT_ASSERT = 2


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def emit(doc) -> None:
    sys.stdout.write(json.dumps(files._enc(doc), sort_keys=True, indent=2) + "\n")


# --------------------------------------------------------------------------
# handlers


def cmd_space_gen(a):
    spec = {"kind": a.kind}
    for key in ("dim", "side", "spacing", "mass", "gamma", "depth", "ratio", "path"):
        v = getattr(a, key)
        if v is not None:
            spec[key] = v
    try:
        s = space.generate_space(spec)
    except KeyError as e:
        raise UsageError(f"--{e.args[0]} is required for kind {a.kind}")
    files.save_space(s, a.out)
    emit({"n": s.n, "out": a.out})


def cmd_space_constants(a):
    s = files.load_space(a.space)
    lm = space.lower_mass_check(s)
    emit(
        {
            "n": s.n,
            "total_mass": s.total_mass,
            "diameter": s.diameter,
            "A0": space.quasimetric_constant(s),
            "C_mu": space.doubling_constant(s),
            "lower_mass_constant": lm.constant,
            "lower_mass_exponent": lm.exponent,
            "balls": len(s.balls),
        }
    )


def cmd_exp_gen(a):
    s = files.load_space(a.space)
    spec = {"kind": a.kind, "base_point": a.base_point}
    names = {"value": "value", "p_inf": "p_inf", "c": "c", "center": "center", "amplitude": "amplitude",
             "frequency": "frequency", "phase": "phase", "low": "low", "high": "high", "threshold": "threshold"}
    for attr, key in names.items():
        v = getattr(a, attr)
        if v is not None:
            spec[key] = v
    try:
        p = exponents.generate_exponent(s, spec)
    except KeyError as e:
        raise UsageError(f"missing parameter {e.args[0]} for exponent kind {a.kind}")
    files.save_exponent(p, a.out)
    emit({"p_minus": p.p_minus, "p_plus": p.p_plus, "out": a.out})


def cmd_exp_lh(a):
    s = files.load_space(a.space)
    p = files.load_exponent(a.exp)
    osc, b = exponents.oscillation_bound_scan(s, p)
    emit(
        {
            "p_minus": p.p_minus,
            "p_plus": p.p_plus,
            "LH0": exponents.lh0_constant(s, p),
            "LHinf": exponents.lhinf_constant(s, p),
            "oscillation_bound": osc,
            "oscillation_ball": sorted(b),
        }
    )


def _fn(path, n):
    f = files.load_function(path)
    if f.size != n:
        raise UsageError(f"function has {f.size} values, space has {n} points")
    return f


def cmd_norm(a):
    s = files.load_space(a.space)
    p = files.load_exponent(a.exp)
    f = _fn(a.fn, s.n)
    emit({"norm": lpvar.luxemburg_norm(s, p, f, a.tol), "modular": lpvar.modular(s, p, f)})


def cmd_modular(a):
    s = files.load_space(a.space)
    p = files.load_exponent(a.exp)
    emit({"modular": lpvar.modular(s, p, _fn(a.fn, s.n))})


def cmd_apq(a):
    s = files.load_space(a.space)
    p = files.load_exponent(a.exp)
    w = _fn(a.weight, s.n)
    if a.grid:
        g = files.load_grid(a.grid, s)
        r = weights.apq_constant_dyadic(g, p, w)
        C = g.cube_matrix()
        doc = {"constant": r.constant, "witness_cube": r.witness, "members": np.flatnonzero(C[r.witness]).tolist()}
    else:
        r = weights.apq_constant(s, p, w)
        C = s.balls.members
        doc = {"constant": r.constant, "witness_ball": r.witness, "members": sorted(s.balls.ball(r.witness))}
    if a.dump:
        mu = C.astype(float) @ s.mass
        lines = ["set,measure,norm_w,norm_winv,ratio"]
        for i in range(C.shape[0]):
            lines.append(",".join([str(i)] + [experiments.fmt(v) for v in (mu[i], r.norm_w[i], r.norm_winv[i], r.ratios[i])]))
        Path(a.dump).write_text("\n".join(lines) + "\n")
    emit(doc)


def cmd_ainfty(a):
    s = files.load_space(a.space)
    W = _fn(a.weight, s.n)
    pp = files.load_exponent(a.exp).p_plus if a.exp else None
    r = weights.ainfty_diagnostics(s, W, p_plus=pp)
    emit(
        {
            "W_doubling": r.w_doubling,
            "c2_by_eps": {repr(k): v for k, v in r.c2_by_eps.items()},
            "c1_by_delta": {repr(k): v for k, v in r.c1_by_delta.items()},
            "best_eps": list(r.best_eps),
            "best_delta": list(r.best_delta),
        }
    )


def cmd_grid_build(a):
    s = files.load_space(a.space)
    g = dyadic.build_grid(s, a.d0, a.seed)
    files.save_grid(g, a.out)
    emit({"levels": g.n_levels, "generations": list(g.generations), "achieved_Cd": g.achieved_Cd, "achieved_eps": g.achieved_eps})


def cmd_grid_verify(a):
    s = files.load_space(a.space)
    g = files.load_grid(a.grid, s)
    r = dyadic.verify_grid(s, g)
    emit(
        {
            "partition": r.partition,
            "nested": r.nested,
            "parents": r.parents,
            "child_mass": r.child_mass,
            "sandwich": r.sandwich,
            "achieved_Cd": r.achieved_Cd,
            "achieved_eps": r.achieved_eps,
            "witnesses": {k: list(v) for k, v in r.witnesses.items()},
            "passed": r.passed,
        }
    )
    return 0 if r.passed else EXIT_ASSERT


def _sigma(a, n):
    return _fn(a.sigma, n) if getattr(a, "sigma", None) else None


def cmd_maximal(a):
    s = files.load_space(a.space)
    f = _fn(a.fn, s.n)
    if a.grid:
        m = operators.dyadic_maximal(files.load_grid(a.grid, s), f, _sigma(a, s.n))
    else:
        if a.sigma:
            raise UsageError("--sigma needs --grid")
        m = operators.hl_maximal(s, f)
    files.save_function(m, a.out)
    emit({"max": float(m.max()), "out": a.out})


def cmd_check(a):
    s = files.load_space(a.space)
    f = _fn(a.fn, s.n)
    if a.which == "domination":
        if not a.grids:
            raise UsageError("domination needs --grids")
        grids = [files.load_grid(g, s) for g in a.grids]
        emit({"constant": operators.domination_check(s, grids, f)})
        return 0
    if not a.grid:
        raise UsageError(f"{a.which} needs --grid")
    g = files.load_grid(a.grid, s)
    sig = _sigma(a, s.n)
    if a.which == "weak11":
        r = operators.weak11_check(g, f, sig)
        ok = r <= 1 + 1e-12
        emit({"ratio": r, "bound": 1.0, "ok": ok})
    else:
        if a.p is None:
            raise UsageError("strongpp needs --p")
        r = operators.strongpp_check(g, f, sig, a.p)
        bound = 2 * a.p / (a.p - 1)
        ok = r <= bound
        emit({"ratio": r, "bound": bound, "ok": ok})
    return 0 if ok else EXIT_ASSERT


def cmd_cz(a):
    s = files.load_space(a.space)
    g = files.load_grid(a.grid, s)
    f = _fn(a.fn, s.n)
    sig = _sigma(a, s.n)
    if (a.lam is None) == (a.base_a is None):
        raise UsageError("give exactly one of --lambda and --base-a")
    if a.lam is not None:
        d = czdecomp.cz_at_height(g, f, sig, a.lam)
    else:
        d = czdecomp.sparse_family(g, f, sig, a.base_a)
    r = czdecomp.verify_cz(g, f, sig, d)
    doc = {
        "lambda": d.lam,
        "base_a": d.a,
        "lambda0": d.lambda0,
        "achieved_CCZ": d.achieved_CCZ,
        "cubes": [{"id": i, "members": sorted(g.cubes[i].members)} for i in d.cubes],
        "heights": {str(k): list(v) for k, v in sorted(d.heights.items())},
        "sparse_sets": [{"k": k, "cube": i, "members": sorted(E)} for (k, i), E in sorted(d.sparse_sets.items())],
        "checks": {k: getattr(r, k) for k in ("cover", "sandwich", "maximal", "disjoint", "sparse_disjoint", "thick")},
        "passed": r.passed,
    }
    if a.out:
        files.dump_json(doc, a.out)
    emit({k: doc[k] for k in ("lambda", "base_a", "lambda0", "achieved_CCZ", "passed")})
    return 0 if r.passed else EXIT_ASSERT


def cmd_experiment(a):
    try:
        cfg = experiments.ExperimentConfig.from_dict(files.read_json(a.config))
    except (TypeError, ValueError) as e:
        raise UsageError(f"bad config: {e}")
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    runner = {"strong-type": run_strong, "weak-type": run_weak, "necessity": run_necessity, "blowup": run_blowup}[a.which]
    failures = runner(cfg, out)
    for msg in failures:
        print(f"ASSERTION FAILED: {msg}", file=sys.stderr)
    return EXIT_ASSERT if failures else 0


def _expect_seq(cfg, seq, label):
    if cfg.expect == "bounded" and not experiments.is_bounded(seq, cfg.bounded_factor):
        return [f"{label} not bounded across refinements: {seq}"]
    if cfg.expect == "diverging" and not experiments.is_diverging(seq, cfg.diverging_factor):
        return [f"{label} not diverging across refinements: {seq}"]
    return []


def run_strong(cfg, out):
    rep = experiments.run_ratio(cfg, "strong")
    experiments.emit_report(rep, "csv", out / "strong_type.csv")
    experiments.emit_report(rep, "json", out / "strong_type.json")
    fails = [f"bad ratio for {r.f_id} at n={r.n}" for r in rep.rows if not (np.isfinite(r.ratio) and r.ratio >= 0)]
    return fails + _expect_seq(cfg, rep.sequence("sup"), "sup strong-type ratio")


def run_weak(cfg, out):
    weak = experiments.RatioReport("weak")
    fails = []
    for n in cfg.refinements:
        s, p, w = experiments.instance(cfg, n)
        fam = experiments.build_family(s, p, w, cfg.family, cfg.seed, experiments._grid_for(cfg, s), p.base_point, cfg.tol)
        wr = experiments.weak_type_ratio(s, p, w, fam, cfg.tol)
        sr = experiments.strong_type_ratio(s, p, w, fam, cfg.tol, apq=wr.apq[n])
        weak.extend(wr)
        for a_, b_ in zip(wr.rows, sr.rows):
            if a_.ratio > b_.ratio * (1 + 1e-9):
                fails.append(f"weak ratio exceeds strong ratio for {a_.f_id} at n={n}")
        p_one = p.p_minus == 1
    experiments.emit_report(weak, "csv", out / "weak_type.csv")
    experiments.emit_report(weak, "json", out / "weak_type.json")
    if not p_one:
        fails += _expect_seq(cfg, weak.sequence("sup"), "sup weak-type ratio")
    return fails


def run_necessity(cfg, out):
    rep = experiments.RatioReport("necessity")
    certs, fails = [], []
    for n in cfg.refinements:
        s, p, w = experiments.instance(cfg, n)
        ap = weights.apq_constant(s, p, w, tol=cfg.tol)
        rng = np.random.default_rng(cfg.seed)
        balls = experiments._sample_balls(s, cfg.necessity_balls, p.base_point, rng)
        if ap.witness not in balls:
            balls.append(ap.witness)
        rep.apq[n] = ap.constant
        sup = 0.0
        for b in balls:
            W = experiments.necessity_witness(s, p, w, b, cfg.tol)
            wt = W.scale * w
            wr = experiments.weak_type_ratio(s, p, wt, [("witness", f"w{b}", W.f)], cfg.tol, apq=ap.constant)
            row = wr.rows[0]
            rep.rows.append(row)
            sup = max(sup, row.ratio)
            kb = float(ap.ratios[b])
            derived = 3.0 * row.ratio * W.norm_fw / W.lam
            certs.append(
                {"n": n, "ball": b, "lambda": W.lam, "R": W.R, "G": W.G, "branch": W.branch, "norm_fw": W.norm_fw,
                 "norm_bound": W.norm_bound, "mf_min": W.mf_min, "mf_bound": W.mf_bound, "apq_ball": kb,
                 "derived_bound": derived}
            )
            if not W.norm_ok:
                fails.append(f"n={n} ball {b}: ||fw|| = {W.norm_fw!r} > {W.norm_bound!r}")
            if not W.mf_ok:
                fails.append(f"n={n} ball {b}: min Mf = {W.mf_min!r} < {W.mf_bound!r}")
            if kb > derived * (1 + 1e-9):
                fails.append(f"n={n} ball {b}: ball constant {kb!r} exceeds derived bound {derived!r}")
        rep.sup[n] = sup
    experiments.emit_report(rep, "csv", out / "necessity.csv")
    files.dump_json({"certificates": certs, "failures": fails}, out / "necessity.json")
    return fails


def run_blowup(cfg, out):
    r = experiments.blowup_scan(cfg)
    experiments.emit_report(r.ratios, "csv", out / "blowup.csv")
    files.dump_json(
        {"n": sorted(r.ratios.sup), "apq": r.apq, "sup_ratio": r.sup, "classification": r.classification},
        out / "blowup.json",
    )
    if cfg.expect and cfg.expect in ("co-bounded", "co-diverging", "mixed") and r.classification != cfg.expect:
        return [f"classified {r.classification}, expected {cfg.expect}"]
    return []


# --------------------------------------------------------------------------
# parser


def build_parser() -> Parser:
    ap = Parser(prog="homtype", description="Weighted variable-exponent experiments on finite spaces of homogeneous type.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=Parser)

    sp = sub.add_parser("space", help="generate spaces and measure their constants")
    ssub = sp.add_subparsers(dest="sub", required=True, parser_class=Parser)
    g = ssub.add_parser("gen")
    g.add_argument("--kind", required=True, choices=["euclidean_grid", "power_metric", "cantor", "explicit"])
    g.add_argument("--dim", type=int)
    g.add_argument("--side", type=int)
    g.add_argument("--spacing", type=float)
    g.add_argument("--mass", choices=["uniform", "density"])
    g.add_argument("--gamma", type=float)
    g.add_argument("--depth", type=int)
    g.add_argument("--ratio", type=float)
    g.add_argument("--path")
    g.add_argument("--out", required=True)
    g.set_defaults(handler=cmd_space_gen)
    c = ssub.add_parser("constants")
    c.add_argument("--space", required=True)
    c.set_defaults(handler=cmd_space_constants)

    ep = sub.add_parser("exp", help="exponent functions")
    esub = ep.add_subparsers(dest="sub", required=True, parser_class=Parser)
    g = esub.add_parser("gen")
    g.add_argument("--space", required=True)
    g.add_argument("--kind", required=True, choices=["constant", "ramp", "sinusoid", "step"])
    g.add_argument("--base-point", type=int, default=0)
    for name in ("value", "p-inf", "c", "center", "amplitude", "frequency", "phase", "low", "high", "threshold"):
        g.add_argument(f"--{name}", type=float)
    g.add_argument("--out", required=True)
    g.set_defaults(handler=cmd_exp_gen)
    lh = esub.add_parser("lh")
    lh.add_argument("--space", required=True)
    lh.add_argument("--exp", required=True)
    lh.set_defaults(handler=cmd_exp_lh)

    for name, fn in (("norm", cmd_norm), ("modular", cmd_modular)):
        p = sub.add_parser(name)
        p.add_argument("--space", required=True)
        p.add_argument("--exp", required=True)
        p.add_argument("--fn", required=True)
        if name == "norm":
            p.add_argument("--tol", type=float, default=lpvar.DEFAULT_TOL)
        p.set_defaults(handler=fn)

    p = sub.add_parser("apq")
    p.add_argument("--space", required=True)
    p.add_argument("--exp", required=True)
    p.add_argument("--weight", required=True)
    p.add_argument("--grid")
    p.add_argument("--dump", help="CSV of per-set ratios")
    p.set_defaults(handler=cmd_apq)

    p = sub.add_parser("ainfty")
    p.add_argument("--space", required=True)
    p.add_argument("--weight", required=True, help="the weight W whose measure is tested")
    p.add_argument("--exp", help="adds 1/p_+ to the exponent grid")
    p.set_defaults(handler=cmd_ainfty)

    gp = sub.add_parser("grid", help="dyadic grids")
    gsub = gp.add_subparsers(dest="sub", required=True, parser_class=Parser)
    b = gsub.add_parser("build")
    b.add_argument("--space", required=True)
    b.add_argument("--d0", type=float)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True)
    b.set_defaults(handler=cmd_grid_build)
    v = gsub.add_parser("verify")
    v.add_argument("--space", required=True)
    v.add_argument("--grid", required=True)
    v.set_defaults(handler=cmd_grid_verify)

    p = sub.add_parser("maximal")
    p.add_argument("--space", required=True)
    p.add_argument("--fn", required=True)
    p.add_argument("--grid")
    p.add_argument("--sigma")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_maximal)

    p = sub.add_parser("check")
    p.add_argument("which", choices=["weak11", "strongpp", "domination"])
    p.add_argument("--space", required=True)
    p.add_argument("--fn", required=True)
    p.add_argument("--grid")
    p.add_argument("--grids", nargs="+")
    p.add_argument("--sigma")
    p.add_argument("--p", type=float)
    p.set_defaults(handler=cmd_check)

    p = sub.add_parser("cz")
    p.add_argument("--space", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--fn", required=True)
    p.add_argument("--sigma")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--base-a", type=float)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_cz)

    p = sub.add_parser("experiment")
    p.add_argument("which", choices=["strong-type", "weak-type", "necessity", "blowup"])
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_experiment)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rc = args.handler(args)
    except UsageError as e:
        print(f"homtype: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as e:
        print(f"homtype: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return 0 if rc is None else int(rc)


if __name__ == "__main__":
    sys.exit(main())
