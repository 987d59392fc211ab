"""Invariant suite run by `epzeros selftest`; every entry is deterministic given the config."""
from __future__ import annotations

import math

import numpy as np

from . import dist, dpoly, rmodel, zeros
from .lfun import class_contexts, completed_psi_scaled, hecke_all, make_context, epstein_zeta_line, reconstruct
from .qf import build_euler_table, character_system, enumerate_classes


def _check(name, value, bound, ok=None, **extra):
    ok = bool(value <= bound) if ok is None else bool(ok)
    return {"name": name, "value": float(value), "bound": float(bound), "pass": ok, **extra}


def run(cfg) -> dict:
    d = cfg.data
    D = d["discriminant"]
    rng = np.random.Generator(np.random.Philox(key=d["selftest"]["seed"]))
    npts = d["selftest"]["points"]
    threads = d["threads"]
    eps = d["precision"]["target_abs_error"]
    g = enumerate_classes(D)
    anchor = g.index_of(d["form"]) if d["form"] else d["anchor"]
    sys = character_system(g, anchor)
    ctxs = class_contexts(sys, target_abs_error=eps, t_max=2.5e3)
    ctx = ctxs.ctxs[anchor]
    out = []

    # class group of D = -23
    g23 = enumerate_classes(-23)
    s23 = character_system(g23)
    out.append(_check("classgroup_D-23", abs(g23.h - 3) + abs(s23.J - 2), 0))

    # functional equation of the completed function
    worst = 0.0
    for _ in range(npts):
        s = complex(rng.uniform(0.3, 0.7), rng.uniform(-2000, 2000))
        a, b = completed_psi_scaled(s, ctx), completed_psi_scaled(1 - s, ctx)
        worst = max(worst, abs(a - b) / (1 + abs(a)))
    out.append(_check("functional_equation", worst, 1e-8))

    # E = sum_j c_j L_j
    worst = 0.0
    for _ in range(npts):
        sg, t = rng.uniform(0.3, 0.7), rng.uniform(-2000, 2000)
        L = hecke_all([sg], t, sys, ctxs)
        E = epstein_zeta_line([sg], t, ctx)[0]
        worst = max(worst, abs(reconstruct(L, sys)[0] - E) / (1 + abs(E)))
    out.append(_check("decomposition", worst, 1e-8))

    # Euler product at sigma = 2
    table = build_euler_table(sys, 10**4) if _fundamental(D) else None
    if table is not None:
        L2 = hecke_all([2.0], 0.0, sys, ctxs)[:, 0]
        worst = max(abs(np.exp(dpoly.eval_poly(dpoly.build_poly(table, j, 10**4), 2.0)) - L2[j]) for j in range(sys.J))
        bound = float(np.max(np.abs(L2))) * math.expm1(dpoly.tail_bound(table, 0, 10**4, 2.0))
        out.append(_check("euler_product_sigma2", worst, bound))

    # h = 1 control strip
    c4 = make_context((1, 0, 1), t_max=100.0)
    n4 = zeros.count_window(0.6, 0.95, 10.0, 50.0, c4)
    out.append(_check("winding_D-4_zero_free", abs(n4), 0))

    # winding additivity on the configured form
    ev = zeros.LineEvaluator(ctx)
    whole = zeros.count_window(0.55, 1.5, 100.0, 140.0, ev)
    parts = zeros.count_window(0.55, 1.5, 100.0, 120.0, ev) + zeros.count_window(0.55, 1.5, 120.0, 140.0, ev)
    out.append(_check("winding_additivity", abs(whole - parts), 0, count=whole))

    # Bessel J0 and the Tsang kernel
    xs = np.linspace(2, 100, 1000)
    out.append(_check("bessel_j0_envelope", float(np.max(np.abs(rmodel.bessel_j0(xs)))), math.exp(-0.5)))
    us = np.linspace(0, 1, 1001)
    G = np.array([dist.tsang_G(u) for u in us])
    out.append(_check("tsang_G_range", float(max(-G.min(), G.max() - 2 / math.pi)), 1e-15))
    ratio = 0.0
    for _ in range(50):
        a = rng.uniform(-1, 1)
        b = a + rng.uniform(0.1, 2)
        eta = rng.uniform(2, 30)
        x = rng.uniform(a - 1, b + 1)
        v = dist.tsang_indicator(a, b, eta, x)
        ratio = max(ratio, max(0.0, abs(v - (a <= x <= b)) - 1e-12) / dist.fejer_bound(a, b, eta, x))
    out.append(_check("tsang_indicator_envelope", ratio, 2.0))

    # random model
    if table is not None:
        m = d["model"]
        mc = rmodel.ModelConfig(P_max=min(m["P_max"], 10**4), k_max=m["k_max"], n_samples=max(m["n_samples"], 100),
                                base_seed=m["seed"], block=m["block"], threads=threads)
        sig = d["sigma"][0] if 0.5 < d["sigma"][0] < 3 else 0.75
        est = rmodel.estimate_M(sig, mc, sys, table)
        out.append(_check("model_M", 0.0, 0.0, ok=math.isfinite(est.mean), mean=est.mean, stderr=est.std_error))
        try:
            mp = rmodel.estimate_M_prime(sig, mc, sys, table)
            gap, comb = mp.discrepancy, mp.combined_stderr
            out.append(_check("model_M_prime_agreement", gap, 3 * comb, pathwise=mp.pathwise.mean,
                              finite_difference=mp.finite_difference.mean))
        except rmodel.EstimatorDisagreement as e:
            out.append(_check("model_M_prime_agreement", 1.0, 0.0, ok=False, error=str(e)))
        if sys.J >= 2:
            w = np.zeros(sys.J)
            w[0] = 1.0
            cm, se = rmodel.char_fn_mc(w, np.zeros(sys.J), sig, mc, sys, table)
            cb = rmodel.char_fn_bessel_axis(1.0, sig, mc, sys, table)
            out.append(_check("char_fn_axis_y1", abs(cm - cb), 3 * se + 1e-12))

    passed = all(c["pass"] for c in out)
    return {"checks": out, "pass": passed}


def _fundamental(D: int) -> bool:
    from ._arith import is_fundamental

    return is_fundamental(D)
