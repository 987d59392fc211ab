import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from epzeros.errors import DomainError, PoleError
from epzeros.lfun import (
    class_contexts, completed_psi, completed_psi_scaled, epstein_direct, epstein_zeta, epstein_zeta_line,
    gamma_upper_cf, hecke_all, hecke_l, incomplete_gamma_upper, log_vector, make_context, reconstruct,
)
from epzeros.qf import build_euler_table, character_system, enumerate_classes, system_for_form
from epzeros import dpoly
from oracle_values import EPSTEIN_REF

ZETA2_BETA2 = float(mp.zeta(2) * mp.catalan)


@pytest.fixture(scope="module")
def ctx_cache():
    cache = {}

    def get(form, t_max):
        key = (tuple(form), t_max)
        if key not in cache:
            cache[key] = make_context(form, t_max=t_max)
        return cache[key]

    return get


def test_gamma_upper_closed_forms():
    for x in (0.1, 1.0, 3.7, 20.0):
        assert abs(incomplete_gamma_upper(1, x) - math.exp(-x)) < 1e-12 * math.exp(-x)
    assert abs(incomplete_gamma_upper(0.5, 1.0) - 0.27880558528066197) < 1e-13


@pytest.mark.parametrize("s,x", [(0.75 + 10j, 2.0), (0.3 - 40j, 5.0), (2.5 + 100j, 30.0), (-0.5 + 7j, 0.5), (0.5 + 300j, 60.0)])
def test_gamma_upper_against_mpmath(s, x):
    with mp.workdps(50):
        ref = complex(mp.gammainc(mp.mpc(s), mp.mpf(x)))
    val = incomplete_gamma_upper(s, x)
    assert abs(val - ref) <= 1e-12 * abs(ref)


@pytest.mark.parametrize("s", [0.5, 1.5, 3.0, 7.25])
def test_gamma_upper_quadrature_vs_continued_fraction(s):
    for x in (8.0, 15.0, 40.0):
        q = incomplete_gamma_upper(s, x)
        assert abs(q - gamma_upper_cf(s, x)) <= 1e-12 * abs(q)


def test_gamma_upper_domain():
    with pytest.raises(DomainError):
        incomplete_gamma_upper(0.5, 0.0)


@pytest.mark.parametrize("key", sorted(EPSTEIN_REF, key=str))
def test_epstein_against_reference(key, ctx_cache):
    form, s = key
    ctx = ctx_cache(form, 1100.0 if abs(s.imag) > 100 else 100.0)
    ref = EPSTEIN_REF[key]
    assert abs(epstein_zeta(s, ctx) - ref) <= 1e-10 * max(1.0, abs(ref))


def test_epstein_d4_at_two(ctx_cache):
    ctx = ctx_cache((1, 0, 1), 100.0)
    assert abs(epstein_zeta(2.0, ctx) - 4 * ZETA2_BETA2) < 1e-10
    # Psi(2) = (2/2pi)^2 Gamma(2) E(2)
    assert abs(completed_psi(2.0, ctx) - (1 / math.pi) ** 2 * 4 * ZETA2_BETA2) < 1e-10


@pytest.mark.parametrize("form", [(1, 0, 1), (2, 1, 3), (1, 1, 10), (3, 3, 4)])
def test_epstein_vs_direct_series(form, ctx_cache):
    ctx = ctx_cache(form, 100.0)
    for s in (2.5, 2.5 + 3j, 3 - 20j, 3.5 + 50j):
        d = epstein_direct(s, form, X=10**5)
        assert abs(epstein_zeta(s, ctx) - d) < 1e-8 * max(1, abs(d))


def test_residue_at_one(ctx_cache):
    for form in [(1, 0, 1), (2, 1, 3)]:
        ctx = ctx_cache(form, 100.0)
        kappa = 2 * math.pi / math.sqrt(-ctx.D)
        vals = [(10.0**-k) * epstein_zeta(1 + 10.0**-k, ctx) for k in range(3, 7)]
        # linear in (s - 1): Richardson on the last pair
        extrap = (10 * vals[-1] - vals[-2]) / 9
        assert abs(extrap - kappa) < 1e-9
        assert abs(vals[-1] - kappa) < 1e-5


def test_poles_and_value_at_zero(ctx_cache):
    ctx = ctx_cache((1, 0, 1), 100.0)
    with pytest.raises(PoleError):
        epstein_zeta(1.0, ctx)
    with pytest.raises(PoleError):
        completed_psi(0.0, ctx)
    with pytest.raises(PoleError):
        completed_psi(1.0, ctx)
    assert epstein_zeta(0.0, ctx) == -1.0


def test_real_on_real_axis(ctx_cache):
    ctx = ctx_cache((2, 1, 3), 100.0)
    for s in (0.3, 0.7, 1.5, 2.5, -0.5):
        assert abs(epstein_zeta(s, ctx).imag) < 1e-13 * max(1, abs(epstein_zeta(s, ctx)))
        assert abs(completed_psi(s, ctx).imag) < 1e-12 * max(1, abs(completed_psi(s, ctx)))


def test_functional_equation_example(ctx_cache):
    ctx = ctx_cache((1, 1, 6), 100.0)
    a, b = completed_psi(0.7 + 5j, ctx), completed_psi(0.3 - 5j, ctx)
    assert abs(a - b) < 1e-10


@given(st.floats(0.3, 0.7), st.floats(-1000, 1000), st.sampled_from([(1, 0, 1), (2, 1, 3), (3, 3, 4)]))
def test_functional_equation_property(sigma, t, form):
    ctx = make_context(form, t_max=1000.0) if form not in _FE_CTX else _FE_CTX[form]
    _FE_CTX[form] = ctx
    s = complex(sigma, t)
    if abs(s) < 1e-6 or abs(s - 1) < 1e-6:
        return
    a, b = completed_psi_scaled(s, ctx), completed_psi_scaled(1 - s, ctx)
    assert abs(a - b) / (1 + abs(a)) < 1e-8


_FE_CTX: dict = {}


def test_scaled_psi_matches_plain(ctx_cache):
    ctx = ctx_cache((2, 1, 3), 100.0)
    for s in (0.6 + 20j, 0.4 - 35j):
        assert abs(completed_psi_scaled(s, ctx) * math.exp(-math.pi * abs(s.imag) / 2) - completed_psi(s, ctx)) \
            <= 1e-9 * abs(completed_psi(s, ctx))


def test_conjugation(ctx_cache):
    ctx = ctx_cache((1, 1, 10), 100.0)
    for s in (0.6 + 20j, 1.3 + 7j):
        assert abs(epstein_zeta(s.conjugate(), ctx) - epstein_zeta(s, ctx).conjugate()) < 1e-11


def test_line_batch_matches_pointwise(ctx_cache):
    ctx = ctx_cache((2, 1, 5), 100.0)
    sig = [0.55, 0.8, 1.2, 2.0]
    line = epstein_zeta_line(sig, 42.5, ctx)
    for s, v in zip(sig, line):
        assert abs(v - epstein_zeta(complex(s, 42.5), ctx)) < 1e-12 * max(1, abs(v))


def test_h1_equals_w_times_dedekind():
    ctx = make_context((1, 0, 1), t_max=100.0)
    sys = character_system(enumerate_classes(-4))
    ctxs = class_contexts(sys, t_max=100.0)
    L = hecke_l(2.0, 0, sys, ctxs)
    assert abs(L - ZETA2_BETA2) < 1e-10
    for s in (0.6 + 10j, 2 + 3j):
        assert abs(epstein_zeta(s, ctx) - 4 * hecke_l(s, 0, sys, ctxs)) < 1e-11


@pytest.mark.parametrize("form", [(2, 1, 3), (1, 1, 10), (3, 3, 4), (1, 0, 14)])
def test_decomposition(form):
    sys = system_for_form(form)
    ctxs = class_contexts(sys, t_max=600.0)
    ctx = ctxs.ctxs[sys.anchor_class]
    rng = np.random.default_rng(11)
    for _ in range(10):
        sg, t = rng.uniform(0.3, 1.5), rng.uniform(-500, 500)
        L = hecke_all([sg], t, sys, ctxs)
        E = epstein_zeta_line([sg], t, ctx)[0]
        assert abs(reconstruct(L, sys)[0] - E) < 1e-8 * (1 + abs(E))


def test_trivial_character_pole(sys23, ctxs23):
    with pytest.raises(PoleError):
        hecke_l(1.0, 0, sys23, ctxs23)


def test_euler_product_at_two(sys23, table23, ctxs23):
    L2 = hecke_all([2.0], 0.0, sys23, ctxs23)[:, 0]
    for j in range(sys23.J):
        R = dpoly.eval_poly(dpoly.build_poly(table23, j, 10**4), 2.0)
        assert abs(np.exp(R) - L2[j]) < 1e-3 * abs(L2[j])
    # with the full 1e5 truncation the agreement is much tighter
    big = build_euler_table(sys23, 10**5)
    for j in range(sys23.J):
        R = dpoly.eval_poly(dpoly.build_poly(big, j, 10**5), 2.0)
        assert abs(np.exp(R) - L2[j]) < 1e-5


def test_log_vector_at_sigma3_matches_euler_logs(sys23, table23, ctxs23):
    for t in (0.0, 17.3, 250.0):
        lv = log_vector(3.0, t, sys23, ctxs23)
        for j in range(sys23.J):
            R = dpoly.eval_poly(dpoly.build_poly(table23, j, 10**4), complex(3.0, t))
            assert abs(lv.logL[j] - R) < 1e-8


def test_log_vector_reconstruction_and_conjugation(sys23, ctxs23):
    ctx = ctxs23.ctxs[sys23.anchor_class]
    rng = np.random.default_rng(5)
    J = sys23.J
    for _ in range(8):
        sg, t = rng.uniform(0.55, 0.95), rng.uniform(100, 1000)
        lv = log_vector(sg, t, sys23, ctxs23)
        E = epstein_zeta_line([sg], t, ctx)[0]
        assert abs(lv.reconstruct() - E) < 1e-9 * (1 + abs(E))
        lm = log_vector(sg, -t, sys23, ctxs23)
        assert np.allclose(lm.components[:J], lv.components[:J], atol=1e-9)
        assert np.allclose(lm.components[J:], -lv.components[J:], atol=1e-9)
        # the arguments are continuous-branch values, consistent with the principal ones mod 2 pi
        for j in range(J):
            Lj = hecke_all([sg], t, sys23, ctxs23)[j, 0]
            d = lv.logL[j].imag - cmath.phase(Lj)
            assert abs(d - 2 * math.pi * round(d / (2 * math.pi))) < 1e-8
