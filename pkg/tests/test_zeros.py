import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from epzeros import rmodel as R
from epzeros import zeros as Z
from epzeros.errors import DomainError
from epzeros.lfun import epstein_zeta_line, make_context
from epzeros.qf import build_euler_table, character_system, enumerate_classes

LOG2 = math.log(2)
BETA = math.log(3) / LOG2


def _dirichlet(sig, t):
    s = np.asarray(sig, float) + 1j * t
    return 1 + 3 * np.exp(-s * LOG2)


def _zeros_of_dirichlet(t1, t2):
    ks = np.arange(-200, 200)
    g = (2 * ks + 1) * math.pi / LOG2
    return sorted(x for x in g if t1 < x < t2)


def _poly(roots):
    roots = np.asarray(roots)

    def f(sig, t):
        s = np.asarray(sig, float) + 1j * t
        return np.prod(s[:, None] - roots[None, :], axis=1)

    return f


@pytest.fixture(scope="module")
def ev39():
    return Z.LineEvaluator(make_context((1, 1, 10), t_max=600.0))


@pytest.fixture(scope="module")
def ev4():
    return Z.LineEvaluator(make_context((1, 0, 1), t_max=1100.0))


def test_rectangle_validation():
    with pytest.raises(DomainError):
        Z.Rectangle(1.0, 1.0, 0, 1)
    r = Z.Rectangle(0.6, 0.9, 10, 20)
    a, b = r.split()
    assert a.t_hi == b.t_lo == 15


def test_polynomial_winding_and_listing():
    roots = [0.8 + 3.3j, 0.7 + 5.1j, 0.9 + 5.15j, 2.5 + 4j]
    ev = Z.LineEvaluator(_poly(roots))
    rect = Z.Rectangle(0.6, 1.0, 3.0, 6.0)
    assert Z.winding_count(rect, ev) == 3
    zs = Z.list_zeros(rect, ev)
    assert len(zs) == 3
    got = [z.rho for z in zs]
    want = sorted((r for r in roots if rect.contains(r)), key=lambda z: z.imag)
    for a, b in zip(got, want):
        assert abs(a - b) < 1e-9
    assert all(z.converged and z.verified and z.residual < 1e-10 for z in zs)
    assert [z.gamma for z in zs] == sorted(z.gamma for z in zs)


def test_zero_free_rect_lists_nothing():
    ev = Z.LineEvaluator(_poly([5 + 5j]))
    assert Z.list_zeros(Z.Rectangle(0.6, 1.0, 0.0, 2.0), ev) == []


def test_dirichlet_polynomial_zeros():
    ev = Z.LineEvaluator(_dirichlet)
    rect = Z.Rectangle(1.2, 2.0, 1.0, 60.0)
    zs = Z.list_zeros(rect, ev)
    want = _zeros_of_dirichlet(1.0, 60.0)
    assert len(zs) == len(want) == Z.count_rect(rect, ev)
    for z, g in zip(zs, want):
        assert abs(z.beta - BETA) < 1e-9 and abs(z.gamma - g) < 1e-9


@settings(max_examples=15)
@given(st.floats(1.1, 1.55), st.floats(1.6, 2.2), st.floats(0.0, 30.0), st.floats(5.0, 30.0), st.floats(0.2, 0.8))
def test_winding_additivity_property(s1, s2, t1, h, frac):
    ev = Z.LineEvaluator(_dirichlet)
    whole = Z.count_window(s1, s2, t1, t1 + h, ev)
    m = t1 + frac * h
    parts = Z.count_window(s1, s2, t1, m, ev) + Z.count_window(s1, s2, m, t1 + h, ev)
    assert whole == parts == len(_zeros_of_dirichlet(t1, t1 + h))


def test_boundary_zero_is_jittered():
    ev = Z.LineEvaluator(_dirichlet)
    g = _zeros_of_dirichlet(0, 10)[0]
    # a zero sitting exactly on the lower edge
    n = Z.count_window(1.2, 2.0, g, 20.0, ev)
    assert n in (len(_zeros_of_dirichlet(g - 1e-5, 20.0)), len(_zeros_of_dirichlet(g + 1e-5, 20.0)))


def test_d4_zero_free_strip(ev4):
    assert Z.count_window(0.6, 0.95, 10.0, 50.0, ev4) == 0
    assert Z.count_strip(0.6, 0.95, 100.0, ev4) == 0


def test_thin_strip_is_empty(ev39):
    assert Z.count_window(0.8, 0.8 + 1e-6, 100.0, 140.0, ev39) == 0


def test_additivity_on_epstein(ev39):
    whole = Z.count_window(0.55, 1.5, 100.0, 160.0, ev39)
    parts = Z.count_window(0.55, 1.5, 100.0, 130.0, ev39) + Z.count_window(0.55, 1.5, 130.0, 160.0, ev39)
    cols = Z.count_window(0.55, 0.8, 100.0, 160.0, ev39) + Z.count_window(0.8, 1.5, 100.0, 160.0, ev39)
    assert whole == parts == cols
    assert whole >= 1


def test_conjugate_windows(ev39):
    up = Z.count_window(0.55, 1.2, 200.0, 260.0, ev39)
    down = Z.count_window(0.55, 1.2, -260.0, -200.0, ev39)
    assert up == down


def test_list_matches_count_on_epstein(ev39):
    rect = Z.Rectangle(0.55, 1.5, 200.0, 240.0)
    zs = Z.list_zeros(rect, ev39)
    assert len(zs) == Z.count_rect(rect, ev39)
    for z in zs:
        assert z.converged and z.verified and z.residual < 1e-10
        assert rect.contains(z.rho)
        assert abs(ev39.line([z.beta], z.gamma)[0]) < 1e-9


def test_muller_on_polynomial():
    F = lambda z: (z - (0.7 + 2j)) * (z + 1)  # noqa: E731
    z, res, ok = Z.muller(F, 0.6 + 2.1j)
    assert ok and abs(z - (0.7 + 2j)) < 1e-12


def test_jensen_at_three_matches_direct_mean():
    ctx = make_context((1, 0, 1), t_max=100.0)
    jr = Z.jensen_integral(3.0, 10.0, ctx)
    x, w = np.polynomial.legendre.leggauss(1000)
    ts = 15 + 5 * x
    direct = np.sum(w * np.array([math.log(abs(epstein_zeta_line([3.0], t, ctx)[0])) for t in ts])) / 2
    assert abs(jr.value - direct) < 1e-6
    assert abs(jr.value - math.log(4)) < 0.2


def test_jensen_window_additivity(ev39):
    a = Z.jensen_integral(0.8, 100.0, ev39, t2=130.0)
    b = Z.jensen_integral(0.8, 130.0, ev39, t2=160.0)
    c = Z.jensen_integral(0.8, 100.0, ev39, t2=160.0)
    assert abs((30 * a.value + 30 * b.value) / 60 - c.value) < 1e-5
    with pytest.raises(DomainError):
        Z.jensen_integral(0.5, 100.0, ev39)


def test_littlewood_on_dirichlet_polynomial():
    ev = Z.LineEvaluator(_dirichlet)
    chk = Z.littlewood_check(1.2, 2.0, 40.0, ev)
    assert chk.n_zeros == len(_zeros_of_dirichlet(2.0, 40.0))
    assert abs(chk.zeros_side - 2 * math.pi * chk.n_zeros * (BETA - 1.2)) < 1e-8
    assert abs(chk.zeros_side - chk.integral_side) < 1e-4
    assert chk.holds()


def test_littlewood_on_epstein(ev39):
    chk = Z.littlewood_check(0.6, 100.0, 140.0, ev39)
    assert chk.unconverged == 0
    assert chk.holds()


def test_predicted_density_class_number_one():
    s4 = character_system(enumerate_classes(-4))
    t4 = build_euler_table(s4, 10**4)
    d = Z.predicted_density(0.6, 0.9, R.ModelConfig(P_max=10**4, n_samples=5000), s4, t4)
    assert abs(d.c) < 3 * d.std_error + 1e-12


def test_predicted_density_far_right(sys39, table39):
    d = Z.predicted_density(2.0, 3.0, R.ModelConfig(P_max=10**4, n_samples=5000), sys39, table39)
    assert abs(d.c) < 0.01


def test_predicted_density_positive(sys39, table39):
    d = Z.predicted_density(0.55, 0.95, R.ModelConfig(P_max=10**4, n_samples=20_000), sys39, table39)
    assert d.c > 5 * d.std_error
    assert abs(d.c - d.c_fd) < 0.05 * d.c


def test_fit_linear_density():
    c, rms = Z.fit_linear_density([(0, 10), (10, 30)], [5, 10])
    assert abs(c - 0.5) < 1e-15 and rms < 1e-12
