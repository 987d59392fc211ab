import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from epzeros._arith import is_fundamental, jacobi, kronecker, primes_upto
from epzeros.errors import DomainError, InvalidDiscriminant, NonPositiveDefinite
from epzeros.qf import (
    INERT, RAMIFIED, SPLIT, BinaryQuadraticForm, build_euler_table, character_system, compose, compose_forms,
    enumerate_classes, reduce_form, reduced_forms, represented_values, splitting_type, system_for_form,
)

DISCS = [-3, -4, -7, -8, -15, -20, -23, -39, -47, -56, -71, -84, -95, -104, -260]


def _act(f, M):
    """Form f composed with the substitution (m, n) -> M (m, n)."""
    a, b, c = f
    (p, q), (r, s) = M
    return (a * p * p + b * p * r + c * r * r, 2 * a * p * q + b * (p * s + q * r) + 2 * c * r * s,
            a * q * q + b * q * s + c * s * s)


def _orbit(f, depth):
    S = ((0, -1), (1, 0))
    T = ((1, 1), (0, 1))
    Ti = ((1, -1), (0, 1))
    seen = {f}
    front = [f]
    for _ in range(depth):
        nxt = []
        for g in front:
            for M in (S, T, Ti):
                h = _act(g, M)
                if h not in seen:
                    seen.add(h)
                    nxt.append(h)
        front = nxt
    return seen


def test_reduce_examples():
    assert reduce_form((1, 0, 1)).as_tuple() == (1, 0, 1)
    assert reduce_form((2, 2, 3)).as_tuple() == (2, 2, 3)
    assert reduce_form((3, 8, 6)).as_tuple() == (1, 0, 2)
    # word search oracle: (1, 0, 2) lies in the orbit of (3, 8, 6)
    assert (1, 0, 2) in _orbit((3, 8, 6), 6)


def test_reduce_rejects_indefinite():
    with pytest.raises(NonPositiveDefinite):
        reduce_form((1, 3, 1))
    with pytest.raises(NonPositiveDefinite):
        BinaryQuadraticForm(-1, 0, -1)


@given(st.sampled_from(DISCS), st.integers(0, 10), st.lists(st.sampled_from("STt"), max_size=12))
def test_reduce_is_class_invariant(D, k, word):
    forms = reduced_forms(D)
    f = forms[k % len(forms)].as_tuple()
    g = f
    mats = {"S": ((0, -1), (1, 0)), "T": ((1, 1), (0, 1)), "t": ((1, -1), (0, 1))}
    for ch in word:
        g = _act(g, mats[ch])
    r = reduce_form(g)
    assert r.D == D
    assert r.is_reduced()
    assert r.as_tuple() == f


@pytest.mark.parametrize("D,h", [(-3, 1), (-4, 1), (-7, 1), (-23, 3), (-39, 4), (-47, 5), (-71, 7), (-84, 4), (-260, 8)])
def test_class_numbers(D, h):
    assert enumerate_classes(D).h == h


def test_class_group_examples():
    g4 = enumerate_classes(-4)
    assert [f.as_tuple() for f in g4.classes] == [(1, 0, 1)]
    g23 = enumerate_classes(-23)
    assert {f.as_tuple() for f in g23.classes} == {(1, 1, 6), (2, 1, 3), (2, -1, 3)}
    g39 = enumerate_classes(-39)
    assert g39.h == 4 and g39.cyclic_orders == (4,)
    i, k = g23.index_of((2, 1, 3)), g23.index_of((2, -1, 3))
    assert compose(g23, i, k) == 0


def test_invalid_discriminant():
    for D in (5, -5, -6, 0):
        with pytest.raises(InvalidDiscriminant):
            enumerate_classes(D)


@pytest.mark.parametrize("D", DISCS)
def test_group_axioms(D):
    g = enumerate_classes(D)
    T = g.composition_table
    h = g.h
    assert int(np.prod(g.cyclic_orders)) == h
    for i in range(h):
        assert T[0, i] == i
        assert T[i, g.inverse(i)] == 0
        assert g.classes[g.inverse(i)].as_tuple() == reduce_form((g.classes[i].a, -g.classes[i].b, g.classes[i].c)).as_tuple()
        for k in range(h):
            assert T[i, k] == T[k, i]
            for m in range(h):
                assert T[T[i, k], m] == T[i, T[k, m]]


def test_compose_order_two_class_d39():
    g = enumerate_classes(-39)
    i = g.index_of((2, 1, 5))
    sq = compose(g, i, i)
    assert sq != 0 and compose(g, sq, sq) == 0
    assert g.classes[sq].as_tuple() == (3, 3, 4)


@given(st.sampled_from([-23, -39, -47, -56, -71, -84]), st.integers(0, 10**6))
def test_compose_represents_products(D, seed):
    g = enumerate_classes(D)
    rng = np.random.default_rng(seed)
    i, k = (int(x) for x in rng.integers(0, g.h, 2))
    f1, f2 = g.classes[i], g.classes[k]
    comp = g.classes[compose(g, i, k)]
    bound = 60
    r1 = sorted(represented_values(f1, bound))
    r2 = sorted(represented_values(f2, bound))
    target = represented_values(comp, bound * bound)
    for m in r1[:4]:
        for n in r2[:4]:
            if math.gcd(m, n) == 1:
                assert m * n in target


def test_compose_forms_discriminant():
    f = compose_forms((2, 1, 3), (2, 1, 3))
    assert f.D == -23


@pytest.mark.parametrize("D", DISCS)
def test_characters(D):
    g = enumerate_classes(D)
    sys = character_system(g, anchor=g.h - 1)
    T = g.composition_table
    full = sys.full_chars()
    assert full.shape == (g.h, g.h)
    # homomorphism and unit modulus
    for chi in full:
        assert np.allclose(np.abs(chi), 1)
        for a in range(g.h):
            for b in range(g.h):
                assert abs(chi[T[a, b]] - chi[a] * chi[b]) < 1e-12
    # orthogonality
    G = full @ full.conj().T
    assert np.allclose(G, g.h * np.eye(g.h), atol=1e-12)
    # one per conjugate pair
    n_real = sum(sys.is_real)
    assert sys.J == n_real + (g.h - n_real) // 2
    C = sys.chars
    for j in range(sys.J):
        for k in range(j + 1, sys.J):
            assert not np.allclose(C[j], C[k])
            assert not np.allclose(C[j], C[k].conj())
    # coefficients
    pref = sys.w_D / g.h
    for j in range(sys.J):
        want = pref * (1 if sys.is_real[j] else 2) * C[j][sys.anchor_class].real
        assert abs(sys.coeffs[j] - want) < 1e-15
    # angles stored exactly
    assert all(isinstance(a, Fraction) for row in sys.angles for a in row)


def test_character_examples():
    s4 = character_system(enumerate_classes(-4))
    assert s4.J == 1 and s4.coeffs[0] == 4 and s4.w_D == 4
    assert character_system(enumerate_classes(-3)).w_D == 6
    s23 = character_system(enumerate_classes(-23))
    assert s23.J == 2
    assert np.allclose(s23.coeffs, [2 / 3, 4 / 3])
    s39 = character_system(enumerate_classes(-39))
    assert s39.J == 3 and sum(s39.is_real) == 2


def test_splitting_examples():
    assert splitting_type(-4, 2).kind == "ramified"
    assert splitting_type(-4, 3).kind == "inert"
    g = enumerate_classes(-23)
    st23 = splitting_type(-23, 2, g)
    assert st23.kind == "split"
    assert st23.form.as_tuple() == (2, 1, 3)
    assert st23.class_index == g.index_of((2, 1, 3))


@pytest.mark.parametrize("D", [-4, -23, -39, -56, -84])
def test_splitting_matches_kronecker(D):
    g = enumerate_classes(D)
    for p in primes_upto(200):
        s = splitting_type(D, int(p), g)
        k = kronecker(D, int(p))
        assert s.kind == {1: "split", -1: "inert", 0: "ramified"}[k]
        if s.kind != "inert":
            # the prime form represents p
            assert int(p) in represented_values(s.form, int(p))


def test_kronecker_matches_jacobi():
    for D in (-23, -39, -4, -7):
        for n in range(3, 100, 2):
            if math.gcd(D, n) == 1:
                assert kronecker(D, n) == jacobi(D % n, n)
    assert is_fundamental(-23) and is_fundamental(-4) and not is_fundamental(-16)


def test_euler_table_d4():
    sys = character_system(enumerate_classes(-4))
    tab = build_euler_table(sys, 100)
    assert tab.coeff(0, 2, 1) == 1.0 and tab.coeff(0, 2, 2) == 0.5 and abs(tab.coeff(0, 2, 3) - 1 / 3) < 1e-15
    assert tab.coeff(0, 5, 1) == 2.0
    assert tab.coeff(0, 3, 1) == 0.0
    assert tab.coeff(0, 3, 2) == 1.0


def test_euler_table_d23(sys23):
    tab = build_euler_table(sys23, 1000)
    cplx = [j for j in range(sys23.J) if not sys23.is_real[j]][0]
    assert abs(tab.coeff(cplx, 2, 1) + 1.0) < 1e-14
    assert tab.coeff(0, 2, 1) == 2.0


@pytest.mark.parametrize("form", [(1, 1, 6), (1, 1, 10), (2, 1, 5), (1, 1, 2), (1, 0, 14)])
def test_euler_table_invariants(form):
    sys = system_for_form(form)
    tab = build_euler_table(sys, 2000)
    assert np.all(np.isfinite(tab.coeffs))
    first = tab.pn_exp == 1
    assert np.all(np.abs(tab.coeffs[:, first]) <= 2 + 1e-14)
    chars = sys.chars
    for k, p in enumerate(tab.primes[:60]):
        p = int(p)
        kind = tab.kinds[k]
        for n in range(1, 4):
            try:
                a = [tab.coeff(j, p, n) for j in range(sys.J)]
            except KeyError:
                break
            if kind == INERT:
                want = [0.0 if n % 2 else 2.0 / n] * sys.J
            elif kind == SPLIT:
                cl = int(tab.prime_class[k])
                want = [2 * (chars[j][cl] ** n).real / n for j in range(sys.J)]
            else:
                assert kind == RAMIFIED
                cl = int(tab.prime_class[k])
                want = [(chars[j][cl] ** n).real / n for j in range(sys.J)]
            assert np.allclose(a, want, atol=1e-14)


def test_to_dict_roundtrip(sys23):
    import json

    d = json.loads(json.dumps(sys23.to_dict()))
    assert d["h"] == 3 and d["J"] == 2
    assert d["forms"][0] == [1, 1, 6]


def test_non_primitive_form_rejected():
    with pytest.raises(DomainError, match="primitive"):
        system_for_form((2, 2, 6))
