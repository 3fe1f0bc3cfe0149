import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cliffsurf.algebra import (
    AlgebraContext,
    Multivector,
    adjoint,
    basis_blade,
    general_inverse,
    geometric_product,
    grade_involution,
    grade_project,
    inner,
    inverse,
    inverse_in_E,
    membership,
    norm_map,
    orthogonal_matrix,
    quad_form,
    random_unit_vector,
    reversion,
    twisted_adjoint,
    volume_form,
)
from cliffsurf.errors import DimensionMismatch, NotInvertible
from cliffsurf.properties import brute_blade_product
from oracle import blade_sign, dense_product


@pytest.mark.parametrize("r", [1, 2, 3, 4, 5])
def test_blade_products_match_closed_form_sign(r):
    for a in range(1 << r):
        for b in range(1 << r):
            p = geometric_product(Multivector(r, {a: 1.0}), Multivector(r, {b: 1.0}))
            assert p.coeffs == {a ^ b: float(blade_sign(a, b))}


@pytest.mark.parametrize("r", [2, 3, 4])
def test_two_oracles_agree(r):
    for a in range(1 << r):
        ia = tuple(i for i in range(r) if a >> i & 1)
        for b in range(1 << r):
            ib = tuple(i for i in range(r) if b >> i & 1)
            s, idx = brute_blade_product(ia, ib)
            assert s == blade_sign(a, b)
            assert sum(1 << i for i in idx) == a ^ b


def test_dense_random_products_r4():
    rng = np.random.default_rng(7)
    A, B = rng.standard_normal((200, 16)), rng.standard_normal((200, 16))
    ours = (Multivector.from_dense(4, A) * Multivector.from_dense(4, B)).dense()
    assert np.max(np.abs(ours - dense_product(4, A, B))) < 1e-12


def test_generators_square_to_minus_one():
    for i in range(1, 6):
        e = basis_blade(5, i)
        assert (e * e).allclose(Multivector.scalar(5, -1.0))


def test_volume_form_squares():
    for n in range(2, 6):
        om = volume_form(n, 6)
        assert (om * om).allclose(Multivector.scalar(6, (-1.0) ** (n * (n + 1) // 2)))


coef = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


@st.composite
def mvs(draw, r=4):
    return Multivector(r, {m: draw(coef) for m in range(1 << r)})


@settings(max_examples=60, deadline=None)
@given(mvs(), mvs(), mvs())
def test_associative_and_distributive(a, b, c):
    assert ((a * b) * c).allclose(a * (b * c), atol=1e-9)
    assert (a * (b + c)).allclose(a * b + a * c, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(mvs(), mvs())
def test_reversion_and_involution(a, b):
    assert reversion(a * b).allclose(reversion(b) * reversion(a), atol=1e-9)
    assert grade_involution(a * b).allclose(grade_involution(a) * grade_involution(b), atol=1e-9)
    assert grade_involution(grade_involution(a)).allclose(a)
    assert a.conj().allclose(reversion(grade_involution(a)))


@settings(max_examples=60, deadline=None)
@given(st.lists(coef, min_size=4, max_size=4))
def test_norm_map_on_vectors_is_quadratic_form(c):
    v = Multivector.vector(4, c)
    assert norm_map(v).allclose(Multivector.scalar(4, sum(x * x for x in c)), atol=1e-9)
    assert (v * v).allclose(Multivector.scalar(4, -sum(x * x for x in c)), atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(mvs(), mvs())
def test_quad_form_is_coefficient_sum_of_squares(a, b):
    assert np.isclose(quad_form(a), sum(c * c for c in a.coeffs.values()))
    assert np.isclose(norm_map(a).scalar_part(), quad_form(a))
    assert np.isclose(inner(a, b), inner(b, a))


def test_inverse_in_E_and_general_inverse():
    rng = np.random.default_rng(3)
    x = random_unit_vector(4, rng) * random_unit_vector(4, rng) * 2.0
    assert (x * inverse_in_E(x)).allclose(Multivector.scalar(4))
    a = Multivector(4, {0: 2.0, 3: 0.5, 15: 0.3})
    inv, cond = general_inverse(a)
    assert (a * inv).allclose(Multivector.scalar(4), atol=1e-12)
    assert cond < 10
    assert (inverse(a) * a).allclose(Multivector.scalar(4), atol=1e-12)


def test_singular_element_raises():
    # 1 + e1e2e3e4 squares onto a zero divisor: (1 + w)(1 - w) = 1 - w^2 = 0
    w = volume_form(4, 4)
    with pytest.raises(NotInvertible):
        inverse(Multivector.scalar(4) + w)


def test_twisted_adjoint_reflects():
    rng = np.random.default_rng(11)
    for _ in range(20):
        u = random_unit_vector(5, rng)
        M = orthogonal_matrix(u)
        assert np.allclose(M.T @ M, np.eye(5), atol=1e-12)
        assert np.isclose(np.linalg.det(M), -1.0)
        v = random_unit_vector(5, rng)
        assert np.isclose(quad_form(twisted_adjoint(u, v)), quad_form(v))


def test_adjoint_by_rotor_is_rotation():
    rng = np.random.default_rng(5)
    x = random_unit_vector(4, rng) * random_unit_vector(4, rng)
    M = orthogonal_matrix(x, twisted=False)
    assert np.isclose(np.linalg.det(M), 1.0)
    v = random_unit_vector(4, rng)
    assert np.isclose(quad_form(adjoint(x, v)), 1.0)


def test_membership_examples():
    e12 = basis_blade(4, 1, 2)
    assert membership(e12, "J") and membership(e12, "M_n", 2) and membership(e12, "Spin")
    non_simple = (e12 + basis_blade(4, 3, 4)) * (0.5**0.5)
    assert not membership(non_simple, "M_n", 2)
    assert membership(basis_blade(4, 1), "Pin") and not membership(basis_blade(4, 1), "Spin")
    assert membership(basis_blade(4, 1), "D1") and membership(Multivector.scalar(4), "D0")


def test_batched_arithmetic_matches_loop():
    rng = np.random.default_rng(0)
    A, B = rng.standard_normal((5, 8)), rng.standard_normal((5, 8))
    batch = Multivector.from_dense(3, A) * Multivector.from_dense(3, B)
    for k in range(5):
        single = Multivector.from_dense(3, A[k]) * Multivector.from_dense(3, B[k])
        assert np.allclose(batch.dense()[k], single.dense())


def test_grade_projection_and_json_roundtrip():
    a = Multivector(3, {0: 1.0, 1: 2.0, 3: -1.5, 7: 0.25})
    assert grade_project(a, 2).coeffs == {3: -1.5}
    back = Multivector.from_json(json.dumps(a.to_json()))
    assert back.allclose(a)


def test_guards():
    with pytest.raises(ValueError):
        Multivector(17, {})
    with pytest.raises(ValueError):
        Multivector(3, {8: 1.0})
    with pytest.raises(DimensionMismatch):
        Multivector(3, {1: 1.0}) * Multivector(4, {1: 1.0})
    with pytest.raises(ValueError):
        AlgebraContext(4, tol=0.0)
