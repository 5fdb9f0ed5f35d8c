from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from functal import linalg as la
from functal.errors import DimensionError

from conftest import int_matrices, square_and_rows


def test_exact_lift_rejects_floats():
    with pytest.raises(TypeError):
        la.as_exact([[0.5, 1]])
    M = la.as_exact([[1, "2/3"]])
    assert M[0, 1] == Fraction(2, 3)


def test_wants_exact_only_for_integers_and_fractions():
    assert la.wants_exact(np.eye(2, dtype=int), [[Fraction(1, 2)]])
    assert not la.wants_exact(np.eye(2))


@pytest.mark.parametrize("M, r", [
    ([[1, 2], [2, 4]], 1),
    ([[0, 0], [0, 0]], 0),
    ([[1, 0, 0], [0, 1, 0], [0, 0, 1]], 3),
    ([[1, 1, 1], [1, 2, 3], [2, 3, 4]], 2),
])
def test_rank_small_cases(M, r):
    assert la.numerical_rank(la.as_exact(M)) == r
    assert la.numerical_rank(np.array(M, dtype=float)) == r


@given(int_matrices(4, 5))
def test_exact_rank_matches_float_rank_on_small_integers(M):
    # integer matrices this small are far from rank-deficient in float terms
    assert la.numerical_rank(M) == np.linalg.matrix_rank(la.as_float(M))


@given(int_matrices(3, 5))
def test_null_space_is_annihilated_and_complements_rank(M):
    K = la.null_space(M)
    assert K.dim + la.numerical_rank(M) == 5
    assert all(x == 0 for x in (M @ K.basis).flat)
    Kf = la.null_space(la.as_float(M))
    assert Kf.dim == K.dim
    assert np.allclose(la.as_float(M) @ Kf.basis, 0, atol=1e-10)


def test_rref_and_inverse():
    M = la.as_exact([[2, 1], [1, 1]])
    R, piv = la.rref(M)
    assert piv == [0, 1]
    Minv = la.exact_inverse(M)
    assert (M @ Minv == la.eye(2, exact=True)).all()


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(int_matrices(n, n), int_matrices(2, n))))
def test_duality_identity(pair):
    A, C = pair
    assert (la.ctrb_matrix(A.T, C.T) == la.obsv_matrix(C, A).T).all()


def test_obsv_matrix_example():
    A = la.as_exact([[0, 1, 0], [0, 0, 1], [0, 0, 0]])
    O = la.obsv_matrix(la.as_exact([[0, 0, 1]]), A)
    assert O.tolist() == [[0, 0, 1], [0, 0, 0], [0, 0, 0]]


def test_subspace_intersection():
    S1 = la.column_space(la.as_exact([[1, 0], [0, 1], [0, 0]]))
    S2 = la.column_space(la.as_exact([[1, 0], [0, 0], [0, 1]]))
    S = la.subspace_intersect(S1, S2)
    assert S.dim == 1
    v = S.basis[:, 0]
    assert v[1] == 0 and v[2] == 0 and v[0] != 0


def test_row_space_inclusion():
    M = la.as_exact([[1, 1, 0], [0, 0, 1]])
    assert la.row_space_inclusion(la.as_exact([[2, 2, 3]]), M)
    assert not la.row_space_inclusion(la.as_exact([[1, 0, 0]]), M)


def test_matrix_exponential_nilpotent_series():
    N = np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]], dtype=float)
    t = 0.7
    # the series stops after the quadratic term
    expected = np.eye(3) + N * t + N @ N * t ** 2 / 2
    assert np.allclose(la.matrix_exponential(N, t), expected, atol=1e-15)


def test_gramian_closed_forms():
    # scalar a: W = c^2 (e^{2 a t} - 1) / (2 a)
    a, c, t = -0.8, 1.5, 2.0
    W = la.finite_horizon_gramian([[a]], [[c]], t)
    assert W[0, 0] == pytest.approx(c * c * (np.exp(2 * a * t) - 1) / (2 * a), rel=1e-13)
    # A = 0: W = t C^T C
    C = np.array([[1.0, 2.0, 0.0]])
    assert np.allclose(la.finite_horizon_gramian(np.zeros((3, 3)), C, 1.5), 1.5 * C.T @ C)


def test_gramian_nilpotent_chain():
    # C = e3^T, A the upper shift: C e^{As} = e3^T, so W = t e3 e3^T
    A = np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]], dtype=float)
    W = la.finite_horizon_gramian(A, [[0, 0, 1]], 1.0)
    expected = np.zeros((3, 3))
    expected[2, 2] = 1.0
    assert np.allclose(W, expected, atol=1e-14)


@given(st.integers(0, 10_000))
def test_van_loan_agrees_with_quadrature(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    A = rng.standard_normal((n, n))
    B = rng.standard_normal((n, 2))
    for side, M in ((la.OBSERVABILITY, B.T), (la.CONTROLLABILITY, B)):
        W1 = la.finite_horizon_gramian(A, M, 1.0, side)
        W2 = la.gramian_quadrature(A, M, 1.0, side)
        assert np.linalg.norm(W1 - W2) <= 1e-8 * np.linalg.norm(W2)


def test_controllability_gramian_matches_integral_by_lyapunov():
    # stable A: W(inf) solves A W + W A^T + B B^T = 0
    A = np.array([[-1.0, 2.0], [0.0, -3.0]])
    B = np.array([[1.0], [1.0]])
    W = la.finite_horizon_gramian(A, B, 40.0, la.CONTROLLABILITY)
    W_inf = scipy.linalg.solve_continuous_lyapunov(A, -B @ B.T)
    assert np.allclose(W, W_inf, atol=1e-12)


def test_gramian_factor_spans_gramian_image():
    A = np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]], dtype=float)
    C = np.array([[0, 1, 0]])
    L = la.gramian_factor(A, C, 1.0)
    W = la.finite_horizon_gramian(A, C, 1.0)
    assert np.allclose(L.T @ L, W, atol=1e-13)
    image, kernel, angle = la.factor_split(L, 2)
    assert angle < 1e-12
    assert np.allclose(kernel.basis[:, 0] @ np.array([1.0, 0, 0]) ** 2, 1.0)


def test_subspaces_orthogonal_zero_subspace():
    S = la.Subspace(2, np.array([[1.0], [0.0]]))
    assert la.subspaces_orthogonal(S, la.Subspace.trivial(2))
    assert not la.subspaces_orthogonal(S, S)


def test_image_of_small_map_is_zero():
    S = la.Subspace(2, np.array([[1.0], [0.0]]))
    assert la.image_of(np.array([[1e-14, 1.0]]), S).dim == 0


def test_gramian_dimension_errors():
    with pytest.raises(DimensionError):
        la.finite_horizon_gramian(np.eye(2), np.ones((1, 3)), 1.0)
    with pytest.raises(ValueError):
        la.finite_horizon_gramian(np.eye(2), np.ones((1, 2)), 0.0)


@given(square_and_rows())
def test_float_and_exact_rank_agree_on_obsv_stack(pair):
    A, F = pair
    O = la.obsv_matrix(F, A)
    assert la.numerical_rank(O) == np.linalg.matrix_rank(la.as_float(O))
