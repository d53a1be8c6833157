import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dlmcov.beliefs import (
    ExchangeablePatternSpec, FourthOrderBeliefs, NotPositive, expand_pattern,
    gaussian_fourth_moments, index_symmetric,
)
from dlmcov.products import (
    DimensionMismatch, as_matrix, as_tensor, star_product, tensor_product, unvec, vec, vec_index,
)

from conftest import random_psd


def test_vec_column_stacking():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert vec(A).tolist() == [1, 3, 2, 4]
    assert np.array_equal(unvec(vec(A), 2), A)
    assert vec(A)[vec_index(0, 1, 2)] == 2


def test_tensor_product_entries():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    B = np.array([[5.0, 6.0], [7.0, 8.0]])
    T = tensor_product(A, B)
    # 1-based row r(l-1)+j, column r(m-1)+k holds a_jk b_lm
    assert T[0, 1] == 10  # j=1,l=1,k=2,m=1 -> a_12 b_11
    assert T[0, 2] == 6   # j=1,l=1,k=1,m=2 -> a_11 b_12
    for j in range(2):
        for k in range(2):
            for l in range(2):
                for m in range(2):
                    assert T[2 * l + j, 2 * m + k] == A[j, k] * B[l, m]


def test_star_product_entries():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    T = star_product(A, np.eye(2))
    # a_12 b_ll lands at row r(l-1)+1, column r(1)+l
    expected = np.zeros((4, 4))
    expected[0, 2] = 1
    expected[2, 3] = 1
    assert np.array_equal(T, expected)


def test_products_reject_mismatch():
    with pytest.raises(DimensionMismatch):
        tensor_product(np.eye(2), np.eye(3))
    with pytest.raises(DimensionMismatch):
        star_product(np.eye(2), np.eye(3))


def test_star_of_identity_is_commutation():
    K = star_product(np.eye(3), np.eye(3))
    A = np.arange(9.0).reshape(3, 3)
    assert np.array_equal(K @ vec(A), vec(A.T))


@pytest.mark.parametrize("seed", range(20))
def test_isserlis_equals_tensor_plus_star(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 9))
    V = random_psd(rng, d)
    lhs = gaussian_fourth_moments(V)
    rhs = tensor_product(V, V) + star_product(V, V)
    assert np.abs(lhs - rhs).max() <= 1e-12 * max(1.0, np.abs(lhs).max())


def test_as_tensor_round_trip():
    M = np.arange(16.0).reshape(4, 4)
    assert np.array_equal(as_matrix(as_tensor(M, 2)), M)


def test_expand_pattern_values():
    M = expand_pattern(ExchangeablePatternSpec(9 / 4, 9 / 16, 1 / 5, 6))
    T = as_tensor(M, 6)
    assert T[2, 2, 2, 2] == 2.25
    assert T[1, 4, 1, 4] == 0.5625 and T[1, 4, 4, 1] == 0.5625
    assert T[0, 0, 3, 3] == 0.2
    assert T[0, 1, 2, 3] == 0
    assert index_symmetric(M)


def test_expand_pattern_scalar():
    assert expand_pattern(ExchangeablePatternSpec(7.0, 3.0, 2.0, 1)).tolist() == [[7.0]]


def test_expand_pattern_not_positive():
    with pytest.raises(NotPositive):
        expand_pattern(ExchangeablePatternSpec(1.0, 0.0, 5.0, 3))
    with pytest.raises(NotPositive):
        expand_pattern(ExchangeablePatternSpec(-1.0, 0.0, 0.0, 2))


def test_isserlis_example_V(example_model):
    T = as_tensor(gaussian_fourth_moments(example_model.V), 6)
    assert T[0, 0, 0, 0] == 2592
    assert T[0, 1, 0, 1] == 1312
    assert T[0, 0, 1, 1] == 32


def test_isserlis_diagonal():
    a, b = 2.0, 5.0
    T = as_tensor(gaussian_fourth_moments(np.diag([a, b])), 2)
    assert T[0, 0, 0, 0] == 2 * a * a
    assert T[0, 1, 0, 1] == a * b
    assert T[0, 0, 1, 1] == 0


def test_isserlis_monte_carlo():
    rng = np.random.default_rng(11)
    V = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, -0.3], [0.0, -0.3, 1.5]])
    x = rng.multivariate_normal(np.zeros(3), V, size=400_000)
    y = (x[:, :, None] * x[:, None, :]).transpose(0, 2, 1).reshape(len(x), -1)
    emp = np.cov(y.T)
    assert np.abs(emp - gaussian_fourth_moments(V)).max() < 0.1


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 10_000))
def test_isserlis_permutation_invariance(d, seed):
    rng = np.random.default_rng(seed)
    V = random_psd(rng, d)
    P = np.eye(d)[rng.permutation(d)]
    lhs = as_tensor(gaussian_fourth_moments(P @ V @ P.T), d)
    from dlmcov.products import conjugate
    rhs = conjugate(as_tensor(gaussian_fourth_moments(V), d), P)
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_beliefs_validate_rejects_indefinite():
    bad = -np.eye(4)
    with pytest.raises(NotPositive):
        FourthOrderBeliefs(bad, np.zeros((4, 4)), np.zeros((4, 4)), np.zeros((4, 4))).validate()


def test_example_beliefs_shapes(example_beliefs):
    assert example_beliefs.r == 6 and example_beliefs.p == 6
    example_beliefs.validate()
    z = FourthOrderBeliefs.zeros(3)
    assert all(np.count_nonzero(m) == 0 for m in z.as_tuple())
