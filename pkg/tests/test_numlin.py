import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from cogarch import numlin
from cogarch.errors import (DegenerateSpectrum, IllConditioned, NumericOverflow,
                            SingularMatrix, ValidationError)


def test_mat_exp_basic():
    assert np.allclose(numlin.mat_exp(np.zeros((3, 3))), np.eye(3))
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    t = 0.7
    R = np.array([[np.cos(t), np.sin(t)], [-np.sin(t), np.cos(t)]])
    assert np.allclose(numlin.mat_exp(A, t), R, atol=1e-14)
    D = np.diag([-1.0, 2.0])
    assert np.allclose(numlin.mat_exp(D, -0.5), np.diag(np.exp([0.5, -1.0])))


def test_mat_exp_semigroup():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(4, 4))
    E = numlin.mat_exp(A, 0.3) @ numlin.mat_exp(A, 0.5)
    assert np.allclose(E, numlin.mat_exp(A, 0.8), rtol=1e-12, atol=1e-12)
    assert np.allclose(numlin.mat_exp(A, 1.0) @ numlin.mat_exp(A, -1.0), np.eye(4), atol=1e-12)


def test_mat_exp_errors():
    with pytest.raises(ValidationError):
        numlin.mat_exp(np.ones((2, 3)))
    with pytest.raises(ValidationError):
        numlin.mat_exp(np.array([[np.nan]]))
    with pytest.raises(NumericOverflow):
        numlin.mat_exp(np.array([[1.0]]), 1e7)
    with pytest.raises(NumericOverflow):
        numlin.mat_exp(np.array([[800.0]]))


def test_companion_eigs_ex7():
    beta = [1.2, 0.48 + np.pi ** 2, 0.064 + 0.4 * np.pi ** 2]
    z = numlin.companion_eigs(beta)
    expected = np.array([-0.4 - np.pi * 1j, -0.4, -0.4 + np.pi * 1j])
    assert np.max(np.abs(z - expected)) < 1e-12
    assert z[0] == np.conj(z[2])


def test_companion_eigs_simple():
    assert np.allclose(numlin.companion_eigs([2.0]), [-2.0])
    z = numlin.companion_eigs([3.0, 2.0])  # (z+1)(z+2)
    assert np.allclose(z, [-1.0, -2.0])


def test_companion_eigs_degenerate():
    with pytest.raises(DegenerateSpectrum):
        numlin.companion_eigs([2.0, 1.0])  # (z+1)^2
    with pytest.raises(ValidationError):
        numlin.companion_eigs([1.0, 0.0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6).filter(
    lambda r: min((abs(a - b) for i, a in enumerate(r) for b in r[i + 1:]), default=1) > 0.05
    and min(abs(x) for x in r) > 0.05))
def test_companion_eigs_matches_numpy(roots):
    beta = np.poly(roots)[1:]
    z = numlin.companion_eigs(beta)
    assert np.allclose(np.sort(z.real), np.sort(roots), atol=1e-7)
    # sorted by nonincreasing real part
    assert np.all(np.diff(z.real) <= 1e-9)


def test_aberth_against_eigvals():
    rng = np.random.default_rng(3)
    for _ in range(20):
        c = np.concatenate(([1.0], rng.normal(size=5)))
        z = numlin.aberth_roots(c)
        ref = np.roots(c)
        for r in ref:
            assert np.min(np.abs(z - r)) < 1e-8


def test_sort_spectrum_ties():
    z = numlin.sort_spectrum([-1 + 2j, -0.5, -1 - 2j, -1.0])
    assert z[0] == -0.5
    assert list(z[1:].imag) == [-2.0, 0.0, 2.0]


def test_vandermonde_diagonalizes():
    beta = [1.2, 0.48 + np.pi ** 2, 0.064 + 0.4 * np.pi ** 2]
    B = numlin.companion_matrix(beta)
    z = numlin.companion_eigs(beta)
    S = numlin.vandermonde_S(z, B)
    assert np.allclose(np.linalg.solve(S, B @ S), np.diag(z), atol=1e-10)
    assert np.allclose(S[0], 1.0)


def test_vandermonde_ill_conditioned():
    with pytest.raises(IllConditioned):
        numlin.vandermonde_S(np.array([-1.0, -1.0 - 1e-6, -1 - 2e-6]), max_cond=1e8)


def test_companion_matrix_charpoly():
    beta = [0.5, 1.5, 0.7]
    B = numlin.companion_matrix(beta)
    assert np.allclose(np.poly(B), [1.0] + beta)


def test_operator_norms():
    A = np.array([[1.0, -2.0], [3.0, 4.0]])
    assert numlin.operator_norm(A, 1) == 6.0
    assert numlin.operator_norm(A, np.inf) == 7.0
    assert np.isclose(numlin.operator_norm(A, 2), np.linalg.norm(A, 2))
    with pytest.raises(ValidationError):
        numlin.operator_norm(A, 3)


def test_vec_kron_identity():
    rng = np.random.default_rng(1)
    A, X, B = rng.normal(size=(3, 3, 3))
    lhs = numlin.vec(A @ X @ B)
    rhs = numlin.kron(B.T, A) @ numlin.vec(X)
    assert np.allclose(lhs, rhs)
    assert np.array_equal(numlin.unvec(numlin.vec(X), 3), X)
    with pytest.raises(ValidationError):
        numlin.unvec(np.ones(5), 2)


def test_solve_linear():
    A = np.array([[2.0, 1.0], [1.0, 3.0]])
    x = numlin.solve_linear(A, np.array([1.0, 2.0]))
    assert np.allclose(A @ x, [1.0, 2.0])
    with pytest.raises(SingularMatrix) as err:
        numlin.solve_linear(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))
    assert err.value.rank == 1


def test_lyapunov_gram_residual_and_scipy():
    rng = np.random.default_rng(2)
    for q in (1, 2, 4, 6):
        M = rng.normal(size=(q, q))
        Bt = M - (np.abs(np.linalg.eigvals(M).real).max() + 0.5) * np.eye(q)
        U = rng.normal(size=(q, q))
        U = U @ U.T
        L = numlin.lyapunov_gram(Bt, U)
        assert np.abs(Bt @ L + L @ Bt.T + U).max() <= 1e-10 * max(np.abs(U).max(), 1)
        assert np.allclose(L, sla.solve_continuous_lyapunov(Bt, -U), atol=1e-10)


def test_lyapunov_gram_scalar_integral():
    # int_0^inf exp(2 b s) ds = -1/(2b)
    L = numlin.lyapunov_gram(np.array([[-0.5]]), np.array([[1.0]]))
    assert np.isclose(L[0, 0], 1.0)


def test_lyapunov_gram_unstable():
    with pytest.raises(ValidationError):
        numlin.lyapunov_gram(np.array([[0.1]]), np.array([[1.0]]))


def test_real_part():
    assert numlin.real_part(np.array([1 + 1e-14j]))[0] == 1.0
    with pytest.raises(ValidationError):
        numlin.real_part(np.array([1 + 1e-3j]))
