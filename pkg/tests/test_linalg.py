import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from etcor import linalg
from etcor.errors import DimensionError, DomainError, SingularityError
from etcor.graph import Topology, compute_h_matrix

M = np.array([[0.0, 1.0], [-25.0, -10.0]])
S2 = np.array([[0.0, 2.0], [-2.0, 0.0]])

finite = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)


def square(n):
    return arrays(np.float64, (n, n), elements=finite)


def sorted_eigs(a):
    ev = linalg.eigenvalues(a).eigenvalues
    return ev[np.lexsort((ev.imag, ev.real))]


def test_eigenvalues_identity():
    assert np.allclose(sorted_eigs(np.eye(2)), [1, 1])


def test_eigenvalues_harmonic():
    assert np.allclose(sorted_eigs(S2), [-2j, 2j], atol=1e-12)


def test_eigenvalues_repeated_internal_model_pole():
    assert np.allclose(sorted_eigs(M), [-5, -5], atol=1e-6)


def test_eigenvalues_non_square():
    with pytest.raises(DimensionError):
        linalg.eigenvalues(np.zeros((2, 3)))


def test_spectrum_clusters_merge_repeated_root():
    spec = linalg.eigenvalues(M)
    assert len(spec.clusters()) == 1


def test_hurwitz():
    assert linalg.is_hurwitz(M)
    assert not linalg.is_hurwitz(S2)


def test_positive_definite_examples():
    assert linalg.is_positive_definite(np.eye(3))
    assert not linalg.is_positive_definite([[1, 2], [2, 1]])
    assert linalg.is_positive_definite(compute_h_matrix(Topology.default()))


def test_positive_definite_rejects_asymmetric():
    with pytest.raises(DomainError):
        linalg.is_positive_definite([[1, 1], [0, 1]])


def test_semisimple():
    assert linalg.is_semisimple(S2)
    assert linalg.is_semisimple(np.diag([1.0, 1.0, 2.0]))
    assert not linalg.is_semisimple([[0.0, 1.0], [0.0, 0.0]])


def test_controllability_rank():
    assert linalg.controllability_rank(M, [[0], [1]]) == 2
    assert linalg.controllability_rank(np.eye(2), [[0], [1]]) == 1


def test_sylvester_scalar():
    assert np.allclose(linalg.solve_sylvester([[0.0]], [[1.0]], [[3.0]]), [[3.0]])


def test_sylvester_internal_model_instance():
    phi = np.array([[0.0, 1.0], [-4.0, 0.0]])
    c = np.array([[0.0], [1.0]]) @ np.array([[1.0, 0.0]])
    T = linalg.solve_sylvester(M, phi, c)
    assert np.abs(T @ phi - M @ T - c).max() <= 1e-9
    # independent oracle: XB - AX = C is scipy's (-A)X + XB = C
    assert np.allclose(T, scipy.linalg.solve_sylvester(-M, phi, c), atol=1e-12)
    assert np.allclose(np.linalg.inv(T), [[21, 10], [-40, 21]], atol=1e-9)


def test_sylvester_shared_eigenvalue():
    with pytest.raises(SingularityError):
        linalg.solve_sylvester(S2, S2, np.eye(2))


def test_sylvester_dimension_mismatch():
    with pytest.raises(DimensionError):
        linalg.solve_sylvester(np.eye(2), np.eye(3), np.eye(2))


def test_minimal_polynomial_examples():
    assert np.allclose(linalg.minimal_polynomial(S2), [4, 0], atol=1e-10)
    assert np.allclose(linalg.minimal_polynomial(np.eye(2)), [-1])
    assert np.allclose(linalg.minimal_polynomial(np.diag([1.0, 1.0, 2.0])), [2, -3])


def test_lyapunov_examples():
    assert np.allclose(linalg.solve_lyapunov([[-1.0]], [[2.0]]), [[1.0]])
    assert np.allclose(linalg.solve_lyapunov(np.diag([-1.0, -2.0]), 2 * np.eye(2)), np.diag([1.0, 0.5]))
    P = linalg.solve_lyapunov(M, 2 * np.eye(2))
    assert np.allclose(P, P.T)
    assert linalg.is_positive_definite(P)
    assert np.abs(M.T @ P + P @ M + 2 * np.eye(2)).max() <= 1e-9
    assert np.allclose(P, scipy.linalg.solve_continuous_lyapunov(M.T, -2 * np.eye(2)))


def test_lyapunov_rejects_unstable():
    with pytest.raises(DomainError):
        linalg.solve_lyapunov(S2, np.eye(2))


@settings(max_examples=60, deadline=None)
@given(square(3), square(2), arrays(np.float64, (3, 2), elements=finite))
def test_sylvester_matches_scipy(a, b, c):
    # shift the spectra apart so the equation is well posed
    a = a - 12.0 * np.eye(3)
    b = b + 12.0 * np.eye(2)
    x = linalg.solve_sylvester(a, b, c)
    assert np.abs(x @ b - a @ x - c).max() <= 1e-9
    assert np.allclose(x, scipy.linalg.solve_sylvester(-a, b, c), atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(square(3), arrays(np.float64, (3, 3), elements=finite))
def test_lyapunov_solution_is_positive_definite(a, g):
    a = a - 10.0 * np.eye(3)
    r = g @ g.T + np.eye(3)
    P = linalg.solve_lyapunov(a, r)
    assert np.abs(a.T @ P + P @ a + r).max() <= 1e-9 * max(1.0, np.abs(P).max())
    assert linalg.is_positive_definite(P)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=1, max_size=4, unique=True), st.integers(1, 2))
def test_minimal_polynomial_annihilates(roots, reps):
    # diagonalizable with repeated roots: degree equals the number of distinct roots
    rng = np.random.default_rng(len(roots) * 7 + reps)
    d = np.diag(np.repeat(np.array(roots, dtype=float), reps))
    v = rng.normal(size=d.shape) + 3 * np.eye(d.shape[0])
    s = v @ d @ np.linalg.inv(v)
    coeffs = linalg.minimal_polynomial(s, tol=1e-7)
    assert len(coeffs) == len(roots)
    assert np.allclose(coeffs, np.poly(roots)[1:][::-1], atol=1e-6)
    assert np.abs(linalg.poly_eval_matrix(coeffs, s)).max() <= 1e-6


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 4.9))
def test_harmonic_minimal_polynomial(sigma):
    s = np.array([[0.0, sigma], [-sigma, 0.0]])
    assert np.allclose(linalg.minimal_polynomial(s), [sigma**2, 0.0], atol=1e-9)
