import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from contactjets import tensor as T
from contactjets.errors import DiagnosticError, InputError

import oracles

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def direction_and_vector(draw, max_dim=6):
    N = draw(st.integers(1, max_dim))
    v = draw(arrays(float, N, elements=st.floats(-1, 1)))
    if np.linalg.norm(v) < 1e-3:
        v = np.eye(N)[0]
    R = draw(arrays(float, N, elements=finite))
    return v / np.linalg.norm(v), R


def test_vee_is_symmetrised_outer_product():
    a, b = np.array([1.0, 2.0]), np.array([3.0, -1.0])
    assert np.allclose(T.vee(a, b), [[3.0, 2.5], [2.5, -2.0]])
    assert np.allclose(T.vee(a, b), T.vee(b, a))


def test_vee_hess_matches_loops():
    rng = np.random.default_rng(3)
    xi = T.normalize(rng.standard_normal(3))
    X = rng.standard_normal((3, 2, 2))
    X = 0.5 * (X + X.transpose(0, 2, 1))
    flat = T.flatten_biform(T.vee_hess(xi, X))
    assert np.allclose(flat, oracles.vee_hess_flat(xi, X), atol=1e-14)


def test_rank_one_value_matches_loops():
    rng = np.random.default_rng(4)
    Xi = rng.standard_normal((2, 3, 2, 3))
    eta, w = rng.standard_normal(2), rng.standard_normal(3)
    assert T.rank_one_value(Xi, eta, w) == pytest.approx(oracles.rank_one_value_loops(Xi, eta, w), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_jacobi_matches_lapack(m, seed):
    A = np.random.default_rng(seed).standard_normal((m, m)) * 10.0
    A = A + A.T
    w, V = T.jacobi_eigh(A)
    assert np.allclose(w, np.linalg.eigvalsh(A), atol=1e-11 * max(1, np.abs(A).max()))
    assert np.allclose(V.T @ V, np.eye(m), atol=1e-12)
    assert np.allclose(A @ V, V * w, atol=1e-10 * max(1, np.abs(A).max()))


def test_jacobi_batched_equals_single():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((7, 4, 4))
    A = A + A.transpose(0, 2, 1)
    w, _ = T.jacobi_eigh(A)
    for k in range(7):
        assert np.allclose(w[k], T.jacobi_eigh(A[k])[0])


@settings(max_examples=300, deadline=None)
@given(direction_and_vector())
def test_vee_spectrum_matches_lapack(pair):
    xi, R = pair
    sp = T.vee_spectrum(xi, R)
    scale = max(1.0, np.linalg.norm(R))
    assert np.allclose(sp.eigenvalues, oracles.vee_eigenvalues(xi, R), atol=1e-10 * scale)
    M = oracles.vee_matrix(xi, R)
    assert np.max(np.abs(M @ sp.eigenvectors - sp.eigenvectors * sp.eigenvalues)) < 1e-10 * scale
    top = sp.eigenvalues[-1] if len(xi) > 1 else max(sp.eigenvalues[-1], 0.0)
    assert sp.max_sign_form == pytest.approx(top, abs=1e-10 * scale)
    assert sp.max_pole_form == pytest.approx(top, abs=1e-10 * scale)


def test_vee_spectrum_closed_form_values():
    xi = np.array([1.0, 0.0, 0.0])
    R = np.array([3.0, 4.0, 0.0])
    sp = T.vee_spectrum(xi, R)
    # |R| = 5, xi.R = 3
    assert np.allclose(sp.eigenvalues, [-1.0, 0.0, 4.0])


def test_vee_spectrum_parallel_and_zero():
    xi = np.array([0.6, 0.8])
    assert np.allclose(T.vee_spectrum(xi, -2 * xi).eigenvalues, [-2.0, 0.0])
    assert np.allclose(T.vee_spectrum(xi, np.zeros(2)).eigenvalues, 0.0)


def test_max_vee_eig_has_no_cancellation():
    xi = np.array([1.0, 0.0])
    R = np.array([-1e8, 1e-4])
    # exact value |perp|^2 / (2 (|R| - xi.R)) = 1e-8 / 4e8
    assert T.max_vee_eig(xi, R) == pytest.approx(2.5e-17, rel=1e-12)


def test_vee_spectrum_rejects_disagreeing_routes(monkeypatch):
    monkeypatch.setattr(T, "max_eig_pole_form", lambda xi, R: 123.0)
    with pytest.raises(DiagnosticError):
        T.vee_spectrum([1.0, 0.0], [1.0, 1.0])


def test_direction_must_be_unit():
    with pytest.raises(InputError):
        T.as_direction([1.0, 1.0])
    with pytest.raises(InputError):
        T.as_direction([0.0, 0.0])


def test_hessian_symmetry_is_checked():
    with pytest.raises(InputError):
        T.hess_tensor(np.array([[[0.0, 1.0], [0.0, 0.0]]]))


def test_dimension_caps():
    with pytest.raises(InputError):
        T.check_dims(17, 1)


def test_determinant_form():
    det = T.determinant_form()
    rng = np.random.default_rng(0)
    for _ in range(20):
        P = rng.standard_normal((2, 2))
        assert T.quad_form(det, P) == pytest.approx(2 * np.linalg.det(P), abs=1e-12)
    assert oracles.flat_min_eigenvalue(det) == pytest.approx(-1.0)
    assert oracles.rank_one_grid_min(det) >= -1e-12


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_frame_expand_reconstructs(N, seed):
    rng = np.random.default_rng(seed)
    xi = T.normalize(rng.standard_normal(N))
    eta = T.normalize(rng.standard_normal(N))
    if abs(xi @ eta) > 0.999:
        return
    a = rng.standard_normal(N)
    Pi = T.complement_projector(xi, eta)
    lam, mu, pa = T.frame_expand(a, xi, eta, Pi)
    assert np.max(np.abs(lam * xi + mu * eta + pa - a)) < 1e-12
    assert np.allclose(Pi @ Pi, Pi, atol=1e-14)
    assert np.allclose(Pi @ xi, 0, atol=1e-14) and np.allclose(Pi @ eta, 0, atol=1e-14)


def test_complement_projector_rejects_parallel():
    with pytest.raises(InputError):
        T.complement_projector(np.array([1.0, 0.0]), np.array([-1.0, 0.0]))


def test_numerical_radius_is_spectral_radius():
    A = np.diag([1.0, -3.0, 2.0])
    assert T.numerical_radius(A) == pytest.approx(3.0)
