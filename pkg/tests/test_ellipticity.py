import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactjets import ellipticity as E
from contactjets import fixtures
from contactjets import orderings as O
from contactjets import tensor as T
from contactjets.errors import InputError

ZERO = (np.zeros(2), np.zeros(1), np.zeros((1, 2)))


def at(F, X):
    x, eta, P = ZERO
    return F(x, eta, P, np.asarray(X, dtype=float)[None])


def test_eigenvalue_systems_on_hand_examples():
    assert at(E.max_eig_system(1, 2), np.diag([1.0, 2.0])) == pytest.approx(2.0)
    assert at(E.laplacian_power_system(1, 2, 0), np.diag([1.0, 2.0])) == pytest.approx(3.0)
    assert at(E.det_system(1, 2), np.diag([2.0, 3.0])) == pytest.approx(6.0)
    assert at(E.min_eig_system(1, 2, 1), np.diag([-2.0, 3.0])) == pytest.approx(-8.0)


def test_first_order_term_is_subtracted():
    F = E.laplacian_power_system(2, 2, 0, [4.0, 5.0])
    X = np.stack([2 * np.eye(2)] * 2)
    assert np.allclose(F(np.zeros(2), np.zeros(2), np.zeros((2, 2)), X), [0.0, -1.0])


def test_self_test_rejects_non_monotone():
    with pytest.raises(InputError):
        E.eigen_nonlinearity(lambda l: -l[:, 0], 1, 2)


def test_self_test_rejects_even_function():
    with pytest.raises(InputError):
        E.eigen_nonlinearity(lambda l: np.abs(l[:, 0]), 1, 2)


def test_det_oddness_is_not_applicable():
    flags = E.self_test_eigen_function(lambda l: np.prod(l, axis=1), 3, gated=True)
    assert flags["odd_verified"] is None and flags["monotone_verified"] and flags["degree"] == 3


@pytest.mark.parametrize("F", [E.laplacian_power_system(2, 2, [0, 1]), E.max_eig_system(2, 2),
                               E.min_eig_system(2, 2, 1), E.det_system(2, 2)], ids=lambda F: F.name)
def test_builtin_systems_certified(F):
    r = E.check_ellipticity_sampled(F, budget=2000, seed=3)
    assert r.verdict == E.CERTIFIED
    assert r.routes["directional"]["pairs"] == 2000 and r.routes["pairing"]["pairs"] == 2000


def test_gate_skips_are_counted():
    r = E.check_ellipticity_sampled(E.det_system(2, 2), budget=500, seed=0)
    assert r.skipped > 0 and r.verdict == E.CERTIFIED


def test_negated_laplacian_counterexample_replays_on_both_routes():
    F = E.vector_laplacian(2, 3, -1.0)
    r = E.check_ellipticity_sampled(F, budget=500, seed=1)
    assert r.verdict == E.VIOLATED and r.confirmed_by_other_route
    cx = r.counterexample
    assert E.replay_counterexample(F, cx) > 0
    other = E.convert_counterexample(cx)
    assert other["route"] != cx["route"]
    assert E.replay_counterexample(F, other) > 0
    assert E.convert_counterexample(other)["route"] == cx["route"]


def test_first_order_operators_are_trivially_elliptic():
    F = E.Nonlinearity(lambda x, e, P, X: P[:, :, 0], 1, 1, first_order_only=True)
    assert E.check_ellipticity_sampled(F).verdict == E.CERTIFIED


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_quasilinear_routes_agree(seed):
    rng = np.random.default_rng(seed)
    B = O.random_biform(rng, 2, 2)
    shift = -O.min_flat_eigenvalue(B) + 0.2
    A = B + shift * T.identity_form(2, 2)
    if seed % 2:
        eta, w = rng.standard_normal(2), rng.standard_normal(2)
        r1 = np.outer(eta / np.linalg.norm(eta), w / np.linalg.norm(w))
        A = A - (np.einsum("aibj,ai,bj->", A, r1, r1) + 1.0) * np.einsum("ai,bj->aibj", r1, r1)
    r = E.check_quasilinear(A, budget=1000, seed=seed)
    assert (r.verdict == E.CERTIFIED) == (seed % 2 == 0)


def test_determinant_biform_is_elliptic_though_not_positive():
    r = E.check_quasilinear(T.determinant_form(), budget=2000)
    assert r.verdict == E.CERTIFIED


def test_envelope_of_continuous_operator_is_its_value():
    F = E.max_eig_system(1, 2, [1.0])
    env = E.xi_envelope(F, [1.0], np.zeros(2), [0.0], np.zeros((1, 2)), np.array([[[1.0, 0.0], [0.0, 3.0]]]))
    assert env.value == pytest.approx(2.0)
    assert env.sampled >= env.value - 1e-12


def test_envelope_sees_a_jump():
    # F jumps up at P = 0 from the left; the envelope is the upper value
    F = E.Nonlinearity(lambda x, e, P, X: np.where(P[:, :, 0] > 0, 1.0, 0.0), 1, 1,
                       continuity_declared=False, first_order_only=True)
    env = E.xi_envelope(F, [1.0], [0.0], [0.0], [[0.0]], [[[0.0]]])
    assert env.value == pytest.approx(1.0) and env.direct is None


def squared_norm_map():
    return fixtures.quadratic_map([0.0, 0.0], np.zeros((2, 2)), np.stack([2 * np.eye(2)] * 2), "squared_norm")


def test_classical_solution_is_contact_solution():
    pts = np.array([[0.0, 0.0], [0.3, -0.4]])
    dirs = [[1.0, 0.0], [0.0, 1.0], [-0.6, 0.8]]
    good = E.verify_contact_solution(squared_norm_map(), E.laplacian_power_system(2, 2, 0, [4.0, 4.0]), pts, dirs)
    assert good.consistent and good.min_margin >= -1e-8


def test_mutant_violation_at_second_axis():
    bad = E.verify_contact_solution(squared_norm_map(), E.laplacian_power_system(2, 2, 0, [4.0, 5.0]),
                                    [[0.0, 0.0]], [[0.0, 1.0]], psd_norms=(0.0,))
    assert not bad.consistent
    assert bad.min_margin == pytest.approx(-1.0, abs=1e-9)


def test_half_square_solves_max_eigenvalue_equation():
    u = fixtures.quadratic_map([0.0], np.zeros((1, 3)), np.diag([1.0, 0.0, 0.0])[None], "half_square")
    rep = E.consistency_suite(u, E.max_eig_system(1, 3, [1.0]), np.random.default_rng(0).standard_normal((3, 3)))
    assert rep.classical and rep.contact and rep.solution_implies_contact
    assert rep.contact_implies_solution and rep.injected_violation_detected


def test_opposite_sign_convention():
    F = E.laplacian_power_system(2, 2, 0, [4.0, 4.0])
    rev = E.verify_contact_solution(squared_norm_map(), F, [[0.0, 0.0]], [[1.0, 0.0]], sign=-1)
    # PSD shifts push xi.F up, so the reversed inequality fails
    assert not rev.consistent
    with pytest.raises(InputError):
        E.verify_contact_solution(squared_norm_map(), F, [[0.0, 0.0]], [[1.0, 0.0]], sign=2)
