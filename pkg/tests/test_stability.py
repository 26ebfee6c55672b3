import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactjets import fixtures
from contactjets import stability as S
from contactjets.errors import InputError
from contactjets.jets import MEMBER, NON_MEMBER, JetCandidate, MapHandle, RadiiSchedule

RIDGE = RadiiSchedule(count=16)
RIDGE_JET = JetCandidate([0.0], [1.0, 0.0], np.zeros((2, 1)), np.array([[[0.0]], [[2.0]]]), 2)


@settings(max_examples=50, deadline=None)
@given(st.floats(-1.0, 1.0))
def test_resonant_radii_hit_the_phase(p):
    theta = S.slope_phase(p)
    r = S.resonant_radii(theta)
    assert np.all(r <= 0.1) and np.all(np.diff(r) < 0)
    assert np.allclose(np.cos(1.0 / r), p, atol=1e-9)


@pytest.mark.parametrize("p, expected", [(0.0, MEMBER), (0.6, MEMBER), (-1.0, MEMBER), (1.0, MEMBER),
                                         (1.1, NON_MEMBER), (-1.3, NON_MEMBER)])
def test_oscillating_line_slopes(p, expected):
    u = fixtures.oscillating_line()
    c = S.ApproxJetCandidate([0.0], [[p]])
    v = S.test_approx_jet(u, c, radii=S.resonant_radii(S.slope_phase(p)))
    assert v.status == expected
    assert set(v.extra) == {"min_ratio", "argmin_radius"}


def test_geometric_radii_alone_miss_most_slopes():
    u = fixtures.oscillating_line()
    missed = [p for p in np.linspace(-0.9, 0.9, 7)
              if not S.test_approx_jet(u, S.ApproxJetCandidate([0.0], [[p]])).member]
    assert len(missed) >= 4


def test_jets_are_approximate_jets():
    u = fixtures.kinked_line([1.0, 0.5], [0.5, 1.0], [0.0, 0.0])
    c = S.ApproxJetCandidate([0.0], fixtures.kinked_line_gradient([1.0, 0.5], [0.5, 1.0], 0.0))
    # order-1 remainder of a kinked line is |z| sized: not an approximate jet unless the kink vanishes
    assert not S.test_approx_jet(u, c).member
    q = fixtures.quadratic_map([0.0], [[2.0]], [[[1.0]]], "q")
    assert S.test_approx_jet(q, S.ApproxJetCandidate([0.0], [[2.0]])).member


@pytest.mark.parametrize("n", [1, 2, 3])
def test_kernel_mass_matches_closed_form(n):
    _, value, grad, hess = S.MollifierFamily().rule(n)
    assert value.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.abs(grad.sum(axis=0)).max() < 1e-10
    assert np.abs(hess.sum(axis=0)).max() < 1e-8
    assert S.bump_mass(1) == pytest.approx(256 / 315)


def test_mollifier_is_exact_on_quadratics():
    X = np.array([[[2.0, 0.5], [0.5, -1.0]]])
    u = fixtures.quadratic_map([1.0], [[0.3, -0.2]], X, "q")
    um = S.mollify(u, 0.05)
    x = np.array([0.2, 0.1])
    assert np.allclose(um.grad(x), u.grad(x), atol=1e-9)
    assert np.allclose(um.hess(x), X, atol=1e-7)


def test_mollify_keeps_perpendicular_part_zero_on_ridge():
    um = S.mollify(fixtures.holder_ridge(0.5), 0.025)
    pts = np.linspace(-0.1, 0.1, 11)[:, None]
    assert np.all(um.eval(pts)[:, 1] == 0.0)
    assert np.all(um.hess(np.array([0.01]))[1] == 0.0)


def test_mollifier_limits():
    with pytest.raises(InputError):
        S.MollifierFamily(scales=(0.1, 0.2))
    with pytest.raises(InputError):
        S.MollifierFamily().rule(4)
    with pytest.raises(InputError):
        S.mollify(fixtures.holder_ridge(0.5), 0.0)


def test_ridge_approximation_splits_components():
    rep = S.approximation_experiment(fixtures.holder_ridge(0.5), RIDGE_JET, s=RIDGE, e=[1.0, 0.0])
    assert rep.xi_converges and rep.final_err < 1e-2
    assert not rep.perp_converges
    for st_ in rep.steps:
        assert np.allclose(st_.perp_hessian, 0.0, atol=1e-12)
        assert st_.status == MEMBER
    assert rep.target_perp == [[[0.0]], [[2.0]]]
    assert rep.assumption_holds


def test_smooth_map_approximation_converges_in_both_parts():
    X = np.array([[[-2.0]], [[1.0]]])
    u = fixtures.quadratic_map([0.0, 0.0], np.zeros((2, 1)), X, "q")
    rep = S.approximation_experiment(u, JetCandidate([0.0], [1.0, 0.0], np.zeros((2, 1)), X, 2))
    assert rep.xi_converges and rep.perp_converges


def test_unverified_jet_is_refused():
    with pytest.raises(InputError):
        S.approximation_experiment(fixtures.holder_ridge(0.5),
                                   JetCandidate([0.0], [1.0, 0.0], [[1.0], [0.0]], [[[0.0]], [[0.0]]], 2), s=RIDGE)


def test_hyperplane_relation_generic_direction():
    X = np.array([[[-2.0]], [[1.0]]])
    u = fixtures.quadratic_map([0.0, 0.0], np.array([[0.5], [-1.0]]), X, "q")
    xi = np.array([1.0, 0.0])
    e = np.array([0.6, 0.8])
    jet = JetCandidate([0.0], xi, [[0.5], [-1.0]], X, 2)
    Pi = np.eye(2) - np.outer(e, e)
    approx = S.ApproxJetCandidate([0.0], Pi @ jet.P, np.einsum("ab,bij->aij", Pi, X), 2)
    rep = S.hyperplane_relation(u, e, xi, jet, approx)
    assert rep.asserted and rep.holds and rep.vee_holds
    wrong = S.ApproxJetCandidate([0.0], Pi @ jet.P + 0.1, None, 1)
    assert S.hyperplane_relation(u, e, xi, jet, wrong).holds is None


def test_hyperplane_relation_vacuous_along_xi_on_kinked_line():
    A, B = [1.0, 0.5], [0.5, 1.0]
    u = fixtures.kinked_line(A, B, [0.0, 0.0])
    xi = -np.array([1.0, 1.0]) / math.sqrt(2)
    jet = JetCandidate([0.0], xi, fixtures.kinked_line_gradient(A, B, 0.0), None, 1)
    rep = S.hyperplane_relation(u, xi, xi, jet, S.ApproxJetCandidate([0.0], np.zeros((2, 1))))
    assert not rep.asserted


def test_approx_candidate_needs_domain_point():
    from contactjets.jets import Domain
    u = MapHandle(lambda p: p[:, :1], 1, 1, domain=Domain("ball", (0.0,), 1.0))
    with pytest.raises(InputError):
        S.test_approx_jet(u, S.ApproxJetCandidate([2.0], [[1.0]]))
