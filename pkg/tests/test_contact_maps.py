import numpy as np
import pytest

from contactjets import contact_maps as CM
from contactjets import fixtures
from contactjets.errors import InputError
from contactjets.jets import JetCandidate, MapHandle, RadiiSchedule, jet_enumerate_smooth, test_membership

RIDGE = RadiiSchedule(count=16)


def smooth_jets():
    rng = np.random.default_rng(21)
    for u in fixtures.smooth_battery():
        x = 0.5 + 0.1 * rng.standard_normal(u.n)
        xi = rng.standard_normal(u.N)
        fam = jet_enumerate_smooth(u, x, xi / np.linalg.norm(xi))
        yield u, fam.candidate(np.eye(u.n))
        yield u, fam.first_order()


@pytest.mark.parametrize("u, jc", list(smooth_jets()), ids=lambda v: getattr(v, "name", ""))
def test_round_trip_is_identity(u, jc):
    cand = CM.contact_map_from_jet(u, jc)
    back = CM.jet_from_contact_map(cand)
    assert np.allclose(back.P, jc.P, atol=1e-12)
    if jc.order == 2:
        assert np.allclose(back.X, jc.X, atol=1e-12)
    assert CM.is_contact_map(u, cand).is_contact
    # the constructed map is a jet witness from the other side as well
    assert test_membership(u, back).member


def test_constructed_map_touches_at_base_point():
    u, jc = next(smooth_jets())
    cand = CM.contact_map_from_jet(u, jc)
    assert np.allclose(cand.psi.eval(jc.base_point), u.eval(jc.base_point))


def test_unverified_jet_is_refused():
    u = fixtures.quadratic_map([0.0], [[0.0]], [[[2.0]]], "square")
    with pytest.raises(InputError):
        CM.contact_map_from_jet(u, JetCandidate([0.0], [1.0], [[0.0]], [[[1.0]]], 2))


def test_ridge_contact_map():
    u = fixtures.holder_ridge(0.5)
    # the slope 1/16 needs |k| r^(1/4) <= 1/16, so larger |k| need deeper schedules
    for k in (1.0, -1.0, 0.5):
        psi = fixtures.holder_ridge_contact(k)
        v = CM.is_contact_map(u, CM.ContactCandidate(psi, [0.0], [1.0, 0.0]), s=RIDGE)
        assert v.is_contact, k


def test_off_touching_map_is_not_contact():
    u = fixtures.quadratic_map([0.0], [[0.0]], [[[0.0]]], "zero")
    psi = fixtures.quadratic_map([0.5], [[0.0]], [[[0.0]]], "shifted")
    v = CM.is_contact_map(u, CM.ContactCandidate(psi, [0.0], [1.0]))
    assert not v.is_contact and not v.touches


def test_scalar_contact_is_touching_from_above():
    # N = 1, xi = 1: psi >= u near x
    u = fixtures.quadratic_map([0.0], [[0.0]], [[[-2.0]]], "cap")
    above = fixtures.quadratic_map([0.0], [[0.0]], [[[1.0]]], "cup")
    below = fixtures.quadratic_map([0.0], [[0.0]], [[[-3.0]]], "steeper_cap")
    assert CM.is_contact_map(u, CM.ContactCandidate(above, [0.0], [1.0])).is_contact
    assert not CM.is_contact_map(u, CM.ContactCandidate(below, [0.0], [1.0])).is_contact


@pytest.mark.parametrize("u, jc", list(smooth_jets())[::2], ids=lambda v: getattr(v, "name", ""))
def test_calculus_forward_implication(u, jc):
    cand = CM.contact_map_from_jet(u, jc)
    rep = CM.contact_calculus_check(u, cand)
    assert rep.is_contact and rep.forward_holds
    assert rep.gradient_equal and rep.hessian_nonpositive


def test_calculus_converse_on_strict_quadratic():
    u = fixtures.quadratic_map([0.0, 0.0], np.zeros((2, 1)), np.array([[[-1.0]], [[0.5]]]), "q")
    psi = fixtures.quadratic_map([0.0, 0.0], np.zeros((2, 1)), np.array([[[0.0]], [[0.5]]]), "p")
    rep = CM.contact_calculus_check(u, CM.ContactCandidate(psi, [0.0], [1.0, 0.0]))
    assert rep.strict and rep.converse_holds


def test_absorbed_map_stays_contact():
    u = fixtures.smooth_battery()[1]
    fam = jet_enumerate_smooth(u, [0.4, 0.3], [0.6, 0.8])
    cand = CM.contact_map_from_jet(u, fam.candidate(np.eye(2)))
    hat = CM.absorb_remainder(u, cand)
    assert CM.is_contact_map(u, hat).is_contact
    status, _, _ = CM.second_order_agreement(cand, hat)
    assert status == "member"


def test_rigidity_on_ridge_reports_unbounded_growth():
    u = fixtures.holder_ridge(0.5)
    c = CM.ContactCandidate(fixtures.holder_ridge_contact(1.0), [0.0], [1.0, 0.0])
    rep = CM.rigidity_dichotomy(u, c, np.array([[[0.0]], [[-1.0]]]), s=RIDGE)
    assert rep.l_minus > 1e2
    assert rep.perturbed_still_contact and rep.consistent


def test_cone_schedule_validation():
    with pytest.raises(InputError):
        CM.ConeSchedule(slopes=(0.5, 1.0))
    with pytest.raises(InputError):
        CM.ConeSchedule(slopes=(1.0,), radius_per_slope=(0.1, 0.2))


def test_dimension_mismatch():
    u = fixtures.holder_ridge(0.5)
    psi = MapHandle(lambda p: p[:, :1], 1, 1)
    with pytest.raises(InputError):
        CM.is_contact_map(u, CM.ContactCandidate(psi, [0.0], [1.0]))


def test_constant_and_tilted_maps_on_ridge():
    u = fixtures.holder_ridge(0.5)
    const = MapHandle(lambda p: np.zeros((p.shape[0], 2)), 2, 1, name="zero")
    tilted = MapHandle(lambda p: np.stack([p[:, 0] ** 2, p[:, 0]], axis=1), 2, 1, name="tilted")
    assert CM.is_contact_map(u, CM.ContactCandidate(const, [0.0], [1.0, 0.0]), s=RIDGE).is_contact
    assert not CM.is_contact_map(u, CM.ContactCandidate(tilted, [0.0], [1.0, 0.0]), s=RIDGE).is_contact


def first_order_pairs():
    rng = np.random.default_rng(5)
    for k in range(5):
        P = rng.standard_normal((2, 2))
        X = rng.standard_normal((2, 2, 2))
        X = X + X.transpose(0, 2, 1)
        xi = rng.standard_normal(2)
        xi /= np.linalg.norm(xi)
        u = fixtures.quadratic_map([0.0, 0.0], P, X, f"q{k}")
        # u - psi = -|z|^2 xi / 2 touches strictly; the tilted map has the wrong gradient
        lifted = X + np.einsum("a,ij->aij", xi, np.eye(2))
        yield u, fixtures.quadratic_map([0.0, 0.0], P, lifted, "touching"), xi, True
        yield u, fixtures.quadratic_map([0.0, 0.0], P + 0.3 * np.outer(xi, [1.0, -1.0]), lifted, "tilted"), xi, False


@pytest.mark.parametrize("u, psi, xi, contact", list(first_order_pairs()), ids=lambda v: getattr(v, "name", ""))
def test_first_order_contact_matches_gradient_identity(u, psi, xi, contact):
    rep = CM.contact_calculus_check(u, CM.ContactCandidate(psi, [0.0, 0.0], xi, order=1))
    assert rep.is_contact == contact == rep.gradient_equal
    assert rep.first_order_consistent


def test_first_order_converse_needs_strictness():
    # equal gradients, but u - psi = +|z|^2 xi points the wrong way
    u = fixtures.quadratic_map([0.0], [[0.0]], [[[2.0]]], "square")
    psi = fixtures.quadratic_map([0.0], [[0.0]], [[[0.0]]], "zero")
    rep = CM.contact_calculus_check(u, CM.ContactCandidate(psi, [0.0], [1.0], order=1))
    assert rep.gradient_equal and not rep.is_contact
    assert rep.first_order_consistent is False
