import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactjets import fixtures
from contactjets.errors import InputError
from contactjets.jets import (INCONCLUSIVE, MEMBER, NON_MEMBER, JetCandidate, MapHandle, RadiiSchedule,
                              decide_decay, equivalent_forms, fit_slope, jet_enumerate_smooth, perp_modify,
                              remainder_map, test_membership, test_structural)

import oracles

A, B = [1.0, 0.5], [0.5, 1.0]


def scalar(f, name="scalar"):
    return MapHandle(lambda p: f(p[:, 0])[:, None], 1, 1, name=name)


# ------------------------------------------------------------ decay rule

def test_fit_slope_recovers_power():
    r = 0.1 * 0.5 ** np.arange(10)
    assert fit_slope(r, 3 * r**1.5) == pytest.approx(1.5)


def test_decay_rule_branches():
    r = 0.1 * 0.5 ** np.arange(10)
    assert decide_decay(r, r, 1e-3)[0] == MEMBER
    assert decide_decay(r, np.ones(10), 1e-3)[0] == NON_MEMBER
    # decaying but not yet small
    assert decide_decay(r, 1e3 * r, 1e-3)[0] == INCONCLUSIVE


def test_schedule_validation():
    with pytest.raises(InputError):
        RadiiSchedule(factor=1.5)
    with pytest.raises(InputError):
        RadiiSchedule(count=2)
    with pytest.raises(InputError):
        RadiiSchedule(decay_tol=0)
    with pytest.raises(InputError):
        RadiiSchedule(sphere_samples=1).samples_for(2)


# ------------------------------------------------ scalar jets vs classical

SCALAR_CASES = [
    (np.abs, 0.0, 0.0, None, False),
    (np.abs, 0.0, 0.0, 0.0, False),
    (lambda z: -np.abs(z), 0.0, 0.3, None, True),
    (lambda z: -np.abs(z), 0.0, 1.0, None, True),
    (lambda z: -np.abs(z), 0.0, 1.2, None, False),
    (lambda z: z * z, 0.0, 0.0, 2.0, True),
    (lambda z: z * z, 0.0, 0.0, 1.5, False),
    (lambda z: z * z, 0.0, 0.0, 3.0, True),
    (np.sin, 0.4, np.cos(0.4), -np.sin(0.4), True),
    (np.sin, 0.4, np.cos(0.4) + 0.1, None, False),
]


@pytest.mark.parametrize("f, x, p, X, expected", SCALAR_CASES)
def test_scalar_positive_direction_is_classical_superjet(f, x, p, X, expected):
    order = 1 if X is None else 2
    c = JetCandidate([x], [1.0], [[p]], None if X is None else [[[X]]], order)
    v = test_membership(scalar(f), c)
    assert oracles.is_scalar_superjet(f, x, p, X) == expected
    assert v.member == expected


def test_negative_direction_gives_subjets():
    # |z| has subjet slopes [-1, 1] at 0
    u = scalar(np.abs)
    assert test_membership(u, JetCandidate([0.0], [-1.0], [[0.5]], None, 1)).member
    assert not test_membership(u, JetCandidate([0.0], [-1.0], [[1.5]], None, 1)).member


# ------------------------------------------------------------ kinked line

@pytest.mark.parametrize("C", [[0.0, 0.0], [0.7, -0.4]])
def test_kinked_line_agrees_with_derived_predicate(C):
    u = fixtures.kinked_line(A, B, C)
    for case in fixtures.kinked_line_cases(A, B, C)[::7]:
        P = fixtures.kinked_line_gradient(A, B, case["t"])
        X = None if case["X"] is None else np.asarray(case["X"]).reshape(2, 1, 1)
        v = test_membership(u, JetCandidate([0.0], case["xi"], P, X, case["order"]))
        assert v.member == fixtures.kinked_line_jet(A, B, C, case["xi"], case["t"], case["X"], case["order"])


def test_kinked_line_first_order_members_are_the_segment():
    u = fixtures.kinked_line(A, B, [0.0, 0.0])
    xi = -np.array([1.0, 1.0]) / np.sqrt(2)
    members = [t for t in np.linspace(-1.5, 1.5, 13)
               if test_membership(u, JetCandidate([0.0], xi, fixtures.kinked_line_gradient(A, B, t), None, 1)).member]
    assert members[0] == pytest.approx(-1.0) and members[-1] == pytest.approx(1.0)
    assert len(members) == 9


def test_strict_tolerance_turns_exact_members_inconclusive():
    u = fixtures.kinked_line(A, B, [0.7, -0.4])
    xi = -np.array([1.0, 1.0]) / np.sqrt(2)
    c = JetCandidate([0.0], xi, fixtures.kinked_line_gradient(A, B, 0.0), None, 1)
    assert test_membership(u, c).status == MEMBER
    assert test_membership(u, c, RadiiSchedule(decay_tol=1e-12)).status == INCONCLUSIVE


# ------------------------------------------------------------ smooth maps

@pytest.mark.parametrize("u", fixtures.smooth_battery(), ids=lambda u: u.name)
def test_smooth_ray_is_in_jet(u):
    rng = np.random.default_rng(11)
    # generic points: near x = 0 some third derivatives vanish and the
    # asymptotic regime starts below the default radii
    x = 0.5 + 0.1 * rng.standard_normal(u.n)
    xi = rng.standard_normal(u.N)
    fam = jet_enumerate_smooth(u, x, xi / np.linalg.norm(xi))
    assert test_membership(u, fam.first_order()).member
    assert test_membership(u, fam.candidate()).member
    assert test_membership(u, fam.candidate(np.eye(u.n))).member
    assert test_structural(u, fam.candidate(np.eye(u.n))).member


def test_family_rejects_indefinite_matrix():
    u = fixtures.smooth_battery()[0]
    fam = jet_enumerate_smooth(u, [0.0, 0.0], [1.0, 0.0])
    with pytest.raises(InputError):
        fam.candidate(np.diag([1.0, -1.0]))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_membership_and_structural_agree_on_quadratics(seed):
    rng = np.random.default_rng(seed)
    N, n = 2, 2
    X = rng.standard_normal((N, n, n))
    X = X + X.transpose(0, 2, 1)
    P = rng.standard_normal((N, n))
    u = fixtures.quadratic_map(np.zeros(N), P, X, "q")
    xi = rng.standard_normal(N)
    xi /= np.linalg.norm(xi)
    shift = rng.uniform(-1, 1)
    c = JetCandidate(np.zeros(n), xi, P, X + shift * np.einsum("a,ij->aij", xi, np.eye(n)), 2)
    vm, vs = test_membership(u, c), test_structural(u, c)
    assert vm.member == vs.member == (shift >= 0)
    forms = equivalent_forms(remainder_map(u, c), xi, 2)
    assert forms.unanimous
    assert set(forms.booleans.values()) == {vm.member}


def test_equivalent_forms_need_vanishing_remainder():
    u = fixtures.quadratic_map([1.0], [[0.0]], [[[0.0]]], "const")
    with pytest.raises(InputError):
        equivalent_forms(u, [1.0], 1)


def test_perp_modify_on_ridge():
    # the xi component dominates, so any perpendicular hessian is admissible
    u = fixtures.holder_ridge(0.5)
    s = RadiiSchedule(count=16)
    c = JetCandidate([0.0], [1.0, 0.0], np.zeros((2, 1)), np.array([[[0.0]], [[2.0]]]), 2)
    ok = perp_modify(u, c, [0.0, 1.0], [[1.0]], s)
    assert ok.base_member and ok.status == MEMBER
    # scalar hypothesis 2 - A/2 >= 0 fails for A = 5
    assert perp_modify(u, c, [0.0, 1.0], [[5.0]], s).status == "hypothesis-failed"


def test_candidate_validation():
    with pytest.raises(InputError):
        JetCandidate([0.0], [1.0], [[0.0]], None, 2)
    with pytest.raises(InputError):
        JetCandidate([0.0], [1.0], [[0.0]], None, 3)
    with pytest.raises(InputError):
        JetCandidate([0.0], [2.0], [[0.0]], None, 1)


def test_analytic_derivatives_are_gated():
    with pytest.raises(InputError):
        MapHandle(lambda p: p[:, :1] ** 2, 1, 1, grad=lambda x: np.array([[3 * x[0]]]))
