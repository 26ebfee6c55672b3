import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactjets import orderings as O
from contactjets import tensor as T
from contactjets.sampling import random_psd, random_unit

import oracles


def test_determinant_is_rank_one_positive_but_not_positive():
    det = T.determinant_form()
    cert = O.min_rank_one_value(det)
    assert cert.positive
    assert cert.one_sided
    assert not O.is_positive(det)
    assert O.min_flat_eigenvalue(det) <= -0.4


def test_identity_and_negation():
    ident = T.identity_form(2, 3)
    assert O.min_rank_one_value(ident).positive and O.is_positive(ident)
    neg = O.min_rank_one_value(-ident)
    assert not neg.positive
    # the witness certifies indefiniteness exactly
    assert T.rank_one_value(-ident, neg.witness_eta, neg.witness_w) == pytest.approx(neg.min_value)
    assert neg.min_value == pytest.approx(-1.0, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_certifier_min_not_above_grid_min(seed):
    rng = np.random.default_rng(seed)
    Xi = O.random_biform(rng, 2, 2)
    cert = O.min_rank_one_value(Xi)
    assert cert.min_value <= oracles.rank_one_grid_min(Xi, 180) + 1e-9


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_axis_vectors_are_nonpositive(N, seed):
    rng = np.random.default_rng(seed)
    xi = random_unit(rng, N)
    v = -abs(rng.standard_normal()) * xi
    verdict = O.vee_nonpos_vector(xi, v)
    assert verdict.holds and len(set(verdict.routes.values())) == 1
    assert oracles.nonpositive(oracles.vee_matrix(xi, v))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_off_axis_vectors_fail(N, seed):
    rng = np.random.default_rng(seed)
    xi = random_unit(rng, N)
    off = T.perp_part(xi, rng.standard_normal(N))
    if np.linalg.norm(off) < 1e-3:
        return
    v = -xi + off
    verdict = O.vee_nonpos_vector(xi, v)
    assert not verdict.holds
    assert not oracles.nonpositive(oracles.vee_matrix(xi, v))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_hessian_nonpositivity_matches_flat_oracle(N, n, seed):
    rng = np.random.default_rng(seed)
    xi = random_unit(rng, N)
    if seed % 2:
        X = np.einsum("a,ij->aij", xi, -random_psd(rng, n, 1.0))
    else:
        X = rng.standard_normal((N, n, n))
        X = X + X.transpose(0, 2, 1)
    verdict = O.vee_nonpos_hess(xi, X)
    assert len(set(verdict.routes.values())) == 1 or verdict.marginal
    assert verdict.holds == oracles.nonpositive(oracles.vee_hess_flat(xi, X), tol=1e-9)


def test_hessian_along_axis_with_positive_part_fails():
    xi = np.array([1.0, 0.0])
    X = np.einsum("a,ij->aij", xi, np.diag([-1.0, 0.5]))
    assert not O.vee_nonpos_hess(xi, X).holds
