"""Positivity and rank-one positivity of bi-forms.

A bi-form is *positive* when its flattening is positive semidefinite and
*rank-one positive* when ``Xi : (eta (x) w) (x) (eta (x) w) >= 0`` for all unit
``eta, w``. The second property has no tractable exact test, so
:func:`min_rank_one_value` runs a multistart alternating minimisation. Its
answer is one-sided: a negative value comes with an explicit witness, a
nonnegative value only means no start found a descent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .errors import DiagnosticError, InputError
from .sampling import halton_sphere

CERTIFY_TOL = 1e-9
MARGINAL_FACTOR = 1e-4


@dataclass(frozen=True)
class RankOneCertificate:
    verdict: str
    min_value: float
    witness_eta: np.ndarray
    witness_w: np.ndarray
    multistart_count: int
    iterations: int = 0
    # positive verdicts are only as good as the multistart coverage
    one_sided: bool = True

    @property
    def positive(self) -> bool:
        return self.verdict == "positive"


@dataclass(frozen=True)
class NonposVerdict:
    holds: bool
    routes: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    marginal: bool = False
    decomposition: float | None = None


def _start_set(dim: int, count: int) -> np.ndarray:
    pts = np.concatenate([halton_sphere(dim, count), np.eye(dim)])
    return pts


def _rank_one_values(Xi, eta, w):
    return T.rank_one_value(Xi, eta, w)


def min_rank_one_value(Xi, multistarts: int = 64, max_iters: int = 200,
                       tol: float = CERTIFY_TOL, improve_tol: float = 1e-12) -> RankOneCertificate:
    """Approximate ``min Xi : (eta (x) w)^2`` over unit ``eta`` and ``w``.

    Alternates exact block minimisations: for fixed ``w`` the best ``eta`` is a
    bottom eigenvector of ``M(w)_ab = Xi[a,i,b,j] w_i w_j``, and symmetrically
    for ``w`` with ``K(eta)``. Starts come from low-discrepancy sphere points
    and coordinate vectors, seeded once from the ``w`` side and once from the
    ``eta`` side, all run as one batch.
    """
    Xi = T.as_biform(Xi)
    N, n = Xi.shape[0], Xi.shape[1]
    w_starts = _start_set(n, multistarts)
    eta_starts = _start_set(N, multistarts)

    # batch A: w given, solve eta first; batch B: eta given, solve w first
    M = np.einsum("aibj,si,sj->sab", Xi, w_starts, w_starts)
    _, eta_a = T.min_eig(M)
    K = np.einsum("aibj,sa,sb->sij", Xi, eta_starts, eta_starts)
    _, w_b = T.min_eig(K)
    eta = np.concatenate([eta_a, eta_starts])
    w = np.concatenate([w_starts, w_b])
    f = _rank_one_values(Xi, eta, w)
    scale = max(1.0, float(np.max(np.abs(Xi))))

    # starts leave the batch once their own objective stalls
    live = np.ones(f.shape[0], dtype=bool)
    iters = 0
    for iters in range(1, max_iters + 1):
        idx = np.nonzero(live)[0]
        K = np.einsum("aibj,sa,sb->sij", Xi, eta[idx], eta[idx])
        _, w_new = T.min_eig(K)
        M = np.einsum("aibj,si,sj->sab", Xi, w_new, w_new)
        f_new, eta_new = T.min_eig(M)
        improvement = f[idx] - f_new
        take = f_new < f[idx]
        eta[idx[take]] = eta_new[take]
        w[idx[take]] = w_new[take]
        f[idx[take]] = f_new[take]
        live[idx[improvement < improve_tol * scale]] = False
        if not live.any():
            break

    f = _rank_one_values(Xi, eta, w)
    best = int(np.argmin(f))
    value = float(f[best])
    verdict = "positive" if value >= -tol else "indefinite"
    return RankOneCertificate(verdict, value, eta[best].copy(), w[best].copy(),
                              int(eta.shape[0]), iters)


def is_positive(Xi, tol: float = 1e-10) -> bool:
    Xi = T.as_biform(Xi)
    w, _ = T.jacobi_eigh(T.flatten_biform(Xi))
    scale = max(1.0, float(np.max(np.abs(Xi))))
    return bool(w[0] >= -tol * scale)


def min_flat_eigenvalue(Xi) -> float:
    w, _ = T.jacobi_eigh(T.flatten_biform(Xi))
    return float(w[0])


def random_biform(rng: np.random.Generator, N: int, n: int, scale: float = 1.0) -> np.ndarray:
    B = rng.standard_normal((N * n, N * n))
    return T.unflatten_biform(scale * 0.5 * (B + B.T), N, n)


def random_separately_symmetric(rng: np.random.Generator, N: int, n: int) -> np.ndarray:
    Xi = rng.standard_normal((N, n, N, n))
    Xi = Xi + np.transpose(Xi, (2, 3, 0, 1))
    Xi = Xi + np.transpose(Xi, (2, 1, 0, 3))
    return 0.25 * Xi


def _settle(routes: dict, residuals: dict, scale: float, what: str) -> NonposVerdict:
    verdicts = set(routes.values())
    holds = all(routes.values())
    if len(verdicts) == 1:
        return NonposVerdict(holds, routes, residuals)
    if max(residuals.values()) <= MARGINAL_FACTOR * scale:
        # equivalent conditions scale differently (linear vs quadratic in the
        # off-axis part), so tiny inputs can straddle the tolerance
        return NonposVerdict(holds, routes, residuals, marginal=True)
    raise DiagnosticError(f"{what}: equivalent routes disagree {routes} (residuals {residuals})")


def vee_nonpos_vector(xi, v, tol: float = CERTIFY_TOL) -> NonposVerdict:
    """Whether ``xi v v <= 0``, decided four equivalent ways."""
    xi = T.as_direction(xi)
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != xi.shape:
        raise InputError(f"v has shape {v.shape}, expected {xi.shape}")
    scale = max(1.0, float(np.linalg.norm(v)))
    eps = tol * scale
    a = float(xi @ v)

    r_spec = max(float(T.max_vee_eig(xi, v)), 0.0)
    r_axis = max(float(np.linalg.norm(v - a * xi)), max(a, 0.0))
    r_perp = max(float(np.linalg.norm(T.project_perp(xi) @ v)), max(a, 0.0))
    r_pole = float(np.linalg.norm(v + np.linalg.norm(v) * xi))
    residuals = {"spectrum": r_spec, "axis": r_axis, "perp": r_perp, "pole": r_pole}
    routes = {k: r <= eps for k, r in residuals.items()}
    out = _settle(routes, residuals, scale, "vee_nonpos_vector")
    return NonposVerdict(out.holds, out.routes, out.residuals, out.marginal, a)


def vee_nonpos_hess(xi, X, tol: float = CERTIFY_TOL, multistarts: int = 64) -> NonposVerdict:
    """Whether ``xi v X <= 0`` in both orderings, decided three ways."""
    xi = T.as_direction(xi)
    X = T.hess_tensor(X, N=xi.shape[0])
    scale = max(1.0, float(np.linalg.norm(X)))
    eps = tol * scale
    Xi = T.vee_hess(xi, X)

    cert = min_rank_one_value(-Xi, multistarts=multistarts, tol=eps)
    r_rank_one = max(-cert.min_value, 0.0)
    along = np.einsum("a,aij->ij", xi, X)
    perp = X - np.einsum("a,ij->aij", xi, along)
    r_decomp = max(float(np.linalg.norm(perp)), max(float(T.max_eig(along)), 0.0))
    r_flat = max(float(T.max_eig(T.flatten_biform(Xi))), 0.0)
    residuals = {"rank_one": r_rank_one, "decomposition": r_decomp, "flat": r_flat}
    routes = {k: r <= eps for k, r in residuals.items()}
    return _settle(routes, residuals, scale, "vee_nonpos_hess")
