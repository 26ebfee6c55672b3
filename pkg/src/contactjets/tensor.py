"""Dense multilinear algebra for vector-valued second order calculus.

Conventions
-----------
* A *direction* is a unit vector ``xi`` in R^N.
* A gradient matrix ``P`` has shape ``(N, n)``.
* A hessian tensor ``X`` has shape ``(N, n, n)`` and is symmetric in the two
  trailing (Latin) indices.
* A bi-form ``Xi`` has shape ``(N, n, N, n)``, indexed ``[alpha, i, beta, j]``,
  and is symmetric under the swap ``(alpha, i) <-> (beta, j)``. Flattening the
  pairs ``(alpha, i)`` row-major gives a symmetric ``Nn x Nn`` matrix.

All functions are pure and operate on numpy arrays. The symmetric eigensolver
is a batched cyclic Jacobi iteration, written here because every matrix in the
toolkit is at most 256 x 256 and robustness matters more than speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DiagnosticError, InputError

MAX_DIM = 16
ZERO_TOL = 1e-14
UNIT_TOL = 1e-12
HESS_ASYMMETRY_TOL = 1e-10


# ---------------------------------------------------------------- validation

def check_dims(N: int, n: int) -> None:
    if not (1 <= N <= MAX_DIM and 1 <= n <= MAX_DIM):
        raise InputError(f"dimensions N={N}, n={n} outside 1..{MAX_DIM}")


def as_direction(xi, tol: float = UNIT_TOL) -> np.ndarray:
    v = np.asarray(xi, dtype=float).reshape(-1)
    if v.size == 0 or v.size > MAX_DIM:
        raise InputError(f"direction of length {v.size} not supported")
    if not np.all(np.isfinite(v)):
        raise InputError("direction has non-finite entries")
    if abs(np.linalg.norm(v) - 1.0) > tol:
        raise InputError(f"direction is not unit (norm {np.linalg.norm(v):.15g})")
    return v


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if nv < ZERO_TOL:
        raise InputError("cannot normalise a zero vector")
    return v / nv


def sgn(a) -> np.ndarray:
    """a/|a|, with the zero vector mapped to zero."""
    a = np.asarray(a, dtype=float)
    na = np.linalg.norm(a)
    if na < ZERO_TOL:
        return np.zeros_like(a)
    return a / na


def as_grad(P, N: int | None = None, n: int | None = None) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2:
        raise InputError(f"gradient matrix must be 2-d, got shape {P.shape}")
    if (N is not None and P.shape[0] != N) or (n is not None and P.shape[1] != n):
        raise InputError(f"gradient matrix shape {P.shape} does not match ({N}, {n})")
    if not np.all(np.isfinite(P)):
        raise InputError("gradient matrix has non-finite entries")
    return P


def symmetrize_hessian(X) -> tuple[np.ndarray, float]:
    """Average the trailing indices; return the tensor and the asymmetry defect."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 3 or X.shape[1] != X.shape[2]:
        raise InputError(f"hessian tensor must have shape (N, n, n), got {X.shape}")
    Xt = np.swapaxes(X, 1, 2)
    defect = float(np.max(np.abs(X - Xt))) if X.size else 0.0
    return 0.5 * (X + Xt), defect


def hess_tensor(X, N: int | None = None, n: int | None = None) -> np.ndarray:
    """Validated, exactly symmetric hessian tensor."""
    Xs, defect = symmetrize_hessian(X)
    if defect > HESS_ASYMMETRY_TOL:
        raise InputError(f"hessian tensor asymmetric by {defect:.3g}")
    if (N is not None and Xs.shape[0] != N) or (n is not None and Xs.shape[1] != n):
        raise InputError(f"hessian shape {Xs.shape} does not match ({N}, {n}, {n})")
    if not np.all(np.isfinite(Xs)):
        raise InputError("hessian tensor has non-finite entries")
    return Xs


# --------------------------------------------------------------- contraction

def contract(S, T, latin: int) -> np.ndarray:
    """Full contraction of the trailing indices of ``S`` against all of ``T``.

    ``S`` has ``q`` Greek then ``latin`` Latin indices, ``T`` has ``p`` Greek
    then ``latin`` Latin indices (Greek-first layout). The result keeps the
    leading ``q - p`` Greek indices of ``S``.
    """
    S = np.asarray(S, dtype=float)
    T = np.asarray(T, dtype=float)
    q = S.ndim - latin
    p = T.ndim - latin
    if latin < 0 or p < 0 or q < p:
        raise InputError(f"cannot contract order ({q},{latin}) with ({p},{latin})")
    if S.shape[q - p:] != T.shape:
        raise InputError(f"shape mismatch in contraction: {S.shape} vs {T.shape}")
    return np.tensordot(S, T, axes=T.ndim)


def biform_greek_first(Xi) -> np.ndarray:
    """Reorder a bi-form ``[a, i, b, j]`` to the Greek-first layout ``[a, b, i, j]``."""
    return np.transpose(np.asarray(Xi, dtype=float), (0, 2, 1, 3))


def biform_apply(Xi, X) -> np.ndarray:
    """``(Xi : X)_a = Xi[a, i, b, j] X[b, i, j]``."""
    return np.einsum("aibj,bij->a", Xi, X)


def quad_form(Xi, P) -> float:
    """``Xi : P (x) P``."""
    return float(np.einsum("aibj,ai,bj->", Xi, P, P))


def rank_one_value(Xi, eta, w):
    """``Xi : (eta (x) w) (x) (eta (x) w)``; broadcasts over leading axes of eta, w."""
    return np.einsum("aibj,...a,...i,...b,...j->...", Xi, eta, w, eta, w)


def flatten_biform(Xi) -> np.ndarray:
    Xi = np.asarray(Xi, dtype=float)
    N, n = Xi.shape[0], Xi.shape[1]
    return Xi.reshape(N * n, N * n)


def unflatten_biform(M, N: int, n: int) -> np.ndarray:
    return np.asarray(M, dtype=float).reshape(N, n, N, n)


def biform_asymmetry(Xi) -> float:
    M = flatten_biform(Xi)
    return float(np.max(np.abs(M - M.T))) if M.size else 0.0


def as_biform(Xi, tol: float = 1e-12) -> np.ndarray:
    Xi = np.asarray(Xi, dtype=float)
    if Xi.ndim != 4 or Xi.shape[0] != Xi.shape[2] or Xi.shape[1] != Xi.shape[3]:
        raise InputError(f"bi-form must have shape (N, n, N, n), got {Xi.shape}")
    check_dims(Xi.shape[0], Xi.shape[1])
    scale = max(1.0, float(np.max(np.abs(Xi)))) if Xi.size else 1.0
    if biform_asymmetry(Xi) > tol * scale:
        raise InputError("bi-form lacks the (alpha,i)<->(beta,j) symmetry")
    return Xi


def separately_symmetric_defect(Xi) -> float:
    """Distance from the subspace with Xi[a,i,b,j] = Xi[b,j,a,i] = Xi[b,i,a,j]."""
    Xi = np.asarray(Xi, dtype=float)
    swap_pairs = np.transpose(Xi, (2, 3, 0, 1))
    swap_greek = np.transpose(Xi, (2, 1, 0, 3))
    return float(max(np.max(np.abs(Xi - swap_pairs)), np.max(np.abs(Xi - swap_greek))))


def identity_form(N: int, n: int) -> np.ndarray:
    """``Xi : P (x) P = |P|^2``."""
    return np.einsum("ab,ij->aibj", np.eye(N), np.eye(n))


def determinant_form() -> np.ndarray:
    """The N = n = 2 bi-form with ``Xi : P (x) P = 2 det P``."""
    Xi = np.zeros((2, 2, 2, 2))
    Xi[0, 0, 1, 1] = Xi[1, 1, 0, 0] = 1.0
    Xi[0, 1, 1, 0] = Xi[1, 0, 0, 1] = -1.0
    return Xi


# ---------------------------------------------------- symmetrised products

def vee(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise InputError(f"vee needs equal-length vectors, got {a.shape} and {b.shape}")
    return 0.5 * (np.outer(a, b) + np.outer(b, a))


def vee_grad(xi, P) -> np.ndarray:
    """Order-(2,1) tensor ``[a, b, i] = (xi_a P_bi + xi_b P_ai) / 2``."""
    xi = np.asarray(xi, dtype=float)
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != xi.shape[0]:
        raise InputError(f"vee_grad shape mismatch: xi {xi.shape}, P {P.shape}")
    return 0.5 * (np.einsum("a,bi->abi", xi, P) + np.einsum("b,ai->abi", xi, P))


def vee_hess(xi, X) -> np.ndarray:
    """Bi-form ``[a, i, b, j] = (xi_a X_bij + xi_b X_aij) / 2``."""
    xi = np.asarray(xi, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim != 3 or X.shape[0] != xi.shape[0]:
        raise InputError(f"vee_hess shape mismatch: xi {xi.shape}, X {X.shape}")
    return 0.5 * (np.einsum("a,bij->aibj", xi, X) + np.einsum("b,aij->aibj", xi, X))


def project_along(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    return np.outer(xi, xi)


def project_perp(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    return np.eye(xi.shape[0]) - np.outer(xi, xi)


def perp_part(xi, R) -> np.ndarray:
    """``xi^perp R`` for R of shape (..., N)."""
    R = np.asarray(R, dtype=float)
    return R - np.multiply.outer(R @ xi, xi)


# ------------------------------------------------------------- eigensolver

def _round_robin(m: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament ordering: m - 1 rounds of disjoint index pairs covering all pairs."""
    players = list(range(m)) + ([-1] if m % 2 else [])
    k = len(players)
    rounds = []
    for _ in range(k - 1):
        pairs = [(players[i], players[k - 1 - i]) for i in range(k // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p >= 0 and q >= 0]
        rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(A, tol: float = 1e-13, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition of symmetric matrices.

    Accepts a single ``(m, m)`` matrix or a stack ``(..., m, m)``. Returns
    ascending eigenvalues and the matching eigenvectors as columns. Each sweep
    visits every index pair once, in tournament order so that the rotations of
    one round act on disjoint rows and can be applied together. Sweeps stop
    once the off-diagonal Frobenius norm of every matrix in the stack falls
    below ``tol`` times its Frobenius norm.
    """
    A = np.array(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise InputError(f"jacobi_eigh needs square matrices, got {A.shape}")
    lead = A.shape[:-2]
    m = A.shape[-1]
    a = A.reshape(-1, m, m)
    if not np.all(np.isfinite(a)):
        raise DiagnosticError("non-finite matrix passed to the eigensolver")
    scale = np.maximum(np.max(np.abs(a), axis=(1, 2)), 1e-300) if a.size else np.ones(0)
    if a.size and np.any(np.max(np.abs(a - np.swapaxes(a, 1, 2)), axis=(1, 2)) > 1e-10 * scale):
        raise InputError("jacobi_eigh needs symmetric matrices")
    a = 0.5 * (a + np.swapaxes(a, 1, 2))
    v = np.broadcast_to(np.eye(m), a.shape).copy()
    thresh = tol * np.linalg.norm(a, axis=(1, 2))
    offmask = ~np.eye(m, dtype=bool)
    rounds = _round_robin(m)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(a[:, offmask] ** 2, axis=1))
        active = off > thresh
        if not active.any():
            break
        for P, Q in rounds:
            apq = a[:, P, Q]
            rot = active[:, None] & (apq != 0.0)
            if not rot.any():
                continue
            safe = np.where(rot, apq, 1.0)
            theta = (a[:, Q, Q] - a[:, P, P]) / (2.0 * safe)
            sign = np.where(theta >= 0, 1.0, -1.0)
            t = sign / (np.abs(theta) + np.hypot(theta, 1.0))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            c = np.where(rot, c, 1.0)[:, None, :]
            s = np.where(rot, s, 0.0)[:, None, :]
            ap = a[:, :, P]
            aq = a[:, :, Q]
            a[:, :, P] = c * ap - s * aq
            a[:, :, Q] = s * ap + c * aq
            cr = np.swapaxes(c, 1, 2)
            sr = np.swapaxes(s, 1, 2)
            ap = a[:, P, :]
            aq = a[:, Q, :]
            a[:, P, :] = cr * ap - sr * aq
            a[:, Q, :] = sr * ap + cr * aq
            bi, ki = np.nonzero(rot)
            a[bi, P[ki], Q[ki]] = 0.0
            a[bi, Q[ki], P[ki]] = 0.0
            vp = v[:, :, P]
            vq = v[:, :, Q]
            v[:, :, P] = c * vp - s * vq
            v[:, :, Q] = s * vp + c * vq
    w = np.diagonal(a, axis1=1, axis2=2).copy()
    order = np.argsort(w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    return w.reshape(*lead, m), v.reshape(*lead, m, m)


def min_eig(A) -> tuple[np.ndarray, np.ndarray]:
    """Smallest eigenvalue and a unit eigenvector (batched)."""
    w, v = jacobi_eigh(A)
    return w[..., 0], v[..., :, 0]


def max_eig(A) -> np.ndarray:
    w, _ = jacobi_eigh(A)
    return w[..., -1]


def numerical_radius(A) -> float:
    """max over unit eta of |A : eta (x) eta|, i.e. the largest |eigenvalue|."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"numerical_radius needs a square matrix, got {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if np.max(np.abs(A - A.T)) > 1e-12 * scale:
        raise InputError("numerical_radius needs a symmetric matrix")
    w, _ = jacobi_eigh(A)
    return float(np.max(np.abs(w)))


# ------------------------------------------------------- spectrum of xi v R

@dataclass(frozen=True)
class Spectrum:
    """Eigen-decomposition of ``xi v R`` with the three max-eigenvalue routes."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    max_closed: float
    max_sign_form: float
    max_pole_form: float


def _complete_basis(vectors: list[np.ndarray], N: int) -> list[np.ndarray]:
    basis = [b for b in vectors]
    for k in range(N):
        if len(basis) == N:
            break
        e = np.zeros(N)
        e[k] = 1.0
        for _ in range(2):
            for b in basis:
                e = e - (b @ e) * b
        ne = np.linalg.norm(e)
        if ne > 1e-8:
            basis.append(e / ne)
    return basis[len(vectors):]


def max_vee_eig(xi, R) -> np.ndarray:
    """Largest eigenvalue of ``xi v R`` for R of shape (..., N), cancellation-free.

    For N >= 2 this is ``(|R| + xi.R)/2``; when ``xi.R < 0`` it is evaluated as
    ``|xi^perp R|^2 / (2(|R| - xi.R))``. For N = 1 the matrix is the scalar
    ``xi R``.
    """
    xi = np.asarray(xi, dtype=float)
    R = np.asarray(R, dtype=float)
    a = R @ xi
    if xi.shape[0] == 1:
        return a
    nR = np.linalg.norm(R, axis=-1)
    b2 = np.sum(perp_part(xi, R) ** 2, axis=-1)
    denom = np.where(nR - a > 0, nR - a, 1.0)
    neg = np.where(nR - a > 0, b2 / (2.0 * denom), 0.0)
    return np.where(a >= 0, 0.5 * (nR + a), neg)


def max_eig_sign_form(xi, R) -> float:
    """``(xi.R)^+ + |R|/4 |sgn(R) - s(R) xi|^2`` with s(R) = +1 iff xi.R > 0."""
    xi = np.asarray(xi, dtype=float)
    R = np.asarray(R, dtype=float)
    a = float(xi @ R)
    s = 1.0 if a > 0 else -1.0
    return max(a, 0.0) + np.linalg.norm(R) / 4.0 * float(np.sum((sgn(R) - s * xi) ** 2))


def max_eig_pole_form(xi, R) -> float:
    """``max{xi.R, 0} + |R|/4 min |sgn(R) +- xi|^2``."""
    xi = np.asarray(xi, dtype=float)
    R = np.asarray(R, dtype=float)
    a = float(xi @ R)
    sR = sgn(R)
    d = min(float(np.sum((sR + xi) ** 2)), float(np.sum((sR - xi) ** 2)))
    return max(a, 0.0) + np.linalg.norm(R) / 4.0 * d


def vee_spectrum(xi, R, agree_tol: float = 1e-12) -> Spectrum:
    """Closed-form spectrum of ``xi v R`` and its eigenvectors.

    For independent ``xi, R`` the eigenvalues are ``-(|R| - xi.R)/2``, ``0``
    (multiplicity N - 2) and ``(|R| + xi.R)/2`` with eigenvectors
    ``xi -+ sgn(R)`` and the complement of ``span{xi, R}``. Both alternative
    max-eigenvalue representations are evaluated and must agree with the
    closed form (for N = 1 they represent ``max(xi R, 0)``).
    """
    xi = as_direction(xi)
    R = np.asarray(R, dtype=float).reshape(-1)
    N = xi.shape[0]
    if R.shape[0] != N:
        raise InputError(f"R has length {R.shape[0]}, expected {N}")
    a = float(xi @ R)
    nR = float(np.linalg.norm(R))
    sign_form = max_eig_sign_form(xi, R)
    pole_form = max_eig_pole_form(xi, R)

    if N == 1:
        vals = np.array([a])
        vecs = np.ones((1, 1))
        closed = a
        target = max(a, 0.0)
    elif nR < ZERO_TOL:
        vals = np.zeros(N)
        vecs = np.eye(N)
        closed = 0.0
        target = 0.0
    else:
        s_hat = R / nR
        c = float(xi @ s_hat)
        q = s_hat - c * xi
        qn = float(np.linalg.norm(q))
        b2 = float(np.sum(perp_part(xi, R) ** 2))
        lam_minus = -b2 / (2 * (nR + a)) if a > 0 else -0.5 * (nR - a)
        lam_plus = 0.5 * (nR + a) if a >= 0 else b2 / (2 * (nR - a))
        if qn > 1e-12:
            one_minus_c = qn * qn / (1 + c) if c > 0 else 1 - c
            one_plus_c = qn * qn / (1 - c) if c < 0 else 1 + c
            v_minus = normalize(one_minus_c * xi - q)
            v_plus = normalize(one_plus_c * xi + q)
            pairs = [(lam_minus, v_minus), (lam_plus, v_plus)]
            pairs += [(0.0, e) for e in _complete_basis([xi, q / qn], N)]
        else:
            pairs = [(a, xi)] + [(0.0, e) for e in _complete_basis([xi], N)]
        pairs.sort(key=lambda pr: pr[0])
        vals = np.array([pr[0] for pr in pairs])
        vecs = np.stack([pr[1] for pr in pairs], axis=1)
        closed = float(vals[-1])
        target = closed

    tol = agree_tol * max(1.0, nR)
    if abs(sign_form - target) > tol or abs(pole_form - target) > tol:
        raise DiagnosticError(
            f"max-eigenvalue routes disagree: closed {target!r}, "
            f"sign form {sign_form!r}, pole form {pole_form!r}"
        )
    return Spectrum(vals, vecs, closed, sign_form, pole_form)


# ---------------------------------------------------------------- frames

def complement_projector(xi, eta) -> np.ndarray:
    """Orthogonal projection onto ``span{xi, eta}^perp``."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    u2 = eta - (xi @ eta) * xi
    n2 = np.linalg.norm(u2)
    if n2 < 1e-12:
        raise InputError("degenerate frame: eta is parallel to xi")
    u2 = u2 / n2
    return np.eye(xi.shape[0]) - np.outer(xi, xi) - np.outer(u2, u2)


def frame_expand(a, xi, eta, Pi) -> tuple[float, float, np.ndarray]:
    """Coordinates of ``a`` on the oblique frame ``{xi, eta, Pi}``.

    Returns ``(lam, mu, Pi a)`` with ``a = lam xi + mu eta + Pi a``.
    """
    a = np.asarray(a, dtype=float)
    xi = as_direction(xi)
    eta = as_direction(eta)
    Pi = np.asarray(Pi, dtype=float)
    c = float(xi @ eta)
    if abs(c) >= 1.0 - 1e-12:
        raise InputError("degenerate frame: |xi . eta| = 1")
    if (np.max(np.abs(Pi @ Pi - Pi)) > 1e-10 or np.linalg.norm(Pi @ xi) > 1e-10
            or np.linalg.norm(Pi @ eta) > 1e-10 or np.max(np.abs(Pi - Pi.T)) > 1e-10):
        raise InputError("Pi is not the orthogonal projection onto span{xi, eta}^perp")
    xa = float(xi @ a)
    ea = float(eta @ a)
    det = 1.0 - c * c
    lam = (xa - c * ea) / det
    mu = (ea - c * xa) / det
    return lam, mu, Pi @ a
