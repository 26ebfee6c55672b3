"""Analytic maps with known jets, used as oracles and by the CLI builtins."""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .errors import InputError
from .jets import Domain, MapHandle

MEMBERSHIP_TOL = 1e-10


# -------------------------------------------------------------- kinked line

def kinked_line(A, B, C) -> MapHandle:
    """``u(z) = -A z`` for ``z <= 0`` and ``B z + C z^2 / 2`` for ``z > 0`` (n = 1)."""
    A, B, C = (np.asarray(v, dtype=float).reshape(-1) for v in (A, B, C))
    if not (A.shape == B.shape == C.shape):
        raise InputError("A, B, C must have equal length")
    if np.linalg.norm(A + B) < T.ZERO_TOL:
        raise InputError("A + B must be nonzero")

    def f(pts):
        z = pts[:, 0][:, None]
        return np.where(z <= 0, -A * z, B * z + 0.5 * C * z * z)

    return MapHandle(f, A.shape[0], 1, name="kinked_line")


def kinked_line_gradient(A, B, t: float) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    return (0.5 * (B - A) + 0.5 * t * (B + A)).reshape(-1, 1)


def _as_hessian_vector(X, N: int) -> np.ndarray:
    return np.asarray(X, dtype=float).reshape(N)


def _on_ray(X, apex, axis) -> bool:
    """Whether ``X = apex - s * axis`` for some ``s >= 0``."""
    d = X - apex
    s = -float(d @ axis) / float(axis @ axis)
    scale = max(1.0, float(np.linalg.norm(X)), float(np.linalg.norm(apex)))
    return s >= -MEMBERSHIP_TOL and np.linalg.norm(d + s * axis) <= MEMBERSHIP_TOL * scale


def _kinked_line_predicate(A, B, C, xi, t, X, order, *, axis_sign, stratum_sign) -> bool:
    A, B, C = (np.asarray(v, dtype=float).reshape(-1) for v in (A, B, C))
    xi = T.as_direction(xi)
    S = A + B
    admissible = axis_sign * S / np.linalg.norm(S)
    if np.linalg.norm(xi - admissible) > 1e-12:
        return False
    if not -1 - MEMBERSHIP_TOL <= t <= 1 + MEMBERSHIP_TOL:
        return False
    if order == 1:
        return True
    X = _as_hessian_vector(X, A.shape[0])
    if abs(t) < 1 - MEMBERSHIP_TOL:
        return True
    # the endpoint whose open side is quadratic carries the C-shifted ray
    c_side = -stratum_sign if t < 0 else stratum_sign
    apex = C if c_side > 0 else np.zeros_like(C)
    return _on_ray(X, apex, S)


def kinked_line_jet_as_stated(A, B, C, xi, t, X=None, order: int = 1) -> bool:
    """Closed-form jet membership for :func:`kinked_line`, transcribed as published.

    The published statement admits the direction ``(A+B)/|A+B|`` and puts the
    ``C``-shifted ray at ``t = -1``.
    """
    return _kinked_line_predicate(A, B, C, xi, t, X, order, axis_sign=+1, stratum_sign=-1)


def kinked_line_jet(A, B, C, xi, t, X=None, order: int = 1) -> bool:
    """Closed-form jet membership for :func:`kinked_line`, derived from the definition.

    Nonempty only for ``xi = -(A+B)/|A+B|``; first order ``t`` in [-1, 1];
    at second order any ``X`` for ``|t| < 1``, ``X = C - s(A+B)`` at ``t = +1``
    and ``X = -s(A+B)`` at ``t = -1`` (``s >= 0``).
    """
    return _kinked_line_predicate(A, B, C, xi, t, X, order, axis_sign=-1, stratum_sign=+1)


def kinked_line_cases(A, B, C, t_grid=None, s_values=(0.0, 1.0, 10.0)) -> list[dict]:
    """Candidate battery for :func:`kinked_line`.

    Three directions (the admissible axis, its negative and a perpendicular
    one), each with a first order candidate per ``t`` and, per ``t``, second
    order candidates on both endpoint rays (``s`` in ``s_values``) and on the
    two opposite rays (positive ``s`` only).
    """
    A, B, C = (np.asarray(v, dtype=float).reshape(-1) for v in (A, B, C))
    S = A + B
    axis = S / np.linalg.norm(S)
    if t_grid is None:
        t_grid = np.linspace(-1.5, 1.5, 13)
    perp = np.zeros_like(axis)
    if axis.shape[0] > 1:
        perp[0], perp[1] = -axis[1], axis[0]
        perp /= np.linalg.norm(perp)
    directions = [-axis, axis] + ([perp] if axis.shape[0] > 1 else [])
    hessians = [C - s * S for s in s_values] + [-s * S for s in s_values]
    hessians += [C + s * S for s in s_values if s > 0] + [s * S for s in s_values if s > 0]
    cases = []
    for xi in directions:
        for t in t_grid:
            cases.append({"xi": xi, "t": float(t), "order": 1, "X": None})
            for X in hessians:
                cases.append({"xi": xi, "t": float(t), "order": 2, "X": X})
    return cases


# --------------------------------------------------------- oscillating maps

def oscillating_line() -> MapHandle:
    """``u(z) = z cos(1/|z|)``, ``u(0) = 0``: approximate slopes fill [-1, 1]."""

    def f(pts):
        z = pts[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.where(z == 0, 0.0, z * np.cos(1.0 / np.where(z == 0, 1.0, np.abs(z))))
        return v[:, None]

    return MapHandle(f, 1, 1, name="oscillating_line")


def oscillating_cusp() -> MapHandle:
    """``u(z) = -|z| cos^2(1/z)``, ``u(0) = 0``."""

    def f(pts):
        z = pts[:, 0]
        safe = np.where(z == 0, 1.0, z)
        v = np.where(z == 0, 0.0, -np.abs(z) * np.cos(1.0 / safe) ** 2)
        return v[:, None]

    return MapHandle(f, 1, 1, name="oscillating_cusp")


# --------------------------------------------------------- unstable contact

def holder_ridge(alpha: float = 0.5) -> MapHandle:
    """``u(z) = (-|z|^(1+alpha), 0)`` on the line."""
    if not 0 < alpha < 1:
        raise InputError("alpha must lie in (0, 1)")

    def f(pts):
        z = pts[:, 0]
        return np.stack([-np.abs(z) ** (1 + alpha), np.zeros_like(z)], axis=1)

    return MapHandle(f, 2, 1, name="holder_ridge")


def holder_ridge_contact(k: float = 1.0) -> MapHandle:
    """``psi(z) = (0, k z^2)``, a second order contact map of the ridge at 0 along e1."""

    def f(pts):
        z = pts[:, 0]
        return np.stack([np.zeros_like(z), k * z * z], axis=1)

    return MapHandle(f, 2, 1, grad=lambda x: np.array([[0.0], [2 * k * x[0]]]),
                     hess=lambda x: np.array([[[0.0]], [[2 * k]]]), name="holder_ridge_contact")


# ----------------------------------------------------------- smooth battery

def quadratic_map(c0, P, X, name):
    c0 = np.asarray(c0, dtype=float)
    P = np.asarray(P, dtype=float)
    X = np.asarray(X, dtype=float)

    def f(pts):
        return c0 + pts @ P.T + 0.5 * np.einsum("aij,mi,mj->ma", X, pts, pts)

    return MapHandle(f, P.shape[0], P.shape[1],
                     grad=lambda x: P + np.einsum("aij,j->ai", X, x),
                     hess=lambda x: X.copy(), name=name)


def smooth_battery() -> list[MapHandle]:
    """Ten smooth maps with analytic derivatives, of mixed dimensions."""
    maps = []
    v = np.array([1.0, -2.0])
    maps.append(MapHandle(lambda p: np.sin(p[:, :1]) * v, 2, 2,
                          grad=lambda x: np.outer(v, [np.cos(x[0]), 0.0]),
                          hess=lambda x: np.einsum("a,ij->aij", v, np.diag([-np.sin(x[0]), 0.0])),
                          name="sine_ray"))
    maps.append(MapHandle(lambda p: np.stack([p[:, 0] ** 2 + p[:, 1], np.exp(p[:, 0] * p[:, 1])], axis=1), 2, 2,
                          grad=lambda x: np.array([[2 * x[0], 1.0],
                                                   [x[1] * np.exp(x[0] * x[1]), x[0] * np.exp(x[0] * x[1])]]),
                          hess=lambda x: np.array([[[2.0, 0.0], [0.0, 0.0]],
                                                   [[x[1] ** 2, 1 + x[0] * x[1]], [1 + x[0] * x[1], x[0] ** 2]]])
                          * np.array([1.0, np.exp(x[0] * x[1])])[:, None, None],
                          name="exp_product"))
    maps.append(MapHandle(lambda p: np.stack([np.cos(p[:, 0]), np.sin(p[:, 0]), p[:, 0] ** 3], axis=1), 3, 1,
                          grad=lambda x: np.array([[-np.sin(x[0])], [np.cos(x[0])], [3 * x[0] ** 2]]),
                          hess=lambda x: np.array([[[-np.cos(x[0])]], [[-np.sin(x[0])]], [[6 * x[0]]]]),
                          name="helix"))
    maps.append(MapHandle(lambda p: np.stack([np.sum(p ** 2, axis=1), p[:, 0] * p[:, 1] * p[:, 2]], axis=1), 2, 3,
                          grad=lambda x: np.array([2 * x, [x[1] * x[2], x[0] * x[2], x[0] * x[1]]]),
                          hess=lambda x: np.array([2 * np.eye(3),
                                                   [[0, x[2], x[1]], [x[2], 0, x[0]], [x[1], x[0], 0]]]),
                          name="norm_and_volume"))
    maps.append(MapHandle(lambda p: np.log1p(p[:, :1] ** 2) * np.array([1.0, 1.0]), 2, 1,
                          grad=lambda x: np.array([[2 * x[0] / (1 + x[0] ** 2)]] * 2),
                          hess=lambda x: np.array([[[2 * (1 - x[0] ** 2) / (1 + x[0] ** 2) ** 2]]] * 2),
                          name="log_bump"))
    rng = np.random.default_rng(7)
    for k in range(3):
        N, n = [(2, 2), (3, 2), (2, 3)][k]
        X = rng.standard_normal((N, n, n))
        X = 0.5 * (X + np.swapaxes(X, 1, 2))
        maps.append(quadratic_map(rng.standard_normal(N), rng.standard_normal((N, n)), X, f"quadratic_{k}"))
    maps.append(MapHandle(lambda p: np.stack([np.sin(p[:, 0] + 2 * p[:, 1]), np.cos(p[:, 0] - p[:, 1])], axis=1), 2, 2,
                          grad=lambda x: np.array([[np.cos(x[0] + 2 * x[1]), 2 * np.cos(x[0] + 2 * x[1])],
                                                   [-np.sin(x[0] - x[1]), np.sin(x[0] - x[1])]]),
                          hess=lambda x: np.array([-np.sin(x[0] + 2 * x[1]) * np.array([[1, 2], [2, 4]]),
                                                   -np.cos(x[0] - x[1]) * np.array([[1, -1], [-1, 1]])]),
                          name="waves"))
    maps.append(MapHandle(lambda p: np.stack([p[:, 0] ** 4, -p[:, 0] ** 2, p[:, 0]], axis=1), 3, 1,
                          grad=lambda x: np.array([[4 * x[0] ** 3], [-2 * x[0]], [1.0]]),
                          hess=lambda x: np.array([[[12 * x[0] ** 2]], [[-2.0]], [[0.0]]]),
                          name="quartic_curve"))
    return maps


# ------------------------------------------------------ piecewise polynomial

def piecewise_polynomial(n: int, N: int, regions: list[dict]) -> MapHandle:
    """Map defined by polynomial pieces on half-space intersections.

    Each region is ``{"halfspaces": [[a..., b], ...], "terms": [{"coef": [...],
    "powers": [...]}, ...]}``; a point belongs to a region when ``a . x <= b``
    for every listed half-space. The first matching region wins.
    """
    parsed = []
    for reg in regions:
        hs = np.asarray(reg.get("halfspaces", []), dtype=float).reshape(-1, n + 1)
        terms = []
        for term in reg.get("terms", []):
            coef = np.asarray(term["coef"], dtype=float).reshape(N)
            powers = np.asarray(term.get("powers", [0] * n), dtype=int).reshape(n)
            if np.any(powers < 0):
                raise InputError("monomial powers must be nonnegative")
            terms.append((coef, powers))
        parsed.append((hs, terms))
    if not parsed:
        raise InputError("piecewise map needs at least one region")

    def f(pts):
        out = np.full((pts.shape[0], N), np.nan)
        done = np.zeros(pts.shape[0], dtype=bool)
        for hs, terms in parsed:
            inside = ~done
            for row in hs:
                inside &= pts @ row[:n] <= row[n]
            val = np.zeros((pts.shape[0], N))
            for coef, powers in terms:
                val += np.prod(pts ** powers, axis=1)[:, None] * coef
            out[inside] = val[inside]
            done |= inside
        return out

    return MapHandle(f, N, n, name="piecewise_polynomial")


def ball(center, radius) -> Domain:
    return Domain("ball", tuple(float(c) for c in center), float(radius))
