"""Approximate jets, hyperplane projections and jet approximation by mollification.

An approximate jet only asks that the Taylor remainder ratio have liminf zero,
so along the radii schedule it is realised as a minimum rather than as
eventual decay. Oscillating maps need radii tuned to their phase; see
:func:`resonant_radii`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gamma

from . import tensor as T
from .errors import DiagnosticError, InputError
from .jets import (DEFAULT_SCHEDULE, INCONCLUSIVE, MEMBER, NON_MEMBER, SLOPE_THRESHOLD, Domain,
                   JetCandidate, JetVerdict, MapHandle, RadiiSchedule, fit_slope, remainder_noise,
                   test_membership)
from .orderings import vee_nonpos_hess
from .parallel import map_ordered

QUAD_NODES = 32
NORMALISATION_TOL = 1e-6
RELATION_TOL = 1e-6
CONVERGENCE_TOL = 1e-2


# ---------------------------------------------------------- approximate jets

@dataclass(frozen=True)
class ApproxJetCandidate:
    base_point: np.ndarray
    P: np.ndarray
    X: np.ndarray | None = None
    order: int = 1

    def __post_init__(self):
        if self.order not in (1, 2):
            raise InputError(f"jet order must be 1 or 2, got {self.order}")
        x = np.asarray(self.base_point, dtype=float).reshape(-1)
        P = np.asarray(self.P, dtype=float)
        N = P.reshape(-1).shape[0] // max(x.shape[0], 1)
        object.__setattr__(self, "base_point", x)
        object.__setattr__(self, "P", T.as_grad(P, N=N, n=x.shape[0]))
        if self.order == 2 and self.X is None:
            raise InputError("order-2 candidate needs a hessian tensor")
        if self.X is not None:
            object.__setattr__(self, "X", T.hess_tensor(self.X, N=N, n=x.shape[0]))

    @property
    def N(self) -> int:
        return self.P.shape[0]

    @property
    def n(self) -> int:
        return self.base_point.shape[0]


def resonant_radii(theta: float, count: int = 12, r_max: float = 0.1) -> np.ndarray:
    """Radii ``1/(theta + 2 pi k)`` at which ``cos(1/r) = cos(theta)`` exactly.

    ``k`` starts at the first value giving ``r <= r_max`` and doubles, so the
    list reaches deep radii with few points.
    """
    k0 = max(0, math.ceil((1.0 / r_max - theta) / (2 * math.pi)))
    ks = k0 + np.concatenate([[0], 2 ** np.arange(count - 1)])
    return 1.0 / (theta + 2 * math.pi * ks)


def slope_phase(p: float) -> float:
    return float(np.arccos(np.clip(p, -1.0, 1.0)))


def test_approx_jet(u: MapHandle, c: ApproxJetCandidate, s: RadiiSchedule = DEFAULT_SCHEDULE,
                    radii=None) -> JetVerdict:
    """Approximate-jet membership as the minimum remainder ratio over all radii.

    ``radii`` adds extra radii (e.g. from :func:`resonant_radii`) to the
    schedule. Member when the smallest ratio is below ``decay_tol``. Otherwise
    the geometric part of the table is inspected: still decaying means
    inconclusive, flat or growing means non-member.
    """
    if u.n != c.n or u.N != c.N:
        raise InputError(f"candidate dims ({c.N},{c.n}) do not match map ({u.N},{u.n})")
    if not u.domain.contains(c.base_point[None])[0]:
        raise InputError("base point lies outside the domain")
    jc = JetCandidate(c.base_point, np.eye(u.N)[0], c.P, c.X, c.order)
    sphere = s.sphere(u.n)
    geometric = s.radii()
    extra = np.array([], dtype=float) if radii is None else np.asarray(radii, dtype=float).reshape(-1)
    if np.any(extra <= 0):
        raise InputError("radii must be positive")
    all_r = np.concatenate([geometric, extra])
    u0 = u.eval(c.base_point)
    ratios = np.empty(all_r.shape[0])
    for k, r in enumerate(all_r):
        z = r * sphere
        keep = u.domain.contains(c.base_point + z)
        z = z[keep]
        if z.shape[0] == 0:
            ratios[k] = math.inf
            continue
        vals = u.eval(c.base_point + z)
        Q = vals - u0 - z @ c.P.T
        if c.order == 2:
            Q = Q - 0.5 * np.einsum("aij,mi,mj->ma", c.X, z, z)
        excess = np.maximum(np.linalg.norm(Q, axis=1) - remainder_noise(u, jc, z, vals), 0.0)
        ratios[k] = float(np.max(excess)) / r**c.order
    ng = geometric.shape[0]
    best = int(np.argmin(ratios))
    slope = fit_slope(geometric, ratios[:ng])
    if ratios[best] < s.decay_tol:
        status = MEMBER
    elif slope > SLOPE_THRESHOLD:
        status = INCONCLUSIVE
    else:
        status = NON_MEMBER
    order = np.argsort(-all_r, kind="stable")
    table = [(float(all_r[i]), float(ratios[i])) for i in order]
    return JetVerdict(status == MEMBER, status, table, slope, c.order,
                      extra={"min_ratio": float(ratios[best]), "argmin_radius": float(all_r[best])})


test_approx_jet.__test__ = False


# -------------------------------------------------------- hyperplane relation

def project_map(u: MapHandle, Pi: np.ndarray, name: str | None = None) -> MapHandle:
    """``Pi u`` as a map into the same target space."""
    Pi = np.asarray(Pi, dtype=float)
    grad = None if u.grad is None else (lambda x: Pi @ T.as_grad(u.grad(x), u.N, u.n))
    hess = None if u.hess is None else (lambda x: np.einsum("ab,bij->aij", Pi, T.hess_tensor(u.hess(x), u.N, u.n)))
    return MapHandle(lambda pts: u.func(pts) @ Pi.T, u.N, u.n, grad=grad, hess=hess, domain=u.domain,
                     noise=u.noise, name=name or f"{u.name}.projected", check_derivatives=False)


@dataclass
class HyperplaneReport:
    asserted: bool
    holds: bool | None
    reason: str
    jet_status: str
    approx_status: str
    q_gap: float | None = None
    vee_holds: bool | None = None
    off_axis_gap: float | None = None
    along_max_eig: float | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def hyperplane_relation(u: MapHandle, e, xi, jet: JetCandidate, approx: ApproxJetCandidate,
                        s: RadiiSchedule = DEFAULT_SCHEDULE, approx_radii=None) -> HyperplaneReport:
    """Check that a contact jet and an approximate jet of ``e^perp u`` fit together.

    The gradient relation ``Q = e^perp P`` is asserted when ``e != +-xi``, or
    when second order data are present on both sides. At second order with
    ``e^perp xi != 0`` the hessians must satisfy ``d v (Y - e^perp X) <= 0``
    for ``d = e^perp xi / |e^perp xi|``, equivalently ``Y = e^perp X`` off
    ``d`` and ``d.(Y - e^perp X) <= 0``. Inputs that do not verify make the
    relation vacuous rather than false.
    """
    e = T.as_direction(e)
    xi = T.as_direction(xi)
    if np.max(np.abs(jet.direction - xi)) > 1e-12:
        raise InputError("jet direction differs from xi")
    Pi = T.project_perp(e)
    ex = Pi @ xi
    degenerate = float(np.linalg.norm(ex)) < 1e-12
    jv = test_membership(u, jet, s)
    av = test_approx_jet(project_map(u, Pi), approx, s, approx_radii)
    base = dict(jet_status=jv.status, approx_status=av.status)
    if not jv.member:
        return HyperplaneReport(False, None, "contact jet not verified", **base)
    if not av.member:
        return HyperplaneReport(False, None, "approximate jet of the projection not verified", **base)
    second = jet.order == 2 and approx.order == 2
    if degenerate and not second:
        return HyperplaneReport(False, None, "e = +-xi: no first order relation", **base)
    q_gap = float(np.linalg.norm(approx.P - Pi @ jet.P))
    ok = q_gap <= RELATION_TOL * max(1.0, float(np.linalg.norm(jet.P)))
    report = HyperplaneReport(True, ok, "", q_gap=q_gap, **base)
    if second and not degenerate:
        d = ex / np.linalg.norm(ex)
        D = approx.X - np.einsum("ab,bij->aij", Pi, jet.X)
        vee = vee_nonpos_hess(d, D)
        along = np.einsum("a,aij->ij", d, D)
        report.vee_holds = vee.holds
        report.off_axis_gap = float(np.linalg.norm(D - np.einsum("a,ij->aij", d, along)))
        report.along_max_eig = float(T.max_eig(along))
        report.holds = ok and vee.holds
    return report


# ---------------------------------------------------------------- mollifier

def bump_mass(n: int) -> float:
    """Closed form of the integral of ``(1 - |t|^2)^4`` over the unit ball of R^n."""
    return math.pi ** (n / 2) * gamma(5) / gamma(n / 2 + 5)


def _ball_rule(n: int, nodes: int):
    """Product rule on the unit ball that is exact for the polynomial bump.

    On the line, Gauss-Legendre on each half interval. Otherwise
    Gauss-Legendre in the radius (and in the polar cosine for n = 3) with a
    trapezoid rule in the azimuth. A tensor rule on the cube would integrate
    the kernel's second derivatives poorly across the ball's boundary.
    """
    g, w = np.polynomial.legendre.leggauss(nodes)
    if n == 1:
        # two panels, so a kink of u at the evaluation point is integrated exactly
        half = 0.5 * (g + 1)
        return np.concatenate([-half, half])[:, None], np.concatenate([0.5 * w, 0.5 * w])
    rho = 0.5 * (g + 1)
    w_rho = 0.5 * w
    n_phi = 2 * nodes
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    w_phi = np.full(n_phi, 2 * np.pi / n_phi)
    if n == 2:
        R, PH = np.meshgrid(rho, phi, indexing="ij")
        W = np.outer(w_rho * rho, w_phi)
        t = np.stack([R * np.cos(PH), R * np.sin(PH)], axis=-1)
        return t.reshape(-1, 2), W.ravel()
    R, C, PH = np.meshgrid(rho, g, phi, indexing="ij")
    W = np.einsum("i,j,k->ijk", w_rho * rho**2, w, w_phi)
    S = np.sqrt(1 - C * C)
    t = np.stack([R * S * np.cos(PH), R * S * np.sin(PH), R * C], axis=-1)
    return t.reshape(-1, 3), W.ravel()


@lru_cache(maxsize=8)
def _kernel_rule(n: int, nodes: int):
    """Normalised bump, its gradient and hessian, premultiplied by quadrature weights."""
    t, wt = _ball_rule(n, nodes if n < 3 else max(nodes // 2, 8))
    q = np.maximum(1.0 - np.sum(t * t, axis=1), 0.0)
    mass = float(np.sum(wt * q**4))
    c = 1.0 / mass
    value = c * wt * q**4
    grad = -8 * c * (wt * q**3)[:, None] * t
    hess = c * wt[:, None, None] * (48 * (q**2)[:, None, None] * np.einsum("ki,kj->kij", t, t)
                                    - 8 * (q**3)[:, None, None] * np.eye(n))
    return t, value, grad, hess, mass


@dataclass(frozen=True)
class MollifierFamily:
    """``c (1 - |t|^2)^4`` on the unit ball, rescaled to each scale."""

    scales: tuple = (0.1, 0.05, 0.025, 0.0125, 0.00625)
    nodes: int = QUAD_NODES

    def __post_init__(self):
        sc = tuple(float(v) for v in self.scales)
        if not sc or any(v <= 0 for v in sc) or any(a <= b for a, b in zip(sc, sc[1:])):
            raise InputError("scales must be positive and strictly decreasing")
        object.__setattr__(self, "scales", sc)

    def rule(self, n: int):
        if n > 3:
            raise InputError("quadrature mollification supports n <= 3")
        t, value, grad, hess, mass = _kernel_rule(n, self.nodes)
        if abs(mass - bump_mass(n)) > NORMALISATION_TOL * bump_mass(n):
            raise DiagnosticError(f"kernel quadrature mass {mass} differs from {bump_mass(n)}")
        return t, value, grad, hess


def _shrink(dom: Domain, s: float) -> Domain:
    if dom.kind == "ball":
        return Domain("ball", dom.center, dom.radius - s)
    if dom.kind == "box":
        return Domain("box", lower=tuple(v + s for v in dom.lower), upper=tuple(v - s for v in dom.upper))
    return dom


def mollify(u: MapHandle, scale: float, family: MollifierFamily | None = None) -> MapHandle:
    """Quadrature convolution with the rescaled bump, with kernel-derived derivatives."""
    if scale <= 0:
        raise InputError("mollification scale must be positive")
    family = family or MollifierFamily()
    t, value, grad_w, hess_w = family.rule(u.n)
    shifts = scale * t

    def samples(x):
        x = np.asarray(x, dtype=float).reshape(-1, u.n)
        return u.eval((x[:, None, :] - shifts[None]).reshape(-1, u.n))

    def f(pts):
        pts = np.atleast_2d(pts)
        vals = samples(pts).reshape(pts.shape[0], -1, u.N)
        return np.einsum("k,mka->ma", value, vals)

    def grad(x):
        vals = samples(x).reshape(-1, u.N)
        return np.einsum("ki,ka->ai", grad_w, vals) / scale

    def hess(x):
        vals = samples(x).reshape(-1, u.N)
        return np.einsum("kij,ka->aij", hess_w, vals) / scale**2

    return MapHandle(f, u.N, u.n, grad=grad, hess=hess, domain=_shrink(u.domain, scale),
                     name=f"{u.name}*eta[{scale:g}]", check_derivatives=False)


# ---------------------------------------------------- approximation experiment

def _locate_max(phi, x: np.ndarray, radius: float):
    """Grid search over the ball then cyclic bounded 1-D refinement."""
    n = x.shape[0]
    per_axis = {1: 201, 2: 41}.get(n, 15)
    axis = np.linspace(-radius, radius, per_axis)
    grid = np.stack([g.ravel() for g in np.meshgrid(*([axis] * n), indexing="ij")], axis=1)
    grid = grid[np.linalg.norm(grid, axis=1) <= radius]
    vals = phi(x + grid)
    best = x + grid[int(np.argmax(vals))]
    h = axis[1] - axis[0]
    for _ in range(3):
        for i in range(n):
            def neg(v, i=i):
                y = best.copy()
                y[i] = v
                return -float(phi(y[None])[0])
            res = minimize_scalar(neg, bounds=(best[i] - h, best[i] + h), method="bounded",
                                  options={"xatol": 1e-12 * max(1.0, radius)})
            if -res.fun >= float(phi(best[None])[0]):
                best[i] = res.x
        h *= 0.5
    return best


def _perp_hessian(xi, H) -> np.ndarray:
    return np.einsum("ab,bij->aij", T.project_perp(xi), H)


@dataclass
class ScaleStep:
    scale: float
    status: str
    x_m: list
    P_m: list
    X_m: list
    err_P: float
    err_xi_X: float
    err_perp_X: float
    perp_hessian: list
    assumption_distance: float | None = None


@dataclass
class ApproximationReport:
    steps: list
    xi_converges: bool
    perp_converges: bool
    rate_P: float
    rate_xi_X: float
    final_err: float
    target_perp: list
    assumption_holds: bool | None = None
    note: str = ""

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["steps"] = [dict(st.__dict__) for st in self.steps]
        for k in ("rate_P", "rate_xi_X"):
            if math.isinf(d[k]):
                d[k] = "inf"
        return d


def _approximation_step(u: MapHandle, jet: JetCandidate, scale: float, family: MollifierFamily,
                        s: RadiiSchedule, e, Q) -> ScaleStep:
    x, xi = jet.base_point, jet.direction
    um = mollify(u, scale, family)
    xiX = np.einsum("a,aij->ij", xi, jet.X)
    xiP = xi @ jet.P

    def phi(ys):
        d = ys - x
        quad = d @ xiP + 0.5 * np.einsum("ij,mi,mj->m", xiX, d, d)
        return um.eval(ys) @ xi - quad - np.sum(d * d, axis=1) ** 2

    radius = 2 * scale
    xm = _locate_max(phi, x, radius)
    d = xm - x
    status = MEMBER
    if np.linalg.norm(d) > 0.95 * radius:
        status = INCONCLUSIVE
    Pm = T.as_grad(um.grad(xm), u.N, u.n)
    Hm = T.hess_tensor(um.hess(xm), u.N, u.n)
    # hessian of the quartic penalty, so that X_m dominates D^2 xi.u_m at a maximum
    Xm_scalar = xiX + 4 * float(d @ d) * np.eye(u.n) + 8 * np.outer(d, d)
    perp_H = _perp_hessian(xi, Hm)
    Xm = perp_H + np.einsum("a,ij->aij", xi, Xm_scalar)
    if status == MEMBER:
        v = test_membership(um, JetCandidate(xm, xi, Pm, Xm, 2), s)
        status = v.status
    target_perp = _perp_hessian(xi, jet.X)
    dist = None
    if e is not None:
        Pi = T.project_perp(e)
        dist = float(np.linalg.norm(Pi @ Pm - Q))
    return ScaleStep(scale, status, xm.tolist(), Pm.tolist(), Xm.tolist(),
                     float(np.linalg.norm(Pm - jet.P)), float(np.linalg.norm(Xm_scalar - xiX)),
                     float(np.linalg.norm(perp_H - target_perp)), perp_H.tolist(), dist)


def approximation_experiment(u: MapHandle, jet: JetCandidate, family: MollifierFamily | None = None,
                             s: RadiiSchedule = DEFAULT_SCHEDULE, e=None, Q=None,
                             verify_jet: bool = True) -> ApproximationReport:
    """Follow a contact jet through mollified approximations of ``u``.

    At each scale ``x_m`` maximises ``xi.u_m`` minus the candidate quadratic
    and a quartic penalty near ``x``; then ``P_m = Du_m(x_m)`` and
    ``X_m = D^2 xi^perp u_m(x_m) + xi (x) X_m`` with ``X_m`` the penalised
    scalar hessian. Membership of ``(P_m, X_m)`` in the jet of ``u_m`` is
    checked. The report separates the convergence of ``(P_m, xi.X_m)`` from
    that of the perpendicular hessians. When ``e`` and ``Q`` are given, the
    distance from ``e^perp Du_m(x_m)`` to ``Q`` is tracked as well, after
    ``Q`` is verified as an approximate jet of ``e^perp u``.
    """
    if jet.order != 2:
        raise InputError("approximation experiment needs an order-2 jet")
    family = family or MollifierFamily()
    if verify_jet:
        v = test_membership(u, jet, s)
        if not v.member:
            raise InputError(f"jet is not verified ({v.status})")
    assumption = None
    if e is not None:
        e = T.as_direction(e)
        if abs(float(e @ jet.direction)) < 1e-12:
            raise InputError("e must not be orthogonal to xi")
        Q = np.zeros((u.N, u.n)) if Q is None else T.as_grad(Q, u.N, u.n)
        av = test_approx_jet(project_map(u, T.project_perp(e)), ApproxJetCandidate(jet.base_point, Q), s)
        assumption = av.member
    steps = map_ordered(lambda sc: _approximation_step(u, jet, sc, family, s, e, Q), family.scales)
    scales = np.array([st.scale for st in steps])
    eP = np.array([st.err_P for st in steps])
    eX = np.array([st.err_xi_X for st in steps])
    final = max(eP[-1], eX[-1])
    target_perp = _perp_hessian(jet.direction, jet.X)
    perp_scale = max(1.0, float(np.linalg.norm(target_perp)))
    ok_steps = all(st.status == MEMBER for st in steps)
    note = "" if ok_steps else "some scales did not verify; see step statuses"
    if assumption is not None:
        dists = [st.assumption_distance for st in steps]
        assumption = assumption and dists[-1] <= CONVERGENCE_TOL
    return ApproximationReport(steps, bool(ok_steps and final < CONVERGENCE_TOL),
                               bool(steps[-1].err_perp_X < CONVERGENCE_TOL * perp_scale),
                               fit_slope(scales, eP), fit_slope(scales, eX), float(final),
                               target_perp.tolist(), assumption, note)
