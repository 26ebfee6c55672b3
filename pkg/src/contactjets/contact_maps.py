"""Contact maps: smooth test maps touching ``u`` at a point along a direction.

``psi`` is a second order contact map of ``u`` at ``x`` along ``xi`` when
``psi(x) = u(x)`` and, for every slope ``L``, near ``x``

    |xi^perp (u - psi)(y)|^2 <= L^2 |y - x|^2 [-xi.(u - psi)(y)]

(first order: ``L |y - x|`` in place of ``L^2 |y - x|^2``). "For every L" is
emulated by a decreasing list of slopes, each searched along a radii schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import tensor as T
from .errors import InputError
from .jets import (EPS, NOISE_FACTOR, STRUCTURAL_FLOOR, DEFAULT_SCHEDULE, JetCandidate, MapHandle,
                   RadiiSchedule, decide_decay, fit_slope, minimal_coupling, test_structural)
from .orderings import vee_nonpos_hess

STRICT_MARGIN = 1e-6
GRADIENT_TOL = 1e-8
RIGID_THRESHOLD = 1e6


@dataclass(frozen=True)
class ConeSchedule:
    slopes: tuple = (1.0, 0.5, 0.25, 0.125, 0.0625)
    radius_per_slope: tuple | None = None

    def __post_init__(self):
        sl = tuple(float(v) for v in self.slopes)
        if not sl or any(v <= 0 for v in sl) or any(b >= a for a, b in zip(sl, sl[1:])):
            raise InputError("cone slopes must be positive and strictly decreasing")
        object.__setattr__(self, "slopes", sl)
        if self.radius_per_slope is not None:
            rp = tuple(float(v) for v in self.radius_per_slope)
            if len(rp) != len(sl) or any(v <= 0 for v in rp):
                raise InputError("radius_per_slope must match slopes and be positive")
            object.__setattr__(self, "radius_per_slope", rp)


DEFAULT_CONES = ConeSchedule()


@dataclass(frozen=True)
class ContactCandidate:
    """A test map ``psi`` with its base point, direction and order.

    ``gradient``/``hessian`` pin the derivatives at the base point; when absent
    they are read from ``psi.grad``/``psi.hess``.
    """

    psi: MapHandle
    base_point: np.ndarray
    direction: np.ndarray
    order: int = 2
    gradient: np.ndarray | None = None
    hessian: np.ndarray | None = None

    def __post_init__(self):
        if self.order not in (1, 2):
            raise InputError("contact order must be 1 or 2")
        object.__setattr__(self, "direction", T.as_direction(self.direction))
        object.__setattr__(self, "base_point", np.asarray(self.base_point, dtype=float).reshape(-1))
        if self.psi.N != self.direction.shape[0] or self.psi.n != self.base_point.shape[0]:
            raise InputError("test map dimensions do not match direction and base point")

    def jet_data(self) -> tuple[np.ndarray, np.ndarray | None]:
        x = self.base_point
        G = self.gradient
        if G is None:
            if self.psi.grad is None:
                raise InputError("test map has no gradient")
            G = self.psi.grad(x)
        H = self.hessian
        if H is None and self.order == 2:
            if self.psi.hess is None:
                raise InputError("test map has no hessian")
            H = self.psi.hess(x)
        G = T.as_grad(G, self.psi.N, self.psi.n)
        H = None if H is None else T.hess_tensor(H, self.psi.N, self.psi.n)
        return G, H


@dataclass
class ContactVerdict:
    is_contact: bool
    slopes_passed: dict
    finest_slope: float | None
    required_slope: list
    touches: bool = True
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "is_contact": self.is_contact,
            "slopes_passed": {str(k): v for k, v in self.slopes_passed.items()},
            "finest_slope": self.finest_slope,
            "required_slope": [[float(r), "inf" if math.isinf(v) else float(v)] for r, v in self.required_slope],
            "touches": self.touches,
            "note": self.note,
        }


def _difference_shells(u: MapHandle, c: ContactCandidate, s: RadiiSchedule):
    sphere = s.sphere(u.n)
    x = c.base_point
    for r in s.radii():
        z = r * sphere
        z = z[u.domain.contains(x + z)]
        uv = u.eval(x + z) if z.shape[0] else np.zeros((0, u.N))
        pv = c.psi.eval(x + z) if z.shape[0] else np.zeros((0, u.N))
        nu = NOISE_FACTOR * EPS * (np.linalg.norm(uv, axis=1) + np.linalg.norm(pv, axis=1)) + u.eval_noise(x + z)
        yield r, z, uv - pv, nu


def is_contact_map(u: MapHandle, c: ContactCandidate, cones: ConeSchedule = DEFAULT_CONES,
                   s: RadiiSchedule = DEFAULT_SCHEDULE) -> ContactVerdict:
    """Check the cone-controlled coupled inequality for every listed slope.

    A slope passes when the inequality holds at every sample on a tail of the
    schedule containing at least the two finest radii (restricted to radii up
    to ``radius_per_slope`` when given). Samples where ``u - psi`` is within
    round-off of zero count as satisfied.
    """
    if u.N != c.psi.N or u.n != c.psi.n:
        raise InputError("u and psi dimensions differ")
    x = c.base_point
    gap = float(np.linalg.norm(u.eval(x) - c.psi.eval(x)))
    scale = max(1.0, float(np.linalg.norm(u.eval(x))))
    xi = c.direction
    shells = list(_difference_shells(u, c, s))

    required = []
    for r, z, d, nu in shells:
        a = d @ xi
        b = np.maximum(np.linalg.norm(T.perp_part(xi, d), axis=1) - nu, 0.0)
        resolved = np.linalg.norm(d, axis=1) > nu
        neg = np.maximum(-a, 0.0) + nu
        cone_unit = r**2 if c.order == 2 else r
        need = np.where(resolved, b * b / (cone_unit * neg), 0.0)
        # a resolved positive xi-part puts the right-hand side below zero for every slope
        need = np.where(a > nu, math.inf, need)
        worst = float(np.max(need, initial=0.0))
        # slope L must satisfy L^2 >= need (order 2) or L >= need (order 1)
        required.append((r, math.sqrt(worst) if c.order == 2 else worst))

    passed = {}
    for k, L in enumerate(cones.slopes):
        cap = math.inf if cones.radius_per_slope is None else cones.radius_per_slope[k]
        ok = [req <= L * (1 + 1e-12) for (r, req) in required if r <= cap * (1 + 1e-12)]
        tail = 0
        for flag in reversed(ok):
            if not flag:
                break
            tail += 1
        passed[L] = tail >= 2

    finest = None
    for L in cones.slopes:
        if not passed[L]:
            break
        finest = L
    touches = gap <= 1e-10 * scale
    note = "" if touches else f"psi(x) differs from u(x) by {gap:.3g}"
    return ContactVerdict(touches and all(passed.values()), passed, finest, required, touches, note)


# ------------------------------------------------------------------ moduli

@dataclass
class RadialModulus:
    """Increasing ``sigma(r)``: monotone cubic in log-log between schedule radii.

    Below the finest radius it continues as a power law with exponent at
    least 1/4, above the coarsest it is held constant.
    """

    radii: np.ndarray
    values: np.ndarray
    tail_exponent: float
    _spline: PchipInterpolator = field(init=False, repr=False)

    def __post_init__(self):
        order = np.argsort(self.radii)
        lr = np.log(np.asarray(self.radii, dtype=float)[order])
        lv = np.log(np.maximum(np.asarray(self.values, dtype=float)[order], STRUCTURAL_FLOOR))
        self._lr, self._lv = lr, lv
        self._spline = PchipInterpolator(lr, lv, extrapolate=False)

    @classmethod
    def from_envelope(cls, radii, envelope) -> "RadialModulus":
        """Bump a running-max envelope up by one midpoint-averaging pass.

        Doubling the midpoint average keeps the result above the envelope
        while staying monotone.
        """
        env = np.maximum(np.asarray(envelope, dtype=float), STRUCTURAL_FLOOR)
        bumped = env + np.append(env[1:], env[-1])
        slope = fit_slope(radii, bumped)
        tail = 0.25 if not math.isfinite(slope) else max(slope, 0.25)
        return cls(np.asarray(radii, dtype=float), bumped, tail)

    def log_derivs(self, r) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(log sigma, d log sigma / d log r, second derivative)`` at radii ``r``."""
        L = np.log(np.maximum(np.asarray(r, dtype=float), 1e-300))
        lo, hi = self._lr[0], self._lr[-1]
        s0 = np.empty_like(L)
        s1 = np.empty_like(L)
        s2 = np.zeros_like(L)
        below = L < lo
        above = L > hi
        mid = ~(below | above)
        s0[below] = self._lv[0] + self.tail_exponent * (L[below] - lo)
        s1[below] = self.tail_exponent
        s0[above] = self._lv[-1]
        s1[above] = 0.0
        if mid.any():
            s0[mid] = self._spline(L[mid])
            s1[mid] = self._spline(L[mid], 1)
            s2[mid] = self._spline(L[mid], 2)
        return s0, s1, s2

    def __call__(self, r) -> np.ndarray:
        return np.exp(self.log_derivs(r)[0])


def _radial_bump(modulus: RadialModulus, power: int):
    """``g(z) = sigma(|z|) |z|^power`` with gradient and hessian."""

    def value(z):
        r = np.linalg.norm(z, axis=-1)
        out = np.zeros_like(r)
        pos = r > 0
        out[pos] = modulus(r[pos]) * r[pos] ** power
        return out

    def derivs(z):
        z = np.asarray(z, dtype=float)
        n = z.shape[0]
        r = float(np.linalg.norm(z))
        if r == 0:
            return np.zeros(n), np.zeros((n, n))
        s0, s1, s2 = (float(v[0]) for v in modulus.log_derivs(np.array([r])))
        g = math.exp(s0) * r**power
        g1 = g * (s1 + power) / r
        g2 = g / r**2 * ((s1 + power) * (s1 + power - 1) + s2)
        e = z / r
        return g1 * e, g2 * np.outer(e, e) + g1 / r * (np.eye(n) - np.outer(e, e))

    return value, derivs


# ----------------------------------------------------------- construction

def contact_map_from_jet(u: MapHandle, jc: JetCandidate, s: RadiiSchedule = DEFAULT_SCHEDULE) -> ContactCandidate:
    """Build ``psi(x+z) = u(x) + Pz + X:zz/2 + sigma(|z|) |z|^p xi`` from a verified jet."""
    verdict = test_structural(u, jc, s)
    if not verdict.member:
        raise InputError(f"jet candidate not verified (status {verdict.status})")
    radii = np.array([r for r, _ in verdict.decay_table])
    envelope = np.array([v for _, v in verdict.decay_table])
    modulus = RadialModulus.from_envelope(radii, envelope)
    x, xi, P, X, p = jc.base_point, jc.direction, jc.P, jc.X, jc.order
    ux = u.eval(x)
    bump, bump_derivs = _radial_bump(modulus, p)

    def psi(pts):
        z = pts - x
        val = ux + z @ P.T + bump(z)[:, None] * xi
        if p == 2:
            val = val + 0.5 * np.einsum("aij,mi,mj->ma", X, z, z)
        return val

    def grad(y):
        g, _ = bump_derivs(np.asarray(y, dtype=float) - x)
        G = P + np.outer(xi, g)
        if p == 2:
            G = G + np.einsum("aij,j->ai", X, np.asarray(y, dtype=float) - x)
        return G

    def hess(y):
        _, h = bump_derivs(np.asarray(y, dtype=float) - x)
        H = np.einsum("a,ij->aij", xi, h)
        return H + X if p == 2 else H

    handle = MapHandle(psi, u.N, u.n, grad=grad, hess=hess, domain=u.domain,
                       name=f"contact_map_of_{u.name}", check_derivatives=False)
    return ContactCandidate(handle, x, xi, p, gradient=P.copy(), hessian=None if X is None else X.copy())


def jet_from_contact_map(c: ContactCandidate) -> JetCandidate:
    G, H = c.jet_data()
    return JetCandidate(c.base_point, c.direction, G, H if c.order == 2 else None, c.order)


def taylor_parts(c: ContactCandidate):
    """Second order Taylor polynomial of ``psi`` at the base point and its remainder."""
    G, H = c.jet_data()
    x = c.base_point
    px = c.psi.eval(x)

    def poly(pts):
        z = pts - x
        return px + z @ G.T + 0.5 * np.einsum("aij,mi,mj->ma", H, z, z)

    def rem(pts):
        return c.psi.eval(pts) - poly(pts)

    return poly, rem


def absorb_remainder(u: MapHandle, c: ContactCandidate, cones: ConeSchedule = DEFAULT_CONES,
                     s: RadiiSchedule = DEFAULT_SCHEDULE) -> ContactCandidate:
    """Replace ``psi`` by ``T psi + 2(rho + |xi^perp R psi|) xi``.

    ``T psi`` and ``R psi`` are the second order Taylor polynomial and
    remainder at the base point; ``rho(y) = tau(|y - x|) |y - x|^2`` with
    ``tau`` fitted so that ``rho >= xi.R psi`` and the coupled inequality
    between ``u - T psi`` and ``R psi`` holds on the schedule.
    """
    if c.order != 2:
        raise InputError("remainder absorption is a second order construction")
    pre = is_contact_map(u, c, cones, s)
    if not pre.is_contact:
        raise InputError("input is not a verified contact map")
    xi = c.direction
    x = c.base_point
    poly, rem = taylor_parts(c)
    sphere = s.sphere(u.n)
    radii = s.radii()
    per_radius = []
    for r in radii:
        pts = x + r * sphere
        pts = pts[u.domain.contains(pts)]
        Q = u.eval(pts) - poly(pts)
        Rr = rem(pts)
        a = Q @ xi
        b = np.linalg.norm(T.perp_part(xi, Q - Rr), axis=1)
        rho = np.maximum(np.maximum(minimal_coupling(a, b), Rr @ xi), 0.0)
        per_radius.append(float(np.max(rho, initial=0.0)) / r**2)
    per_radius = np.array(per_radius)
    envelope = np.maximum.accumulate(per_radius[::-1])[::-1]
    modulus = RadialModulus.from_envelope(radii, envelope)
    bump, _ = _radial_bump(modulus, 2)

    def psi_hat(pts):
        z = pts - x
        extra = bump(z) + np.linalg.norm(T.perp_part(xi, rem(pts)), axis=1)
        return poly(pts) + 2.0 * extra[:, None] * xi

    G, H = c.jet_data()
    handle = MapHandle(psi_hat, c.psi.N, c.psi.n, domain=c.psi.domain,
                       name=f"absorbed_{c.psi.name}", check_derivatives=False)
    return ContactCandidate(handle, x, xi, 2, gradient=G, hessian=H)


def second_order_agreement(a: ContactCandidate, b: ContactCandidate, s: RadiiSchedule = DEFAULT_SCHEDULE):
    """Decay verdict of ``|psi_a - psi_b| / r^2``: agreement up to second order."""
    x = a.base_point
    sphere = s.sphere(a.psi.n)
    radii = s.radii()
    ratios = []
    for r in radii:
        pts = x + r * sphere
        pts = pts[a.psi.domain.contains(pts)]
        diff = np.linalg.norm(a.psi.eval(pts) - b.psi.eval(pts), axis=1)
        nu = NOISE_FACTOR * EPS * np.linalg.norm(a.psi.eval(pts), axis=1)
        ratios.append(float(np.max(np.maximum(diff - nu, 0.0), initial=0.0)) / r**2)
    status, slope = decide_decay(radii, ratios, s.decay_tol)
    return status, slope, list(zip(radii.tolist(), ratios))


def perpendicular_remainder_norm(c: ContactCandidate, s: RadiiSchedule = DEFAULT_SCHEDULE) -> float:
    """Largest ``|xi^perp R psi|`` over the schedule samples."""
    _, rem = taylor_parts(c)
    sphere = s.sphere(c.psi.n)
    pts = c.base_point + np.concatenate([r * sphere for r in s.radii()])
    pts = pts[c.psi.domain.contains(pts)]
    return float(np.max(np.linalg.norm(T.perp_part(c.direction, rem(pts)), axis=1), initial=0.0))


# ------------------------------------------------------------ calculus

@dataclass
class CalculusReport:
    is_contact: bool
    gradient_gap: float
    gradient_equal: bool
    hessian_nonpositive: bool
    identities: dict
    forward_holds: bool
    strict: bool
    converse_holds: bool | None
    first_order_consistent: bool | None = None
    routes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}


def contact_calculus_check(u: MapHandle, c: ContactCandidate, cones: ConeSchedule = DEFAULT_CONES,
                           s: RadiiSchedule = DEFAULT_SCHEDULE) -> CalculusReport:
    """Derivative-level consequences of being a contact map, for twice differentiable ``u``.

    Forward: contact implies ``D(u - psi)(x) = 0`` and ``xi v D^2(u - psi)(x) <= 0``,
    equivalently the four rank-one decompositions. Converse: when these hold
    with ``xi.D^2(u - psi)(x) <= -1e-6 I`` the map must be a contact map. At
    first order, contact is equivalent to the gradient identity alone.
    """
    if u.grad is None or (c.order == 2 and u.hess is None):
        raise InputError(f"{u.name}: analytic derivatives are required")
    x = c.base_point
    xi = c.direction
    G, H = c.jet_data()
    D = T.as_grad(u.grad(x), u.N, u.n) - G
    verdict = is_contact_map(u, c, cones, s)
    scale_g = max(1.0, float(np.linalg.norm(G)))
    gap = float(np.linalg.norm(D))
    grad_equal = gap <= GRADIENT_TOL * scale_g

    if c.order == 1:
        consistent = verdict.is_contact == grad_equal
        return CalculusReport(verdict.is_contact, gap, grad_equal, True, {}, consistent,
                              False, None, consistent)

    Hd = T.hess_tensor(u.hess(x), u.N, u.n) - H
    scale_h = max(1.0, float(np.linalg.norm(Hd)))
    along_g = xi @ D
    along_h = np.einsum("a,aij->ij", xi, Hd)
    identities = {
        "gradient_rank_one": float(np.linalg.norm(D - np.outer(xi, along_g))) <= GRADIENT_TOL * scale_g,
        "hessian_rank_one": float(np.linalg.norm(Hd - np.einsum("a,ij->aij", xi, along_h))) <= 1e-8 * scale_h,
        "projected_gradient_zero": float(np.linalg.norm(along_g)) <= GRADIENT_TOL * scale_g,
        "projected_hessian_nonpositive": float(T.max_eig(along_h)) <= 1e-8 * scale_h if u.n else True,
    }
    nonpos = vee_nonpos_hess(xi, Hd)
    hess_ok = nonpos.holds or nonpos.marginal
    forward = (not verdict.is_contact) or (grad_equal and hess_ok and all(identities.values()))
    strict = bool(T.max_eig(along_h) < -STRICT_MARGIN) if u.n else False
    converse = None
    if grad_equal and hess_ok and strict:
        converse = verdict.is_contact
    return CalculusReport(verdict.is_contact, gap, grad_equal, hess_ok, identities, forward,
                          strict, converse, routes=nonpos.routes)


# ------------------------------------------------------------ rigidity

@dataclass
class RigidityReport:
    l_minus: float
    l_plus: float
    perturbed_still_contact: bool
    asserted: bool
    consistent: bool

    def to_dict(self) -> dict:
        enc = lambda v: "inf" if math.isinf(v) else float(v)  # noqa: E731
        return {"l_minus": enc(self.l_minus), "l_plus": enc(self.l_plus),
                "perturbed_still_contact": self.perturbed_still_contact,
                "asserted": self.asserted, "consistent": self.consistent}


def rigidity_dichotomy(u: MapHandle, c: ContactCandidate, X, cones: ConeSchedule = DEFAULT_CONES,
                       s: RadiiSchedule = DEFAULT_SCHEDULE) -> RigidityReport:
    """Estimate the lower and upper quadratic growth of ``-xi.(u - psi)``.

    The liminf and limsup are read off the finest three radii. The map is then
    perturbed by ``xi^perp X : (y-x)(y-x) / 2`` and retested; infinite lower
    growth (estimate above 1e6) guarantees the perturbation stays a contact map.
    """
    X = T.hess_tensor(X, c.psi.N, c.psi.n)
    xi = c.direction
    x = c.base_point
    lows, highs = [], []
    for r, z, d, nu in list(_difference_shells(u, c, s))[-3:]:
        q = -(d @ xi) / r**2
        lows.append(float(np.min(q)) if q.size else math.inf)
        highs.append(float(np.max(q)) if q.size else -math.inf)
    l_minus, l_plus = min(lows), max(highs)
    Xp = X - np.einsum("a,b,bij->aij", xi, xi, X)
    base = c.psi

    def shifted(pts):
        z = pts - x
        return base.eval(pts) + 0.5 * np.einsum("aij,mi,mj->ma", Xp, z, z)

    G, H = c.jet_data()
    handle = MapHandle(shifted, base.N, base.n, domain=base.domain, name=f"perturbed_{base.name}",
                       check_derivatives=False)
    cand = ContactCandidate(handle, x, xi, c.order, gradient=G,
                            hessian=None if H is None else H + Xp)
    still = is_contact_map(u, cand, cones, s).is_contact
    asserted = l_minus > RIGID_THRESHOLD
    return RigidityReport(l_minus, l_plus, still, asserted, (not asserted) or still)
