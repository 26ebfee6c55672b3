"""Numerical membership tests for first and second order contact jets.

A candidate ``(P, X)`` belongs to the jet of ``u`` at ``x`` in direction
``xi`` when the largest eigenvalue of ``xi v Q(z)`` is ``o(|z|^p)``, where
``Q`` is the Taylor remainder and ``p`` the order. "As z -> 0" is replaced by
a geometric radii schedule: at each radius the worst ratio over sphere samples
is recorded, and the resulting decay table is judged by :func:`decide_decay`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import tensor as T
from .errors import DiagnosticError, InputError
from .sampling import make_rng, sphere_directions

EPS = np.finfo(float).eps
NOISE_FACTOR = 64.0
SLOPE_THRESHOLD = 0.25
STRUCTURAL_FLOOR = 1e-12

MEMBER = "member"
NON_MEMBER = "non-member"
INCONCLUSIVE = "inconclusive"
HYPOTHESIS_FAILED = "hypothesis-failed"


# ------------------------------------------------------------------- domain

@dataclass(frozen=True)
class Domain:
    """Closed ball (``kind="ball"``) or box (``kind="box"``); ``None`` bounds mean all of R^n."""

    kind: str = "all"
    center: tuple | None = None
    radius: float | None = None
    lower: tuple | None = None
    upper: tuple | None = None

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        if self.kind == "all":
            return np.ones(pts.shape[0], dtype=bool)
        if self.kind == "ball":
            c = np.asarray(self.center, dtype=float)
            return np.linalg.norm(pts - c, axis=1) <= self.radius * (1 + 1e-12)
        if self.kind == "box":
            lo = np.asarray(self.lower, dtype=float)
            hi = np.asarray(self.upper, dtype=float)
            return np.all((pts >= lo) & (pts <= hi), axis=1)
        raise InputError(f"unknown domain kind {self.kind!r}")

    def interior_samples(self, rng: np.random.Generator, n: int, count: int) -> np.ndarray:
        if self.kind == "box":
            lo = np.asarray(self.lower, dtype=float)
            hi = np.asarray(self.upper, dtype=float)
            return lo + (hi - lo) * (0.1 + 0.8 * rng.random((count, n)))
        center = np.zeros(n) if self.center is None else np.asarray(self.center, dtype=float)
        radius = 1.0 if self.radius is None else 0.8 * self.radius
        d = rng.standard_normal((count, n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return center + radius * rng.random((count, 1)) ** (1.0 / n) * d


ALL_SPACE = Domain()


# ---------------------------------------------------------------- map handle

@dataclass
class MapHandle:
    """An evaluable map ``u : Omega -> R^N`` on ``Omega`` in R^n.

    ``func`` is vectorised: it maps an ``(m, n)`` array of points to an
    ``(m, N)`` array. ``grad`` and ``hess`` take a single point. ``noise``, if
    given, maps points to an absolute bound on the evaluation error and is
    added to the default round-off allowance.
    """

    func: Callable[[np.ndarray], np.ndarray]
    N: int
    n: int
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    hess: Callable[[np.ndarray], np.ndarray] | None = None
    domain: Domain = ALL_SPACE
    noise: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "map"
    check_derivatives: bool = True

    def __post_init__(self):
        T.check_dims(self.N, self.n)
        if self.check_derivatives and (self.grad is not None or self.hess is not None):
            derivative_gate(self)

    @classmethod
    def pointwise(cls, f: Callable[[np.ndarray], np.ndarray], N: int, n: int, **kw) -> "MapHandle":
        """Wrap a single-point function."""
        def vec(pts):
            return np.array([np.asarray(f(p), dtype=float).reshape(N) for p in pts]).reshape(-1, N)
        return cls(vec, N, n, **kw)

    def eval(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.n:
            raise InputError(f"{self.name}: points have dimension {pts.shape[1]}, expected {self.n}")
        inside = self.domain.contains(pts)
        if not inside.all():
            raise InputError(f"{self.name}: evaluation outside the domain at {pts[~inside][0]}")
        vals = np.asarray(self.func(pts), dtype=float).reshape(pts.shape[0], self.N)
        if not np.all(np.isfinite(vals)):
            raise DiagnosticError(f"{self.name}: non-finite value during evaluation")
        return vals[0] if single else vals

    def eval_noise(self, pts) -> np.ndarray:
        if self.noise is None:
            return np.zeros(np.atleast_2d(pts).shape[0])
        return np.asarray(self.noise(np.atleast_2d(pts)), dtype=float).reshape(-1)


def derivative_gate(u: MapHandle, points: int = 10, tol: float = 1e-5, seed: int = 0) -> None:
    """Compare analytic derivatives with central differences at interior points."""
    rng = make_rng(seed, 0xD1FF)
    pts = u.domain.interior_samples(rng, u.n, points)
    eye = np.eye(u.n)
    for x in pts:
        if u.grad is not None:
            h = 1e-5
            fd = np.stack([(u.eval(x + h * e) - u.eval(x - h * e)) / (2 * h) for e in eye], axis=1)
            g = np.asarray(u.grad(x), dtype=float).reshape(u.N, u.n)
            if np.max(np.abs(fd - g)) > tol * max(1.0, float(np.max(np.abs(g)))):
                raise InputError(f"{u.name}: analytic gradient disagrees with finite differences at {x}")
        if u.hess is not None:
            h = 1e-4
            H = np.asarray(u.hess(x), dtype=float).reshape(u.N, u.n, u.n)
            f0 = u.eval(x)
            fd = np.empty_like(H)
            for i in range(u.n):
                for j in range(u.n):
                    if i == j:
                        fd[:, i, i] = (u.eval(x + h * eye[i]) - 2 * f0 + u.eval(x - h * eye[i])) / h**2
                    else:
                        ei, ej = eye[i], eye[j]
                        fd[:, i, j] = (u.eval(x + h * (ei + ej)) - u.eval(x + h * (ei - ej))
                                       - u.eval(x - h * (ei - ej)) + u.eval(x - h * (ei + ej))) / (4 * h * h)
            if np.max(np.abs(fd - H)) > tol * max(1.0, float(np.max(np.abs(H)))):
                raise InputError(f"{u.name}: analytic hessian disagrees with finite differences at {x}")


# --------------------------------------------------------------- candidates

@dataclass(frozen=True)
class JetCandidate:
    base_point: np.ndarray
    direction: np.ndarray
    P: np.ndarray
    X: np.ndarray | None = None
    order: int = 2

    def __post_init__(self):
        if self.order not in (1, 2):
            raise InputError(f"jet order must be 1 or 2, got {self.order}")
        xi = T.as_direction(self.direction)
        x = np.asarray(self.base_point, dtype=float).reshape(-1)
        P = T.as_grad(self.P, N=xi.shape[0], n=x.shape[0])
        object.__setattr__(self, "direction", xi)
        object.__setattr__(self, "base_point", x)
        object.__setattr__(self, "P", P)
        if self.order == 2:
            if self.X is None:
                raise InputError("order-2 candidate needs a hessian tensor")
            object.__setattr__(self, "X", T.hess_tensor(self.X, N=xi.shape[0], n=x.shape[0]))
        elif self.X is not None:
            object.__setattr__(self, "X", T.hess_tensor(self.X, N=xi.shape[0], n=x.shape[0]))

    @property
    def N(self) -> int:
        return self.direction.shape[0]

    @property
    def n(self) -> int:
        return self.base_point.shape[0]

    def with_hessian(self, X) -> "JetCandidate":
        return JetCandidate(self.base_point, self.direction, self.P, X, 2)


@dataclass(frozen=True)
class RadiiSchedule:
    r0: float = 0.1
    factor: float = 0.5
    count: int = 10
    sphere_samples: int | None = None
    decay_tol: float = 1e-3

    def __post_init__(self):
        if not self.r0 > 0:
            raise InputError("schedule r0 must be positive")
        if not 0 < self.factor < 1:
            raise InputError("schedule factor must lie in (0, 1)")
        if self.count < 4:
            raise InputError("schedule needs at least 4 radii")
        if self.decay_tol <= 0:
            raise InputError("schedule decay_tol must be positive")

    def radii(self) -> np.ndarray:
        return self.r0 * self.factor ** np.arange(self.count)

    def samples_for(self, n: int) -> int:
        k = max(2 * n, 16) if self.sphere_samples is None else self.sphere_samples
        if k < 2 * n:
            raise InputError(f"sphere_samples must be at least 2n = {2 * n}")
        return k

    def sphere(self, n: int) -> np.ndarray:
        return sphere_directions(n, self.samples_for(n))


DEFAULT_SCHEDULE = RadiiSchedule()


@dataclass
class JetVerdict:
    member: bool
    status: str
    decay_table: list
    fitted_exponent: float
    order: int = 1
    violations: int = 0
    note: str = ""
    extra: dict = field(default_factory=dict)

    def ratios(self) -> np.ndarray:
        return np.array([row[1] for row in self.decay_table])

    def to_dict(self) -> dict:
        slope = self.fitted_exponent
        return {
            "member": self.member,
            "status": self.status,
            "decay_table": [[float(r), float(v)] for r, v in self.decay_table],
            "fitted_exponent": "inf" if math.isinf(slope) else float(slope),
            "order": self.order,
            "violations": self.violations,
            "note": self.note,
        }


# ------------------------------------------------------------- decay rule

def fit_slope(radii, ratios) -> float:
    """Least-squares slope of log(ratio) against log(radius) over positive ratios."""
    radii = np.asarray(radii, dtype=float)
    ratios = np.asarray(ratios, dtype=float)
    pos = ratios > 0
    if pos.sum() < 2:
        return math.inf
    lx = np.log(radii[pos])
    ly = np.log(ratios[pos])
    lx = lx - lx.mean()
    denom = float(lx @ lx)
    if denom == 0:
        return math.inf
    return float(lx @ (ly - ly.mean()) / denom)


def decide_decay(radii, ratios, decay_tol: float) -> tuple[str, float]:
    """Judge whether a ratio table represents o(1) as the radius shrinks.

    Member: the two finest ratios are below ``decay_tol`` and the log-log slope
    exceeds 1/4. Non-member: the finest ratios are not small and the slope is
    at most 1/4. Anything else is inconclusive.
    """
    ratios = np.asarray(ratios, dtype=float)
    if not np.all(np.isfinite(ratios)):
        raise DiagnosticError("non-finite ratio in decay table")
    slope = fit_slope(radii, ratios)
    small = bool(np.all(ratios[-2:] < decay_tol))
    if small and slope > SLOPE_THRESHOLD:
        return MEMBER, slope
    if not small and slope <= SLOPE_THRESHOLD:
        return NON_MEMBER, slope
    return INCONCLUSIVE, slope


# ---------------------------------------------------------------- remainder

def remainder(u: MapHandle, c: JetCandidate, z) -> np.ndarray:
    """``u(x+z) - u(x) - P z - X:z(x)z/2`` (no quadratic term at order 1)."""
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    z = np.atleast_2d(z)
    Q = u.eval(c.base_point + z) - u.eval(c.base_point)[None, :] - z @ c.P.T
    if c.order == 2:
        Q = Q - 0.5 * np.einsum("aij,mi,mj->ma", c.X, z, z)
    return Q[0] if single else Q


def remainder_map(u: MapHandle, c: JetCandidate) -> MapHandle:
    """``z -> u(x+z) - u(x) - P z - X:z(x)z/2`` with the cancellation allowance as noise."""
    u0 = u.eval(c.base_point)
    nP = float(np.linalg.norm(c.P))
    nX = 0.0 if c.order == 1 else float(np.linalg.norm(c.X))
    shifted = Domain("all") if u.domain.kind == "all" else None

    def func(z):
        return remainder(u, c, z).reshape(-1, u.N)

    def noise(z):
        nz = np.linalg.norm(z, axis=1)
        vals = u.eval(c.base_point + z)
        size = np.linalg.norm(vals, axis=1) + np.linalg.norm(u0) + nP * nz + 0.5 * nX * nz**2
        return NOISE_FACTOR * EPS * size + u.eval_noise(c.base_point + z)

    if shifted is None:
        d = u.domain
        if d.kind == "ball":
            shifted = Domain("ball", tuple(np.asarray(d.center) - c.base_point), d.radius)
        else:
            shifted = Domain("box", lower=tuple(np.asarray(d.lower) - c.base_point),
                             upper=tuple(np.asarray(d.upper) - c.base_point))
    return MapHandle(func, u.N, u.n, domain=shifted, noise=noise, name=f"{u.name}.remainder",
                     check_derivatives=False)


def remainder_noise(u: MapHandle, c: JetCandidate, z: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Round-off allowance for each remainder sample."""
    nz = np.linalg.norm(z, axis=1)
    base = float(np.linalg.norm(u.eval(c.base_point)))
    size = np.linalg.norm(values, axis=1) + base + np.linalg.norm(c.P) * nz
    if c.order == 2:
        size = size + 0.5 * np.linalg.norm(c.X) * nz**2
    return NOISE_FACTOR * EPS * size + u.eval_noise(c.base_point + z)


def _shells(u: MapHandle, c: JetCandidate, s: RadiiSchedule):
    """Yield (radius, z samples, remainders, noise) per radius, domain-restricted."""
    if u.n != c.n or u.N != c.N:
        raise InputError(f"candidate dims ({c.N},{c.n}) do not match map ({u.N},{u.n})")
    sphere = s.sphere(u.n)
    for r in s.radii():
        z = r * sphere
        keep = u.domain.contains(c.base_point + z)
        z = z[keep]
        if z.shape[0] == 0:
            yield r, z, np.zeros((0, u.N)), np.zeros(0)
            continue
        vals = u.eval(c.base_point + z)
        Q = vals - u.eval(c.base_point)[None, :] - z @ c.P.T
        if c.order == 2:
            Q = Q - 0.5 * np.einsum("aij,mi,mj->ma", c.X, z, z)
        yield r, z, Q, remainder_noise(u, c, z, vals)


def _verdict(radii, ratios, s: RadiiSchedule, order: int, thin: bool, **kw) -> JetVerdict:
    status, slope = decide_decay(radii, ratios, s.decay_tol)
    note = kw.pop("note", "")
    if thin:
        status = INCONCLUSIVE
        note = (note + "; " if note else "") + "too few in-domain samples at some radius"
    table = [(float(r), float(v)) for r, v in zip(radii, ratios)]
    return JetVerdict(status == MEMBER, status, table, slope, order, note=note, **kw)


def test_membership(u: MapHandle, c: JetCandidate, s: RadiiSchedule = DEFAULT_SCHEDULE) -> JetVerdict:
    """Decay of ``max eig(xi v Q(z)) / |z|^p`` along the schedule."""
    radii, ratios = [], []
    thin = False
    for r, z, Q, nu in _shells(u, c, s):
        if z.shape[0] < u.n + 1:
            thin = True
        lam = T.max_vee_eig(c.direction, Q) if Q.shape[0] else np.zeros(0)
        excess = np.maximum(lam - nu, 0.0)
        radii.append(r)
        ratios.append(float(np.max(excess, initial=0.0)) / r**c.order)
    return _verdict(np.array(radii), np.array(ratios), s, c.order, thin)


test_membership.__test__ = False


def minimal_coupling(a, b) -> np.ndarray:
    """Smallest ``delta >= 0`` with ``b^2 <= delta (delta - a)``.

    This is the smallest ``delta`` for which ``a <= -b^2/delta + delta``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    root = np.sqrt(a * a + 4 * b * b)
    denom = np.where(root - a > 0, root - a, 1.0)
    neg = np.where(root - a > 0, 2 * b * b / denom, 0.0)
    return np.where(a >= 0, 0.5 * (a + root), neg)


def test_structural(u: MapHandle, c: JetCandidate, s: RadiiSchedule = DEFAULT_SCHEDULE) -> JetVerdict:
    """Membership through the scalar coupled inequality.

    Tests ``xi.Q <= -|xi^perp Q|^2 / (sigma r^p) + sigma r^p`` with a fitted
    increasing modulus ``sigma``. The modulus at radius r is the largest
    observed minimal coupling ratio over all radii up to r, floored at 1e-12;
    the verdict is the decay rule applied to that modulus.
    """
    shells = list(_shells(u, c, s))
    radii = np.array([sh[0] for sh in shells])
    per_radius = []
    thin = False
    for r, z, Q, nu in shells:
        if z.shape[0] < u.n + 1:
            thin = True
        a = Q @ c.direction
        b = np.linalg.norm(T.perp_part(c.direction, Q), axis=1)
        delta = np.maximum(minimal_coupling(a, b) - nu, 0.0)
        per_radius.append(float(np.max(delta, initial=0.0)) / r**c.order)
    per_radius = np.array(per_radius)
    # running max toward the coarse end: sigma increases with r
    sigma = np.maximum.accumulate(per_radius[::-1])[::-1]
    sigma = np.maximum(sigma, STRUCTURAL_FLOOR)

    violations = 0
    for (r, z, Q, nu), sig in zip(shells, sigma):
        if z.shape[0] == 0:
            continue
        a = Q @ c.direction
        b = np.linalg.norm(T.perp_part(c.direction, Q), axis=1)
        # a <= -b^2/delta + delta holds exactly when delta >= minimal_coupling(a, b)
        violations += int(np.sum(minimal_coupling(a, b) > sig * r**c.order + nu))
    verdict = _verdict(radii, np.where(sigma > STRUCTURAL_FLOOR, sigma, 0.0), s, c.order, thin,
                       violations=violations, extra={"raw_ratios": per_radius.tolist()})
    verdict.decay_table = [(float(r), float(v)) for r, v in zip(radii, sigma)]
    return verdict


test_structural.__test__ = False


# --------------------------------------------------- equivalent formulations

@dataclass
class FormsVerdict:
    forms: dict

    @property
    def booleans(self) -> dict:
        return {k: v.member for k, v in self.forms.items()}

    @property
    def unanimous(self) -> bool:
        return len({v.status for v in self.forms.values()}) == 1


def _form_quantities(xi: np.ndarray, R: np.ndarray) -> dict:
    """Per-sample quantities whose o(r^p) decay encodes jet membership."""
    a = R @ xi
    perp = T.perp_part(xi, R)
    b = np.linalg.norm(perp, axis=1)
    nR = np.linalg.norm(R, axis=1)
    nonzero = nR >= T.ZERO_TOL
    safe_nR = np.where(nonzero, nR, 1.0)
    a_plus = np.maximum(a, 0.0)

    spectral = np.maximum(T.max_vee_eig(xi, R), 0.0)
    ratio_b = np.where(nonzero, b * b / safe_nR, 0.0)
    coupled = np.maximum(a_plus, ratio_b)

    # reparametrise by rho = xi^perp R / |R|^(1/2), then rebuild |R| from (rho, xi.R)
    rho = np.where(nonzero[:, None], perp / np.sqrt(safe_nR)[:, None], 0.0)
    half = 0.5 * np.sum(rho * rho, axis=1)
    rebuilt = half + np.sqrt(half * half + a * a)
    if np.any(np.abs(rebuilt - nR) > 1e-10 * np.maximum(nR, 1e-300) + 1e-300):
        raise DiagnosticError("rebuilt |R| disagrees with the direct norm")
    recon = rho * np.sqrt(rebuilt)[:, None]
    if np.any(np.linalg.norm(recon - perp, axis=1) > 1e-10 * np.maximum(nR, 1e-300) + 1e-300):
        raise DiagnosticError("rebuilt xi^perp R disagrees with the direct projection")
    reparam = np.maximum(np.sum(rho * rho, axis=1), a_plus)

    # split: on the cone |xi^perp R| <= |xi.R| the coupled ratio uses |xi.R|
    abs_a = np.abs(a)
    cone = (b <= abs_a) & (abs_a > 0)
    safe_a = np.where(cone, abs_a, 1.0)
    split = np.where(cone, np.maximum(a_plus, b * b / safe_a), nR)
    return {"spectral": spectral, "coupled": coupled, "reparametrised": reparam, "split": split}


def equivalent_forms(R: MapHandle, xi, p: int, s: RadiiSchedule = DEFAULT_SCHEDULE) -> FormsVerdict:
    """Decide four equivalent o(|z|^p) conditions on a remainder map ``R`` with ``R(0) = 0``.

    * ``spectral``: largest eigenvalue of ``xi v R``.
    * ``coupled``: ``max((xi.R)^+, |xi^perp R|^2 / |R|)``.
    * ``reparametrised``: the same through ``rho = xi^perp R / |R|^(1/2)``, with
      ``|R|`` rebuilt from ``rho`` and ``xi.R`` as a quadratic root.
    * ``split``: the coupled ratio with ``|xi.R|`` on the cone where it
      dominates ``|xi^perp R|``, and ``|R|`` off it.
    """
    xi = T.as_direction(xi)
    if p not in (1, 2):
        raise InputError("order must be 1 or 2")
    if R.N != xi.shape[0]:
        raise InputError("direction and map dimensions differ")
    origin = np.zeros(R.n)
    if np.linalg.norm(R.eval(origin)) > 1e-12:
        raise InputError("remainder map must vanish at the origin")
    sphere = s.sphere(R.n)
    tables: dict[str, list] = {k: [] for k in ("spectral", "coupled", "reparametrised", "split")}
    radii = s.radii()
    thin = False
    for r in radii:
        z = r * sphere
        z = z[R.domain.contains(z)]
        if z.shape[0] < R.n + 1:
            thin = True
        vals = R.eval(z) if z.shape[0] else np.zeros((0, R.N))
        nu = NOISE_FACTOR * EPS * np.linalg.norm(vals, axis=1) + R.eval_noise(z)
        for k, q in _form_quantities(xi, vals).items():
            tables[k].append(float(np.max(np.maximum(q - nu, 0.0), initial=0.0)) / r**p)
    forms = {k: _verdict(radii, np.array(v), s, p, thin) for k, v in tables.items()}
    return FormsVerdict(forms)


# ------------------------------------------------------------- jet calculus

@dataclass(frozen=True)
class SmoothJetFamily:
    """Second order jet elements ``(Du(x), D^2u(x) + xi (x) A)`` for PSD ``A``."""

    base_point: np.ndarray
    direction: np.ndarray
    gradient: np.ndarray
    hessian: np.ndarray

    def candidate(self, A=None) -> JetCandidate:
        n = self.base_point.shape[0]
        A = np.zeros((n, n)) if A is None else np.asarray(A, dtype=float)
        if A.shape != (n, n) or np.max(np.abs(A - A.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(A))):
            raise InputError("A must be a symmetric n x n matrix")
        if n and T.jacobi_eigh(A)[0][0] < -1e-12 * max(1.0, float(np.max(np.abs(A)))):
            raise InputError("A must be positive semidefinite")
        X = self.hessian + np.einsum("a,ij->aij", self.direction, A)
        return JetCandidate(self.base_point, self.direction, self.gradient, X, 2)

    def first_order(self) -> JetCandidate:
        return JetCandidate(self.base_point, self.direction, self.gradient, None, 1)


def jet_enumerate_smooth(u: MapHandle, x, xi) -> SmoothJetFamily:
    if u.grad is None or u.hess is None:
        raise InputError(f"{u.name}: analytic gradient and hessian are required")
    x = np.asarray(x, dtype=float).reshape(-1)
    xi = T.as_direction(xi)
    if xi.shape[0] != u.N:
        raise InputError("direction and map dimensions differ")
    G = T.as_grad(u.grad(x), N=u.N, n=u.n)
    H = T.hess_tensor(u.hess(x), N=u.N, n=u.n)
    return SmoothJetFamily(x, xi, G, H)


@dataclass
class PerpModifyResult:
    status: str
    hypothesis: JetVerdict
    verdict: JetVerdict
    base_member: bool

    def to_dict(self) -> dict:
        return {"status": self.status, "hypothesis": self.hypothesis.to_dict(),
                "verdict": self.verdict.to_dict(), "base_member": self.base_member}


def component_map(u: MapHandle, eta: np.ndarray) -> MapHandle:
    """The scalar map ``eta . u``."""
    eta = np.asarray(eta, dtype=float)
    noise = None if u.noise is None else u.noise
    return MapHandle(lambda pts: u.func(pts) @ eta, 1, u.n, domain=u.domain, noise=noise,
                     name=f"{u.name}.component", check_derivatives=False)


def perp_modify(u: MapHandle, c: JetCandidate, eta, A, s: RadiiSchedule = DEFAULT_SCHEDULE) -> PerpModifyResult:
    """Membership of ``(P, X - eta (x) A)`` for ``eta`` orthogonal to ``xi``.

    Valid whenever the scalar component ``(eta.P, eta.X - A/2)`` is an upper
    second order semijet of ``eta.u``; that hypothesis is checked first.
    """
    if c.order != 2:
        raise InputError("perp_modify needs an order-2 candidate")
    eta = T.as_direction(eta)
    if abs(float(eta @ c.direction)) > 1e-12:
        raise InputError("eta must be orthogonal to the candidate direction")
    A = np.asarray(A, dtype=float).reshape(c.n, c.n)
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-12 * max(1.0, float(np.max(np.abs(A)))):
        raise InputError("A must be symmetric")
    if T.jacobi_eigh(A)[0][0] < -1e-12 * max(1.0, float(np.max(np.abs(A)))):
        raise InputError("A must be positive semidefinite")

    scalar = component_map(u, eta)
    hyp_c = JetCandidate(c.base_point, [1.0], (eta @ c.P)[None, :],
                         (np.einsum("a,aij->ij", eta, c.X) - 0.5 * A)[None], 2)
    hyp = test_membership(scalar, hyp_c, s)
    modified = c.with_hessian(c.X - np.einsum("a,ij->aij", eta, A))
    verdict = test_membership(u, modified, s)
    base = test_membership(u, c, s)
    status = verdict.status if hyp.member else HYPOTHESIS_FAILED
    return PerpModifyResult(status, hyp, verdict, base.member)
