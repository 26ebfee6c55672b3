"""Degenerate ellipticity, xi-envelopes and the contact-solution verifier.

A nonlinearity ``F(x, eta, P, X)`` is degenerate elliptic when, for every
direction ``xi`` and pair with ``X - Y = xi (x) M``, ``M <= 0``,

    xi . (F(X) - F(Y)) <= 0.

Certification here is always sampled: a violation comes with a replayable
counterexample, a pass is labelled "certified (sampled)".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import tensor as T
from .errors import DiagnosticError, InputError
from .jets import DEFAULT_SCHEDULE, JetCandidate, MapHandle, RadiiSchedule, jet_enumerate_smooth, test_membership
from .orderings import min_rank_one_value
from .sampling import make_rng, random_psd, random_unit

CERTIFIED = "certified (sampled)"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"
GATE_TOL = 1e-10
PSD_NORMS = (0.0, 0.1, 1.0, 10.0)
EPS_LEVELS = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)


@dataclass
class Nonlinearity:
    """``F(x, eta, P, X) -> R^N``, evaluated in batches.

    ``func`` receives arrays of shapes ``(m, n)``, ``(m, N)``, ``(m, N, n)``,
    ``(m, N, n, n)`` and returns ``(m, N)``. ``gate`` optionally marks hessian
    samples outside the operator's natural domain; those are skipped.
    """

    func: Callable
    N: int
    n: int
    continuity_declared: bool = True
    first_order_only: bool = False
    gate: Callable | None = None
    name: str = "F"
    flags: dict = field(default_factory=dict)

    def __call__(self, x, eta, P, X) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        m = x.shape[0]
        eta = np.asarray(eta, dtype=float).reshape(m, self.N)
        P = np.asarray(P, dtype=float).reshape(m, self.N, self.n)
        X = np.asarray(X, dtype=float).reshape(m, self.N, self.n, self.n)
        out = np.asarray(self.func(x, eta, P, X), dtype=float).reshape(m, self.N)
        if not np.all(np.isfinite(out)):
            raise DiagnosticError(f"{self.name}: non-finite value")
        return out[0] if single else out

    def admissible(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.N, self.n, self.n)
        if self.gate is None:
            return np.ones(X.shape[0], dtype=bool)
        return np.asarray(self.gate(X), dtype=bool)


def linear_operator(A) -> Nonlinearity:
    """``X -> A : X``, i.e. ``(A:X)_a = A[a,i,b,j] X[b,i,j]``."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 4 or A.shape[0] != A.shape[2] or A.shape[1] != A.shape[3]:
        raise InputError(f"coefficient tensor must have shape (N, n, N, n), got {A.shape}")
    N, n = A.shape[0], A.shape[1]
    return Nonlinearity(lambda x, e, P, X: np.einsum("aibj,mbij->ma", A, X), N, n, name="linear")


def vector_laplacian(N: int, n: int, sign: float = 1.0) -> Nonlinearity:
    F = linear_operator(sign * T.identity_form(N, n))
    F.name = "laplacian" if sign > 0 else "negated_laplacian"
    return F


# ------------------------------------------------------- eigenvalue systems

def _component_eigs(X: np.ndarray) -> np.ndarray:
    m, N, n, _ = X.shape
    w, _ = T.jacobi_eigh(X.reshape(m * N, n, n))
    return w.reshape(m, N, n)


def self_test_eigen_function(g: Callable, n: int, gated: bool, seed: int = 0, samples: int = 200) -> dict:
    """Sampled checks of oddness, positive homogeneity and monotonicity.

    Gated functions live on the nonnegative orthant, where oddness cannot be
    tested; it is reported as not applicable.
    """
    rng = make_rng(seed, 0x5E1F)
    raw = rng.standard_normal((samples, n))
    ls = np.abs(raw) if gated else raw
    ls = np.sort(ls, axis=1)
    g0 = np.asarray(g(ls), dtype=float)
    scale = np.maximum(1.0, np.abs(g0))
    flags = {}
    if gated:
        flags["odd_verified"] = None
    else:
        flags["odd_verified"] = bool(np.all(np.abs(np.asarray(g(-ls)) + g0) <= 1e-9 * scale))
    # degree from g(2l) / g(l), then check g(tl) = t^d g(l)
    g2 = np.asarray(g(2 * ls), dtype=float)
    big = np.abs(g0) > 1e-6
    degree = float(np.median(np.log2(np.abs(g2[big] / g0[big])))) if big.any() else 1.0
    degree = round(degree * 2) / 2
    ok = True
    for t in (0.3, 1.7, 5.0):
        gt = np.asarray(g(t * ls), dtype=float)
        ok &= bool(np.all(np.abs(gt - t**degree * g0) <= 1e-8 * np.maximum(1.0, np.abs(gt))))
    flags["homogeneous_verified"] = ok and degree > 0
    flags["degree"] = degree
    mono = True
    h = 1e-3
    for j in range(n):
        lp = ls.copy()
        lp[:, j] += h
        gp = np.asarray(g(lp), dtype=float)
        mono &= bool(np.all(gp - g0 >= -1e-9 * np.maximum(1.0, np.abs(gp))))
    flags["monotone_verified"] = mono
    return flags


def eigen_nonlinearity(g: Callable | Sequence[Callable], N: int, n: int, h=None, gated: bool = False,
                       name: str = "eigen", seed: int = 0) -> Nonlinearity:
    """``F_a = g_a(sorted eigenvalues of X_a) - h_a(x, eta, P)``.

    ``g`` (or each ``g_a``) maps an ``(m, n)`` array of ascending eigenvalues
    to ``(m,)``. Construction is refused unless the sampled self-tests pass.
    With ``gated=True`` hessian samples whose components are not positive
    semidefinite are excluded from certification.
    """
    gs = list(g) if isinstance(g, (list, tuple)) else [g] * N
    if len(gs) != N:
        raise InputError("need one eigenvalue function per component")
    flags = [self_test_eigen_function(ga, n, gated, seed) for ga in gs]
    for k, fl in enumerate(flags):
        failed = [key for key in ("odd_verified", "homogeneous_verified", "monotone_verified") if fl[key] is False]
        if failed:
            raise InputError(f"{name}: component {k} fails self-test {failed}")
    hfun = _as_first_order(h, N)

    def func(x, eta, P, X):
        lam = _component_eigs(X)
        G = np.stack([np.asarray(gs[a](lam[:, a, :]), dtype=float) for a in range(N)], axis=1)
        return G - hfun(x, eta, P)

    gate = None
    if gated:
        def gate(X):
            return np.all(_component_eigs(X)[:, :, 0] >= -GATE_TOL, axis=1)
    return Nonlinearity(func, N, n, gate=gate, name=name, flags={"components": flags})


def _as_first_order(h, N: int) -> Callable:
    if h is None:
        return lambda x, eta, P: np.zeros((x.shape[0], N))
    if callable(h):
        return lambda x, eta, P: np.asarray(h(x, eta, P), dtype=float).reshape(x.shape[0], N)
    hv = np.asarray(h, dtype=float).reshape(N)
    return lambda x, eta, P: np.broadcast_to(hv, (x.shape[0], N))


def _powers(p, N: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(0 if p is None else p, dtype=int), (N,)).copy()


def max_eig_system(N: int, n: int, h=None) -> Nonlinearity:
    return eigen_nonlinearity(lambda l: l[:, -1], N, n, h, name="max_eig_system")


def min_eig_system(N: int, n: int, p=None, h=None) -> Nonlinearity:
    ps = _powers(p, N)
    gs = [(lambda k: (lambda l: l[:, 0] ** (2 * k + 1)))(int(k)) for k in ps]
    return eigen_nonlinearity(gs, N, n, h, name="min_eig_system")


def det_system(N: int, n: int, h=None) -> Nonlinearity:
    return eigen_nonlinearity(lambda l: np.prod(l, axis=1), N, n, h, gated=True, name="det_system")


def laplacian_power_system(N: int, n: int, p=None, h=None) -> Nonlinearity:
    ps = _powers(p, N)
    gs = [(lambda k: (lambda l: np.sum(l, axis=1) ** (2 * k + 1)))(int(k)) for k in ps]
    return eigen_nonlinearity(gs, N, n, h, name="laplacian_power_system")


# ----------------------------------------------------- sampled certification

@dataclass
class EllipticityReport:
    verdict: str
    counterexample: dict | None
    samples_used: int
    routes: dict = field(default_factory=dict)
    confirmed_by_other_route: bool | None = None
    skipped: int = 0

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "counterexample": self.counterexample,
                "samples_used": self.samples_used, "routes": self.routes,
                "confirmed_by_other_route": self.confirmed_by_other_route, "skipped": self.skipped}


def _sample_hessians(rng, m: int, N: int, n: int, gated: bool) -> np.ndarray:
    if gated:
        B = rng.standard_normal((m, N, n, n))
        return np.einsum("maki,makj->maij", B, B)
    B = rng.standard_normal((m, N, n, n))
    return 0.5 * (B + np.swapaxes(B, 2, 3))


def _sample_semidefinite(rng, m: int, n: int) -> np.ndarray:
    """PSD matrices of mixed rank and magnitudes spanning four decades."""
    B = rng.standard_normal((m, n, n))
    rank_one = rng.random(m) < 0.5
    B[rank_one, 1:, :] = 0.0
    M = np.einsum("mki,mkj->mij", B, B)
    mags = 10.0 ** rng.uniform(-3, 1, m)
    norms = np.maximum(np.linalg.norm(M, axis=(1, 2)), 1e-300)
    return M * (mags / norms)[:, None, None]


def _base_triples(rng, m: int, N: int, n: int):
    return rng.standard_normal((m, n)), rng.standard_normal((m, N)), rng.standard_normal((m, N, n))


def directional_margin(F: Nonlinearity, x, eta, P, X, Y, xi) -> np.ndarray:
    """``xi . (F(X) - F(Y))``, relative to the size of the values."""
    FX = F(x, eta, P, X)
    FY = F(x, eta, P, Y)
    return np.einsum("ma,ma->m", xi, FX - FY), np.maximum(1.0, np.maximum(np.abs(FX).max(axis=1),
                                                                        np.abs(FY).max(axis=1)))


def _admissible_batch(F: Nonlinearity, rng, budget: int, draw, max_rounds: int = 20):
    """Draw pair batches until ``budget`` pairs pass the operator's gate."""
    parts: dict[str, list] = {}
    have = skipped = 0
    for _ in range(max_rounds):
        need = budget - have
        if need <= 0:
            break
        batch = draw(rng, need)
        keep = F.admissible(batch["X"]) & F.admissible(batch["Y"])
        skipped += int(need - keep.sum())
        have += int(keep.sum())
        for k, v in batch.items():
            parts.setdefault(k, []).append(v[keep])
    return {k: np.concatenate(v)[:budget] for k, v in parts.items()}, skipped


def _route_directional(F: Nonlinearity, rng, budget: int, tol: float):
    """Pairs ``Y = X - xi (x) M`` with ``M <= 0``; violation when ``xi.(F(X)-F(Y)) > tol``."""
    N, n = F.N, F.n

    def draw(rng, m):
        x, eta, P = _base_triples(rng, m, N, n)
        X = _sample_hessians(rng, m, N, n, F.gate is not None)
        xi = random_unit(rng, N, m)
        M = -_sample_semidefinite(rng, m, n)
        return {"x": x, "eta": eta, "P": P, "X": X, "Y": X - np.einsum("ma,mij->maij", xi, M), "xi": xi, "M": M}

    b, skipped = _admissible_batch(F, rng, budget, draw)
    margin, scale = directional_margin(F, b["x"], b["eta"], b["P"], b["X"], b["Y"], b["xi"])
    excess = margin / scale
    info = {"pairs": int(excess.size), "max_excess": float(np.max(excess, initial=-math.inf))}
    bad = np.nonzero(excess > tol)[0]
    if bad.size == 0:
        return None, info, skipped
    k = bad[np.argmax(excess[bad])]
    cx = {key: v[k] for key, v in b.items()}
    cx.update(route="directional", value=float(margin[k]))
    return cx, info, skipped


def _route_pairing(F: Nonlinearity, rng, budget: int, tol: float):
    """Pairs ``X - Y = eta (x) M``, ``M`` semidefinite of either sign, eta not normalised.

    Monotonicity asks ``(F(X)-F(Y)) . ((X-Y):w(x)w) >= 0`` for all ``w``, i.e.
    ``(eta.(F(X)-F(Y))) M >= 0``; the worst ``w`` is an extreme eigenvector.
    """
    N, n = F.N, F.n

    def draw(rng, m):
        x, eta, P = _base_triples(rng, m, N, n)
        X = _sample_hessians(rng, m, N, n, F.gate is not None)
        direction = rng.standard_normal((m, N)) * 10.0 ** rng.uniform(-1, 1, (m, 1))
        sign = np.where(rng.random(m) < 0.5, -1.0, 1.0)
        M = sign[:, None, None] * _sample_semidefinite(rng, m, n)
        return {"x": x, "eta": eta, "P": P, "X": X, "Y": X - np.einsum("ma,mij->maij", direction, M),
                "direction": direction, "M": M}

    b, skipped = _admissible_batch(F, rng, budget, draw)
    FX = F(b["x"], b["eta"], b["P"], b["X"])
    FY = F(b["x"], b["eta"], b["P"], b["Y"])
    coef = np.einsum("ma,ma->m", b["direction"], FX - FY)
    w, V = T.jacobi_eigh(coef[:, None, None] * b["M"])
    worst = w[:, 0]
    scale = np.maximum(1.0, np.maximum(np.abs(FX).max(axis=1), np.abs(FY).max(axis=1)))
    scale = scale * np.maximum(1.0, np.linalg.norm(b["direction"], axis=1) * np.linalg.norm(b["M"], axis=(1, 2)))
    deficit = -worst / scale
    info = {"pairs": int(deficit.size), "max_deficit": float(np.max(deficit, initial=-math.inf))}
    bad = np.nonzero(deficit > tol)[0]
    if bad.size == 0:
        return None, info, skipped
    k = bad[np.argmax(deficit[bad])]
    cx = {key: v[k] for key, v in b.items()}
    cx.update(route="pairing", w=V[k, :, 0], value=float(worst[k]))
    return cx, info, skipped


def replay_counterexample(F: Nonlinearity, cx: dict) -> float:
    """Re-evaluate a stored counterexample; positive means violated."""
    x, eta, P, X, Y = (np.asarray(cx[k], dtype=float) for k in ("x", "eta", "P", "X", "Y"))
    dF = F(x, eta, P, X) - F(x, eta, P, Y)
    if cx["route"] == "directional":
        return float(np.asarray(cx["xi"]) @ dF)
    D = np.asarray(X) - np.asarray(Y)
    w = np.asarray(cx["w"], dtype=float)
    return float(-(dF @ np.einsum("aij,i,j->a", D, w, w)))


def convert_counterexample(cx: dict) -> dict:
    """Translate a counterexample to the other route's parametrisation."""
    out = {k: cx[k] for k in ("x", "eta", "P")}
    if cx["route"] == "directional":
        xi = np.asarray(cx["xi"], dtype=float)
        M = np.asarray(cx["M"], dtype=float)
        w, V = T.jacobi_eigh(M)
        out.update(route="pairing", X=cx["X"], Y=cx["Y"], direction=xi, M=M, w=V[:, 0])
        return out
    direction = np.asarray(cx["direction"], dtype=float)
    M = np.asarray(cx["M"], dtype=float)
    nd = float(np.linalg.norm(direction))
    xi = direction / nd
    K = nd * M
    if T.max_eig(K) <= 0:
        out.update(route="directional", X=cx["X"], Y=cx["Y"], xi=xi, M=K)
    else:
        # X - Y = xi (x) K with K >= 0: swap roles so the difference is nonpositive
        out.update(route="directional", X=cx["Y"], Y=cx["X"], xi=xi, M=-K)
    return out


def check_ellipticity_sampled(F: Nonlinearity, budget: int = 10_000, seed: int = 0,
                              tol: float = 1e-9) -> EllipticityReport:
    """Two independent sampled routes to degenerate ellipticity.

    The directional route samples ``Y = X - xi (x) M`` with ``M <= 0`` and
    checks ``xi.(F(X) - F(Y)) <= tol``; the pairing route samples
    ``X - Y = eta (x) M`` with semidefinite ``M`` and checks the monotonicity
    pairing against every ``w``. Any counterexample is converted to the other
    route and re-evaluated there.
    """
    if F.first_order_only:
        return EllipticityReport(CERTIFIED, None, 0, {"note": "first order: no hessian dependence"})
    cx_d, info_d, skip_d = _route_directional(F, make_rng(seed, 0xE1, 1), budget, tol)
    cx_p, info_p, skip_p = _route_pairing(F, make_rng(seed, 0xE1, 2), budget, tol)
    routes = {"directional": info_d, "pairing": info_p}
    used = info_d["pairs"] + info_p["pairs"]
    skipped = skip_d + skip_p
    cx = cx_d if cx_d is not None else cx_p
    if cx is None:
        verdict = CERTIFIED if used > 0 else INCONCLUSIVE
        return EllipticityReport(verdict, None, used, routes, skipped=skipped)
    if replay_counterexample(F, cx) <= 0:
        raise DiagnosticError("stored counterexample does not replay")
    other = convert_counterexample(cx)
    confirmed = replay_counterexample(F, other) > 0
    routes["directional"]["found"] = cx_d is not None
    routes["pairing"]["found"] = cx_p is not None
    return EllipticityReport(VIOLATED, _jsonable(cx), used, routes, confirmed, skipped)


def _jsonable(d: dict) -> dict:
    return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in d.items()}


def check_quasilinear(A, budget: int = 10_000, seed: int = 0, tol: float = 1e-9) -> EllipticityReport:
    """Monotonicity of ``X -> A:X`` decided by rank-one positivity and by sampling.

    ``A`` need not have the pair symmetry; the rank-one values only see its
    symmetric part, which is what the certifier receives.
    """
    A = np.asarray(A, dtype=float)
    N, n = A.shape[0], A.shape[1]
    sym = 0.5 * (A + np.transpose(A, (2, 3, 0, 1)))
    cert = min_rank_one_value(sym, tol=tol * max(1.0, float(np.max(np.abs(sym)))))
    sampled = check_ellipticity_sampled(linear_operator(A), budget, seed, tol)
    routes = dict(sampled.routes)
    routes["rank_one"] = {"min_value": cert.min_value, "verdict": cert.verdict,
                          "witness_eta": cert.witness_eta.tolist(), "witness_w": cert.witness_w.tolist()}
    cert_ok = cert.positive
    sampled_ok = sampled.verdict == CERTIFIED
    if cert_ok != sampled_ok:
        raise DiagnosticError(f"rank-one certificate ({cert.verdict}) and sampled monotonicity "
                              f"({sampled.verdict}) disagree")
    if cert_ok:
        return EllipticityReport(CERTIFIED, None, sampled.samples_used, routes)
    return EllipticityReport(VIOLATED, sampled.counterexample, sampled.samples_used, routes,
                             sampled.confirmed_by_other_route)


# --------------------------------------------------------------- envelope

@dataclass
class EnvelopeEstimate:
    value: float
    sampled: float
    levels: list
    direct: float | None


def xi_envelope(F: Nonlinearity, xi, x, eta, P, X, eps_levels=EPS_LEVELS, per_level: int = 64,
                seed: int = 0, tol: float = 1e-3) -> EnvelopeEstimate:
    """Upper envelope of ``xi . F`` at a point, as a shrinking-ball estimate.

    Each level samples the product ball of radius ``eps`` (every argument block
    moved by at most ``eps/4``) plus all signed single-coordinate moves of
    size ``eps``; the estimate is the max over the two finest levels. When F
    is declared continuous the direct projection is returned and the sampled
    estimate must agree with it to ``tol`` (relative).
    """
    xi = T.as_direction(xi)
    N, n = F.N, F.n
    x = np.asarray(x, dtype=float).reshape(n)
    eta = np.asarray(eta, dtype=float).reshape(N)
    P = np.asarray(P, dtype=float).reshape(N, n)
    X = T.hess_tensor(X, N, n)
    rng = make_rng(seed, 0xE2)
    blocks = [(x, n), (eta, N), (P.ravel(), N * n), (X.ravel(), N * n * n)]
    centre = np.concatenate([b.ravel() for b, _ in blocks])
    dim = centre.size
    bounds = np.cumsum([0] + [k for _, k in blocks])

    def unpack(Z):
        xs = Z[:, bounds[0]:bounds[1]]
        es = Z[:, bounds[1]:bounds[2]]
        Ps = Z[:, bounds[2]:bounds[3]].reshape(-1, N, n)
        Xs = Z[:, bounds[3]:bounds[4]].reshape(-1, N, n, n)
        return xs, es, Ps, 0.5 * (Xs + np.swapaxes(Xs, 2, 3))

    levels = []
    for eps in eps_levels:
        moves = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            d = rng.standard_normal((per_level, hi - lo))
            d /= np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-300)
            d *= (eps / 4) * rng.random((per_level, 1)) ** (1.0 / max(hi - lo, 1))
            moves.append(d)
        Z = centre + np.concatenate(moves, axis=1)
        coord = np.concatenate([np.eye(dim), -np.eye(dim)]) * eps
        Z = np.concatenate([centre[None], Z, centre + coord])
        vals = F(*unpack(Z)) @ xi
        levels.append((eps, float(np.max(vals))))
    sampled = max(v for _, v in levels[-2:])
    direct = None
    value = sampled
    if F.continuity_declared:
        direct = float(F(x, eta, P, X) @ xi)
        if abs(sampled - direct) > tol * (1.0 + abs(direct)):
            raise DiagnosticError(f"{F.name}: envelope {sampled} far from the continuous value {direct}")
        value = direct
    return EnvelopeEstimate(value, sampled, levels, direct)


# ---------------------------------------------------------------- verifier

@dataclass
class SolutionReport:
    consistent: bool
    min_margin: float
    checks: int
    violations: list
    sign: int = 1

    def to_dict(self) -> dict:
        return {"consistent": self.consistent, "min_margin": self.min_margin, "checks": self.checks,
                "violations": self.violations, "sign": self.sign}


def verify_contact_solution(u: MapHandle, F: Nonlinearity, points, directions, psd_norms=PSD_NORMS,
                            s: RadiiSchedule = DEFAULT_SCHEDULE, candidates=None, seed: int = 0,
                            tol: float = 1e-8, sign: int = 1) -> SolutionReport:
    """Check ``xi* F(x, u(x), P, X) >= 0`` on contact jets at sampled points.

    Jets come from ``(Du, D^2u + xi (x) A)`` with sampled PSD ``A`` of the
    given norms when ``u`` has derivatives; otherwise ``candidates`` maps
    ``(point index, direction index)`` to a list of :class:`JetCandidate`,
    each of which must first pass the membership test. ``sign = -1`` flips
    the inequality, for the opposite convention.
    """
    if sign not in (1, -1):
        raise InputError("sign must be +1 or -1")
    if F.N != u.N or F.n != u.n:
        raise InputError("nonlinearity and map dimensions differ")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    directions = [T.as_direction(d) for d in directions]
    smooth = u.grad is not None and u.hess is not None
    if not smooth and candidates is None:
        raise InputError("map without derivatives needs caller-supplied jet candidates")
    margins = []
    violations = []
    for i, x in enumerate(points):
        ux = u.eval(x)
        for j, xi in enumerate(directions):
            jets: list[tuple[JetCandidate, float]] = []
            if smooth:
                fam = jet_enumerate_smooth(u, x, xi)
                rng = make_rng(seed, 0xE3, i, j)
                for norm in psd_norms:
                    jets.append((fam.candidate(random_psd(rng, u.n, norm)), float(norm)))
            else:
                for jc in candidates.get((i, j), []):
                    v = test_membership(u, jc, s)
                    if not v.member:
                        raise InputError(f"candidate at point {i}, direction {j} is not a verified jet "
                                         f"({v.status})")
                    jets.append((jc, math.nan))
            for jc, norm in jets:
                X = jc.X if jc.X is not None else np.zeros((u.N, u.n, u.n))
                env = xi_envelope(F, xi, x, ux, jc.P, X, seed=seed)
                margin = sign * env.value
                margins.append(margin)
                if margin < -tol:
                    violations.append({"x": x.tolist(), "xi": xi.tolist(), "P": jc.P.tolist(),
                                       "X": X.tolist(), "psd_norm": norm, "value": env.value})
    min_margin = float(min(margins)) if margins else math.inf
    return SolutionReport(min_margin >= -tol, min_margin, len(margins), violations, sign)


@dataclass
class ConsistencyReport:
    classical: bool
    max_residual: float
    contact: bool
    solution: SolutionReport
    solution_implies_contact: bool
    contact_implies_solution: bool | None
    injected_violation_detected: bool | None

    def to_dict(self) -> dict:
        return {"classical": self.classical, "max_residual": self.max_residual, "contact": self.contact,
                "solution": self.solution.to_dict(),
                "solution_implies_contact": self.solution_implies_contact,
                "contact_implies_solution": self.contact_implies_solution,
                "injected_violation_detected": self.injected_violation_detected}


def consistency_suite(u: MapHandle, F: Nonlinearity, points, directions=None, seed: int = 0,
                      tol: float = 1e-8, injected: float = 1.0) -> ConsistencyReport:
    """Both directions of classical/contact consistency at sample points.

    A classical solution of an elliptic system must pass the verifier; a
    contact solution of a continuous system must be classical where twice
    differentiable. For classical fixtures a residual of size ``injected`` is
    added along the first coordinate and the verifier must then report a
    violation.
    """
    if u.grad is None or u.hess is None:
        raise InputError(f"{u.name}: analytic derivatives are required")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if directions is None:
        eye = np.eye(u.N)
        directions = list(eye) + list(-eye)
    residuals = []
    for x in points:
        r = F(x, u.eval(x), u.grad(x), T.hess_tensor(u.hess(x), u.N, u.n))
        residuals.append(float(np.max(np.abs(r))))
    max_res = max(residuals)
    classical = max_res <= tol * 1e2
    sol = verify_contact_solution(u, F, points, directions, seed=seed, tol=tol)
    injected_ok = None
    if classical:
        shift = np.zeros(u.N)
        shift[0] = injected
        mutant = Nonlinearity(lambda x, e, P, X: F.func(x, e, P, X) - shift, F.N, F.n,
                              F.continuity_declared, F.first_order_only, F.gate, f"{F.name}_shifted")
        injected_ok = not verify_contact_solution(u, mutant, points, directions, seed=seed, tol=tol).consistent
    a_dir = None if not F.continuity_declared else ((not sol.consistent) or classical)
    return ConsistencyReport(classical, max_res, sol.consistent, sol, (not classical) or sol.consistent,
                             a_dir, injected_ok)
