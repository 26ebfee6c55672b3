"""The built-in acceptance battery behind ``contactjets paper-suite``.

Each row is a function of ``(seed, tol)`` returning a plain dict with a
``passed`` flag and the metrics behind it. Rows never share random streams.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import contact_maps as CM
from . import ellipticity as E
from . import fixtures
from . import orderings as O
from . import stability as S
from . import tensor as T
from .checks import plain
from .errors import DiagnosticError
from .jets import (INCONCLUSIVE, JetCandidate, RadiiSchedule, equivalent_forms,
                   jet_enumerate_smooth, remainder_map, test_membership, test_structural)
from .sampling import make_rng, random_psd, random_unit

KINKED_PARAMS = (
    ([1.0, 0.5], [0.5, 1.0], [0.0, 0.0]),
    ([1.0, 0.5], [0.5, 1.0], [0.7, -0.4]),
)
RIDGE_SCHEDULE = RadiiSchedule(count=16)


def _schedule(tol: float | None, base: RadiiSchedule | None = None) -> RadiiSchedule:
    base = base or RadiiSchedule()
    if tol is None:
        return base
    return RadiiSchedule(base.r0, base.factor, base.count, base.sphere_samples, tol)


# ------------------------------------------------------------------ rows

def vee_spectrum_row(seed: int, tol=None, samples: int = 10_000) -> dict:
    rng = make_rng(seed, 1)
    worst_val = worst_vec = worst_form = 0.0
    by_dim: dict[int, list] = {}
    for k in range(samples):
        N = 1 + k % 6
        xi = random_unit(rng, N)
        R = rng.standard_normal(N) * 10.0 ** rng.uniform(-3, 3)
        if k % 7 == 0 and N > 1:
            R = rng.standard_normal() * xi  # parallel case
        by_dim.setdefault(N, []).append((xi, R))
    for N, items in by_dim.items():
        xis = np.array([i[0] for i in items])
        Rs = np.array([i[1] for i in items])
        M = 0.5 * (np.einsum("ma,mb->mab", xis, Rs) + np.einsum("ma,mb->mab", Rs, xis))
        w, _ = T.jacobi_eigh(M)
        for (xi, R), wj, Mj in zip(items, w, M):
            sp = T.vee_spectrum(xi, R)
            scale = max(1.0, float(np.linalg.norm(R)))
            worst_val = max(worst_val, float(np.max(np.abs(sp.eigenvalues - wj))) / scale)
            target = wj[-1] if N > 1 else max(wj[-1], 0.0)
            worst_form = max(worst_form, abs(sp.max_sign_form - target) / scale,
                             abs(sp.max_pole_form - target) / scale)
            res = Mj @ sp.eigenvectors - sp.eigenvectors * sp.eigenvalues
            worst_vec = max(worst_vec, float(np.max(np.abs(res))) / scale)
    passed = max(worst_val, worst_vec, worst_form) < 1e-10
    return {"passed": passed, "samples": samples, "max_eigenvalue_error": worst_val,
            "max_form_error": worst_form, "max_residual": worst_vec}


def _nonpos_cases(rng, count: int, holds: bool):
    dims = [(1, 2), (2, 1), (2, 2), (3, 2), (2, 3)]
    for k in range(count):
        N, n = dims[k % len(dims)]
        xi = random_unit(rng, N)
        v_along = -abs(rng.standard_normal()) * 10.0 ** rng.uniform(-2, 2)
        M = -random_psd(rng, n, 10.0 ** rng.uniform(-2, 2))
        if holds:
            v = v_along * xi
            X = np.einsum("a,ij->aij", xi, M)
        elif N > 1 and k % 2 == 0:
            # off-axis part
            off = T.perp_part(xi, rng.standard_normal(N))
            off *= max(0.1, abs(v_along)) / max(np.linalg.norm(off), 1e-300)
            v = v_along * xi + off
            X = np.einsum("a,ij->aij", xi, M) + np.einsum("a,ij->aij", off, np.eye(n))
        else:
            # wrong sign along xi
            v = abs(v_along) * xi
            X = np.einsum("a,ij->aij", xi, -M + 0.1 * np.eye(n))
        yield xi, v, X


def nonpositivity_row(seed: int, tol=None, count: int = 1000) -> dict:
    rng = make_rng(seed, 2)
    disagreements = marginal = 0
    wrong = 0
    for holds in (True, False):
        for xi, v, X in _nonpos_cases(rng, count, holds):
            for verdict in (O.vee_nonpos_vector(xi, v), O.vee_nonpos_hess(xi, X)):
                if len(set(verdict.routes.values())) != 1:
                    disagreements += 1
                marginal += int(verdict.marginal)
                wrong += int(verdict.holds != holds)
    return {"passed": disagreements == 0 and wrong == 0, "cases": 2 * count,
            "disagreements": disagreements, "marginal": marginal, "misclassified": wrong}


def rank_one_strictness_row(seed: int, tol=None) -> dict:
    det = T.determinant_form()
    angles = np.deg2rad(np.arange(360))
    circle = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    eta = np.repeat(circle, 360, axis=0)
    w = np.tile(circle, (360, 1))
    grid_min = float(np.min(T.rank_one_value(det, eta, w)))
    cert = O.min_rank_one_value(det)
    flat_min = O.min_flat_eigenvalue(det)
    ident = T.identity_form(2, 2)
    id_ok = O.min_rank_one_value(ident).positive and O.is_positive(ident)
    neg_ok = (not O.min_rank_one_value(-ident).positive) and not O.is_positive(-ident)
    passed = grid_min >= -1e-9 and cert.positive and flat_min <= -0.4 and id_ok and neg_ok
    return {"passed": passed, "grid_min": grid_min, "certifier_min": cert.min_value,
            "flat_min_eigenvalue": flat_min, "identity_classified": id_ok, "negated_classified": neg_ok}


def _kinked_agreement(tol, predicate: Callable) -> dict:
    s = _schedule(tol)
    total = agree = undecided = 0
    for A, B, C in KINKED_PARAMS:
        u = fixtures.kinked_line(A, B, C)
        for case in fixtures.kinked_line_cases(A, B, C):
            P = fixtures.kinked_line_gradient(A, B, case["t"])
            X = None if case["X"] is None else np.asarray(case["X"]).reshape(-1, 1, 1)
            v = test_membership(u, JetCandidate([0.0], case["xi"], P, X, case["order"]), s)
            expected = predicate(A, B, C, case["xi"], case["t"], case["X"], case["order"])
            total += 1
            undecided += int(v.status == INCONCLUSIVE)
            agree += int(v.status != INCONCLUSIVE and v.member == expected)
    return {"passed": agree == total, "cases": total, "agreements": agree, "inconclusive": undecided,
            "agreement_rate": agree / total}


def kinked_line_row(seed: int, tol=None) -> dict:
    """Agreement with the published closed form, transcribed verbatim."""
    return _kinked_agreement(tol, fixtures.kinked_line_jet_as_stated)


def kinked_line_derived_row(seed: int, tol=None) -> dict:
    """Agreement with the closed form re-derived from the jet definition."""
    return _kinked_agreement(tol, fixtures.kinked_line_jet)


def smooth_rays_row(seed: int, tol=None) -> dict:
    rng = make_rng(seed, 5)
    s = _schedule(tol)
    fails = checked_pairs = 0
    tested = 0
    for u in fixtures.smooth_battery():
        x = 0.3 * rng.standard_normal(u.n)
        for _ in range(8):
            xi = random_unit(rng, u.N)
            fam = jet_enumerate_smooth(u, x, xi)
            fails += int(not test_membership(u, fam.candidate(), s).member)
            tested += 1
            As = [random_psd(rng, u.n, 10.0 ** rng.uniform(-1, 1)) for _ in range(5)]
            plus = []
            for A in As:
                ok = test_membership(u, fam.candidate(A), s).member
                fails += int(not ok)
                tested += 1
                if ok:
                    plus.append(fam.candidate(A).X)
            minus = jet_enumerate_smooth(u, x, -xi)
            B = random_psd(rng, u.n, 1.0)
            cm = minus.candidate(B)
            if plus and test_membership(u, cm, s).member:
                for Xp in plus:
                    checked_pairs += 1
                    fails += int(not O.vee_nonpos_hess(xi, cm.X - Xp).holds)
    return {"passed": fails == 0, "membership_tests": tested, "two_sided_pairs": checked_pairs, "failures": fails}


def _equivalence_battery(rng):
    """Forty smooth-map candidates (two members, two non-members each) plus kinked-line ones."""
    out = []
    for u in fixtures.smooth_battery():
        x = 0.3 * rng.standard_normal(u.n)
        xi = random_unit(rng, u.N)
        fam = jet_enumerate_smooth(u, x, xi)
        out.append((u, fam.first_order(), True))
        out.append((u, fam.candidate(np.eye(u.n)), True))
        # hessian pushed below the true one along xi: positive xi.R at order two
        lowered = fam.hessian - np.einsum("a,ij->aij", xi, np.eye(u.n))
        out.append((u, JetCandidate(x, xi, fam.gradient, lowered, 2), False))
        # gradient tilted off xi: perpendicular remainder of order one
        tilt = T.perp_part(xi, random_unit(rng, u.N))
        tilt /= np.linalg.norm(tilt)
        out.append((u, JetCandidate(x, xi, fam.gradient + 0.5 * np.outer(tilt, np.ones(u.n)), None, 1), False))
    A, B, C = KINKED_PARAMS[1]
    k = fixtures.kinked_line(A, B, C)
    S = np.asarray(A) + np.asarray(B)
    for xi in (-S / np.linalg.norm(S), S / np.linalg.norm(S)):
        for t in (-1.5, -1.0, 0.0, 0.5, 1.0, 1.5):
            member = fixtures.kinked_line_jet(A, B, C, xi, t)
            out.append((k, JetCandidate([0.0], xi, fixtures.kinked_line_gradient(A, B, t), None, 1), member))
    return out


def equivalence_row(seed: int, tol=None) -> dict:
    rng = make_rng(seed, 6)
    s = _schedule(tol)
    battery = _equivalence_battery(rng)
    disagreements = members = 0
    rows = []
    for u, c, expected in battery:
        vm = test_membership(u, c, s)
        vs = test_structural(u, c, s)
        forms = equivalent_forms(remainder_map(u, c), c.direction, c.order, s)
        statuses = {vm.status, vs.status} | {v.status for v in forms.forms.values()}
        ok = len(statuses) == 1 and vm.status != INCONCLUSIVE
        disagreements += int(not ok)
        members += int(vm.member)
        rows.append({"map": u.name, "order": c.order, "statuses": sorted(statuses), "expected": expected})
    return {"passed": disagreements == 0 and len(battery) >= 40 and 0 < members < len(battery),
            "fixtures": len(battery), "members": members, "disagreements": disagreements,
            "failing": [r for r in rows if len(r["statuses"]) != 1]}


def ellipticity_row(seed: int, tol=None, budget: int = 10_000, biforms: int = 500) -> dict:
    systems = [E.laplacian_power_system(2, 2, p=[0, 1]), E.max_eig_system(2, 3), E.min_eig_system(3, 2, p=1),
               E.det_system(2, 2)]
    certified = {}
    for k, F in enumerate(systems):
        r = E.check_ellipticity_sampled(F, budget, seed + k)
        certified[F.name] = {"verdict": r.verdict, "pairs": r.routes["directional"]["pairs"]}
    systems_ok = all(v["verdict"] == E.CERTIFIED and v["pairs"] >= budget for v in certified.values())
    neg = E.check_ellipticity_sampled(E.vector_laplacian(2, 2, -1.0), budget, seed)
    replayed = neg.counterexample is not None and E.replay_counterexample(
        E.vector_laplacian(2, 2, -1.0), {k: np.asarray(v) if isinstance(v, list) else v
                                         for k, v in neg.counterexample.items()}) > 0
    neg_ok = neg.verdict == E.VIOLATED and replayed and bool(neg.confirmed_by_other_route)

    rng = make_rng(seed, 7)
    wrong = errors = 0
    for k in range(biforms):
        N, n = [(1, 2), (2, 2), (2, 1), (3, 2)][k % 4]
        B = O.random_biform(rng, N, n)
        shift = -O.min_flat_eigenvalue(B) + 0.2
        Xi = B + shift * T.identity_form(N, n)
        label = True
        if k % 2 == 1:
            eta, w = random_unit(rng, N), random_unit(rng, n)
            r1 = np.einsum("a,i->ai", eta, w)
            value = float(np.einsum("aibj,ai,bj->", Xi, r1, r1))
            Xi = Xi - (value + 1.0) * np.einsum("ai,bj->aibj", r1, r1)
            label = False
        try:
            rep = E.check_quasilinear(Xi, budget=2000, seed=seed + k)
        except DiagnosticError:
            errors += 1
            continue
        wrong += int((rep.verdict == E.CERTIFIED) != label)
    biform_ok = wrong == 0 and errors == 0
    return {"passed": systems_ok and neg_ok and biform_ok, "systems": certified,
            "negated_laplacian": {"verdict": neg.verdict, "replayed": replayed,
                                  "confirmed_by_other_route": neg.confirmed_by_other_route},
            "biforms": biforms, "biform_misclassified": wrong, "biform_route_errors": errors}


def consistency_row(seed: int, tol=None) -> dict:
    u = fixtures.quadratic_map([0.0, 0.0], np.zeros((2, 2)), np.stack([2 * np.eye(2)] * 2), "squared_norm")
    pts = make_rng(seed, 8).standard_normal((4, 2))
    dirs = [np.array(d) for d in ([1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0])] + \
        list(random_unit(make_rng(seed, 9), 2, 4))
    good = E.verify_contact_solution(u, E.laplacian_power_system(2, 2, 0, [4.0, 4.0]), pts, dirs, seed=seed)
    bad = E.verify_contact_solution(u, E.laplacian_power_system(2, 2, 0, [4.0, 5.0]), pts, dirs, seed=seed)
    at_e2 = [v for v in bad.violations if np.allclose(v["xi"], [0.0, 1.0]) and v["psd_norm"] == 0.0]
    mutant_margin = min((v["value"] for v in at_e2), default=0.0)
    passed = good.consistent and good.min_margin >= -1e-8 and not bad.consistent and mutant_margin <= -0.9
    return {"passed": passed, "fixture_min_margin": good.min_margin, "mutant_min_margin": bad.min_margin,
            "mutant_margin_at_e2": mutant_margin, "mutant_violations": len(bad.violations)}


def contact_round_trip_row(seed: int, tol=None) -> dict:
    rng = make_rng(seed, 10)
    s = _schedule(tol)
    identity = contact_ok = jets = 0
    forward_ok = True
    for u in fixtures.smooth_battery():
        x = 0.3 * rng.standard_normal(u.n)
        xi = random_unit(rng, u.N)
        fam = jet_enumerate_smooth(u, x, xi)
        for jc in (fam.candidate(), fam.candidate(random_psd(rng, u.n, 1.0))):
            jets += 1
            cand = CM.contact_map_from_jet(u, jc, s)
            back = CM.jet_from_contact_map(cand)
            same = np.allclose(back.P, jc.P, atol=1e-8) and np.allclose(back.X, jc.X, atol=1e-8)
            identity += int(same)
            contact_ok += int(CM.is_contact_map(u, cand, s=s).is_contact)
            rep = CM.contact_calculus_check(u, cand, s=s)
            forward_ok &= bool(rep.forward_holds)
    ridge = CM.ContactCandidate(fixtures.holder_ridge_contact(1.0), [0.0], [1.0, 0.0])
    ridge_ok = CM.is_contact_map(fixtures.holder_ridge(0.5), ridge, s=_schedule(tol, RIDGE_SCHEDULE)).is_contact
    passed = identity == jets == contact_ok and forward_ok and ridge_ok
    return {"passed": passed, "jets": jets, "identity": identity, "contact": contact_ok,
            "forward_implication": forward_ok, "ridge_contact": ridge_ok}


def approximation_row(seed: int, tol=None) -> dict:
    u = fixtures.oscillating_line()
    s = _schedule(tol)
    accepted = []
    for p in np.round(np.arange(-1.5, 1.5 + 1e-9, 0.05), 2):
        v = S.test_approx_jet(u, S.ApproxJetCandidate([0.0], [[p]]), s, S.resonant_radii(S.slope_phase(p)))
        if v.member:
            accepted.append(float(p))
    interval_ok = bool(accepted) and abs(min(accepted) + 1) <= 0.05 + 1e-9 and abs(max(accepted) - 1) <= 0.05 + 1e-9
    contiguous = bool(accepted) and len(accepted) == int(round((max(accepted) - min(accepted)) / 0.05)) + 1

    k = 1.0
    jet = JetCandidate([0.0], [1.0, 0.0], [[0.0], [0.0]], [[[0.0]], [[2 * k]]], 2)
    rep = S.approximation_experiment(fixtures.holder_ridge(0.5), jet, s=_schedule(tol, RIDGE_SCHEDULE),
                                     e=[1.0, 0.0])
    perp_zero = all(np.allclose(st.perp_hessian, 0.0, atol=1e-12) for st in rep.steps)
    approx_ok = rep.xi_converges and rep.final_err < 1e-2 and perp_zero and not rep.perp_converges

    rng = make_rng(seed, 11)
    worst = 0.0
    for _ in range(1000):
        N = int(rng.integers(2, 7))
        xi = random_unit(rng, N)
        eta = random_unit(rng, N)
        a = rng.standard_normal(N)
        Pi = T.complement_projector(xi, eta)
        lam, mu, pa = T.frame_expand(a, xi, eta, Pi)
        worst = max(worst, float(np.max(np.abs(lam * xi + mu * eta + pa - a))))
    passed = interval_ok and contiguous and approx_ok and worst < 1e-12
    return {"passed": passed, "accepted_min": min(accepted, default=None), "accepted_max": max(accepted, default=None),
            "accepted_contiguous": contiguous, "xi_converges": rep.xi_converges, "final_error": rep.final_err,
            "perp_hessians_zero": perp_zero, "perp_target": rep.target_perp,
            "assumption_holds": rep.assumption_holds, "frame_residual": worst}


@dataclass(frozen=True)
class Row:
    key: str
    criterion: int
    func: Callable


ROWS = (
    Row("vee-spectrum", 1, vee_spectrum_row),
    Row("nonpositivity-equivalences", 2, nonpositivity_row),
    Row("rank-one-strictness", 3, rank_one_strictness_row),
    Row("kinked-line-jets", 4, kinked_line_row),
    Row("kinked-line-jets-derived", 4, kinked_line_derived_row),
    Row("smooth-jet-rays", 5, smooth_rays_row),
    Row("membership-equivalence", 6, equivalence_row),
    Row("ellipticity-systems", 7, ellipticity_row),
    Row("classical-consistency", 8, consistency_row),
    Row("contact-map-round-trip", 9, contact_round_trip_row),
    Row("approximate-jets", 10, approximation_row),
)


def run_suite(seed: int = 0, tol: float | None = None, keys=None) -> tuple[list, dict]:
    """Run the battery sequentially; returns (rows, wall times)."""
    rows, times = [], {}
    for row in ROWS:
        if keys is not None and row.key not in keys:
            continue
        t0 = time.perf_counter()
        result = row.func(seed, tol)
        times[row.key] = time.perf_counter() - t0
        rows.append(plain(dict(result, key=row.key, criterion=row.criterion)))
    return rows, times
