"""Dispatch of problem-spec candidates to the numerical operations.

Every check returns a plain dict with an ``outcome`` (the operation's own
verdict) and a ``status``: passed, violated or inconclusive. When the spec
gives ``expect``, the status compares against it; otherwise the natural
positive outcome of the operation counts as passed.
"""

from __future__ import annotations

import math

import numpy as np

from . import contact_maps as CM
from . import ellipticity as E
from . import fixtures
from . import stability as S
from . import tensor as T
from .errors import DiagnosticError, InputError
from .jets import (HYPOTHESIS_FAILED, INCONCLUSIVE, MEMBER, JetCandidate, MapHandle, RadiiSchedule,
                   test_membership, test_structural)
from .problem import Problem, build_map, build_schedule, build_system

PASSED = "passed"
VIOLATED = "violated"
UNDECIDED = "inconclusive"
STATUSES = (PASSED, VIOLATED, UNDECIDED)
ROUND_TRIP_TOL = 1e-8


def check_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def plain(obj):
    """Recursively convert numpy values to JSON-safe Python values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def _status(outcome: str, expect: str | None, positive: tuple, undecided=(INCONCLUSIVE, HYPOTHESIS_FAILED)) -> str:
    if outcome in undecided:
        return UNDECIDED
    if expect is not None:
        return PASSED if outcome == expect else VIOLATED
    return PASSED if outcome in positive else VIOLATED


def _where(c: dict, key: str) -> str:
    return f"candidates[{c['index']}].{key}"


def _point(pb: Problem, c: dict) -> np.ndarray:
    p = c.get("point", 0)
    if isinstance(p, int):
        if p >= pb.points.shape[0]:
            raise InputError(f"{_where(c, 'point')}: index {p} out of range")
        return pb.points[p]
    x = np.asarray(p, dtype=float)
    if x.shape != (pb.n,):
        raise InputError(f"{_where(c, 'point')}: expected {pb.n} coordinates")
    return x


def _direction(pb: Problem, c: dict, key: str = "direction", N: int | None = None) -> np.ndarray:
    d = c.get(key, 0)
    if isinstance(d, int):
        if d >= pb.directions.shape[0]:
            raise InputError(f"{_where(c, key)}: index {d} out of range")
        return pb.directions[d]
    try:
        xi = T.as_direction(d)
    except InputError as exc:
        raise InputError(f"{_where(c, key)}: {exc}") from None
    if xi.shape[0] != (N or pb.N):
        raise InputError(f"{_where(c, key)}: expected {N or pb.N} components")
    return xi


def _schedule(pb: Problem, c: dict) -> RadiiSchedule:
    if "schedule" in c:
        merged = dict(pb.raw.get("schedule", {}))
        merged.update(c["schedule"])
        return build_schedule(merged)
    return pb.schedule


def _jet(pb: Problem, c: dict, need_direction: bool = True) -> JetCandidate:
    order = c.get("order", 2 if "X" in c else 1)
    if "P" not in c:
        raise InputError(f"{_where(c, 'P')}: required")
    try:
        return JetCandidate(_point(pb, c), _direction(pb, c), c["P"], c.get("X"), order)
    except InputError as exc:
        raise InputError(f"candidates[{c['index']}]: {exc}") from None


def _decay(v) -> list:
    return [[float(r), float(q)] for r, q in v.decay_table]


# ------------------------------------------------------------------ kinds

def _check_jet(pb: Problem, c: dict, seed: int) -> dict:
    jc = _jet(pb, c)
    method = c.get("method", "membership")
    if method not in ("membership", "structural"):
        raise InputError(f"{_where(c, 'method')}: expected membership or structural")
    s = _schedule(pb, c)
    v = test_membership(pb.u, jc, s) if method == "membership" else test_structural(pb.u, jc, s)
    out = {"outcome": v.status, "details": v.to_dict(), "decay_table": _decay(v)}
    out["status"] = _status(v.status, c.get("expect"), (MEMBER,))
    if out["status"] == VIOLATED:
        r, q = v.decay_table[-1]
        out["counterexample"] = {"radius": r, "ratio": q, "outcome": v.status}
    return out


def _check_kinked_sweep(pb: Problem, c: dict, seed: int) -> dict:
    if pb.raw["map"]["builtin"] != "kinked_line":
        raise InputError(f"{_where(c, 'kind')}: kinked_line_sweep needs the kinked_line map")
    params = pb.raw["map"].get("params", {})
    A, B = params["A"], params["B"]
    C = params.get("C", [0.0] * pb.N)
    t_grid = c.get("t")
    cases = fixtures.kinked_line_cases(A, B, C, t_grid)
    if c.get("order") in (1, 2):
        cases = [k for k in cases if k["order"] == c["order"]]
    s = _schedule(pb, c)
    rows, disagree, stated_disagree, undecided = [], 0, 0, 0
    for k in cases:
        P = fixtures.kinked_line_gradient(A, B, k["t"])
        X = None if k["X"] is None else np.asarray(k["X"]).reshape(pb.N, 1, 1)
        v = test_membership(pb.u, JetCandidate([0.0], k["xi"], P, X, k["order"]), s)
        derived = fixtures.kinked_line_jet(A, B, C, k["xi"], k["t"], k["X"], k["order"])
        stated = fixtures.kinked_line_jet_as_stated(A, B, C, k["xi"], k["t"], k["X"], k["order"])
        if v.status == INCONCLUSIVE:
            undecided += 1
        elif v.member != derived:
            disagree += 1
        stated_disagree += int(v.status != INCONCLUSIVE and v.member != stated)
        rows.append({"xi": k["xi"], "t": k["t"], "order": k["order"], "X": k["X"], "outcome": v.status,
                     "derived": derived, "as_stated": stated})
    outcome = "agrees" if disagree == 0 and undecided == 0 else ("inconclusive" if disagree == 0 else "disagrees")
    out = {"outcome": outcome, "details": {"cases": rows, "disagreements": disagree, "undecided": undecided,
                                          "as_stated_disagreements": stated_disagree}}
    out["status"] = _status(outcome, c.get("expect"), ("agrees",))
    if out["status"] == VIOLATED:
        bad = next(r for r in rows if r["outcome"] != INCONCLUSIVE and (r["outcome"] == MEMBER) != r["derived"])
        out["counterexample"] = bad
    return out


def _check_approx(pb: Problem, c: dict, seed: int) -> dict:
    order = c.get("order", 2 if "X" in c else 1)
    if "P" not in c:
        raise InputError(f"{_where(c, 'P')}: required")
    ac = S.ApproxJetCandidate(_point(pb, c), c["P"], c.get("X"), order)
    radii = None
    if "resonant_phase" in c:
        radii = S.resonant_radii(float(c["resonant_phase"]))
    elif "resonant_slope" in c:
        radii = S.resonant_radii(S.slope_phase(float(c["resonant_slope"])))
    v = S.test_approx_jet(pb.u, ac, _schedule(pb, c), radii)
    out = {"outcome": v.status, "details": dict(v.to_dict(), **v.extra), "decay_table": _decay(v)}
    out["status"] = _status(v.status, c.get("expect"), (MEMBER,))
    if out["status"] == VIOLATED:
        out["counterexample"] = {"min_ratio": v.extra["min_ratio"], "radius": v.extra["argmin_radius"]}
    return out


def _psi(pb: Problem, c: dict) -> MapHandle:
    spec = c.get("psi")
    if not isinstance(spec, dict) or "builtin" not in spec:
        raise InputError(f"{_where(c, 'psi')}: expected a map object with a builtin")
    if spec["builtin"] == "ridge_contact":
        return fixtures.holder_ridge_contact(float(spec.get("params", {}).get("k", 1.0)))
    return build_map(spec, pb.N, pb.n)


def _check_contact_map(pb: Problem, c: dict, seed: int) -> dict:
    psi = _psi(pb, c)
    cand = CM.ContactCandidate(psi, _point(pb, c), _direction(pb, c), c.get("order", 2))
    v = CM.is_contact_map(pb.u, cand, s=_schedule(pb, c))
    outcome = "contact" if v.is_contact else "not-contact"
    out = {"outcome": outcome, "details": v.to_dict()}
    out["status"] = _status(outcome, c.get("expect"), ("contact",))
    if out["status"] == VIOLATED:
        out["counterexample"] = {"finest_slope": v.finest_slope, "note": v.note}
    return out


def _check_round_trip(pb: Problem, c: dict, seed: int) -> dict:
    jc = _jet(pb, c)
    s = _schedule(pb, c)
    try:
        cand = CM.contact_map_from_jet(pb.u, jc, s)
    except InputError as exc:
        return {"outcome": HYPOTHESIS_FAILED, "status": UNDECIDED, "details": {"note": str(exc)}}
    back = CM.jet_from_contact_map(cand)
    gap_P = float(np.max(np.abs(back.P - jc.P)))
    gap_X = 0.0 if jc.order == 1 else float(np.max(np.abs(back.X - jc.X)))
    v = CM.is_contact_map(pb.u, cand, s=s)
    same = max(gap_P, gap_X) <= ROUND_TRIP_TOL * max(1.0, float(np.max(np.abs(jc.P))))
    outcome = "identity" if same and v.is_contact else "mismatch"
    out = {"outcome": outcome, "details": {"gap_P": gap_P, "gap_X": gap_X, "contact": v.to_dict()}}
    out["status"] = _status(outcome, c.get("expect"), ("identity",))
    if out["status"] == VIOLATED:
        out["counterexample"] = {"gap_P": gap_P, "gap_X": gap_X, "is_contact": v.is_contact}
    return out


def _check_ellipticity(pb: Problem, c: dict, seed: int) -> dict:
    F = build_system(c.get("system"), _where(c, "system"))
    r = E.check_ellipticity_sampled(F, int(c.get("budget", 10_000)), seed)
    out = {"outcome": r.verdict, "details": r.to_dict()}
    out["status"] = _status(r.verdict, c.get("expect"), (E.CERTIFIED,))
    if r.counterexample is not None:
        out["counterexample"] = r.counterexample
    return out


def _check_quasilinear(pb: Problem, c: dict, seed: int) -> dict:
    try:
        A = np.asarray(c["A"], dtype=float)
    except KeyError:
        raise InputError(f"{_where(c, 'A')}: required") from None
    if A.ndim != 4:
        raise InputError(f"{_where(c, 'A')}: expected an (N, n, N, n) array")
    r = E.check_quasilinear(A, int(c.get("budget", 10_000)), seed)
    out = {"outcome": r.verdict, "details": r.to_dict()}
    out["status"] = _status(r.verdict, c.get("expect"), (E.CERTIFIED,))
    if r.counterexample is not None:
        out["counterexample"] = r.counterexample
    return out


def _check_solution(pb: Problem, c: dict, seed: int) -> dict:
    F = build_system(c.get("system"), _where(c, "system"))
    norms = tuple(float(v) for v in c.get("psd_norms", E.PSD_NORMS))
    r = E.verify_contact_solution(pb.u, F, pb.points, list(pb.directions), norms, _schedule(pb, c),
                                  seed=seed, tol=float(c.get("tol", 1e-8)), sign=int(c.get("sign", 1)))
    outcome = "consistent" if r.consistent else "inconsistent"
    out = {"outcome": outcome, "details": r.to_dict()}
    out["status"] = _status(outcome, c.get("expect"), ("consistent",))
    if r.violations:
        out["counterexample"] = min(r.violations, key=lambda v: v["value"])
    return out


def _check_approximation(pb: Problem, c: dict, seed: int) -> dict:
    jc = _jet(pb, c)
    fam = S.MollifierFamily(tuple(c["scales"])) if "scales" in c else S.MollifierFamily()
    e = c.get("e")
    r = S.approximation_experiment(pb.u, jc, fam, _schedule(pb, c), e=e, Q=c.get("Q"))
    if r.xi_converges and r.perp_converges:
        outcome = "converges"
    elif r.xi_converges:
        outcome = "xi-only"
    else:
        outcome = "fails"
    out = {"outcome": outcome, "details": r.to_dict()}
    out["status"] = _status(outcome, c.get("expect"), ("converges", "xi-only"))
    if out["status"] == VIOLATED:
        out["counterexample"] = {"final_err": r.final_err, "steps": [st.status for st in r.steps]}
    return out


HANDLERS = {
    "jet": _check_jet,
    "kinked_line_sweep": _check_kinked_sweep,
    "approx_jet": _check_approx,
    "contact_map": _check_contact_map,
    "contact_round_trip": _check_round_trip,
    "ellipticity": _check_ellipticity,
    "quasilinear": _check_quasilinear,
    "contact_solution": _check_solution,
    "approximation": _check_approximation,
}


def run_check(pb: Problem, c: dict) -> dict:
    """Run one candidate; input problems propagate, numerical breakdowns become inconclusive."""
    seed = check_seed(pb.seed, c["index"])
    try:
        out = HANDLERS[c["kind"]](pb, c, seed)
    except DiagnosticError as exc:
        out = {"outcome": "diagnostic-error", "status": UNDECIDED, "details": {"note": str(exc)}}
    result = {"id": c["id"], "kind": c["kind"], "expect": c.get("expect"), "seed": seed}
    result.update(out)
    return plain(result)
