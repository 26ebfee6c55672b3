"""Problem specification files (schema version 1) and the builtin registry."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from . import ellipticity as E
from . import fixtures
from . import tensor as T
from .errors import InputError
from .jets import MapHandle, RadiiSchedule
from .sampling import sphere_directions

SCHEMA_VERSION = 1

MAP_BUILTINS = ("kinked_line", "oscillating_line", "oscillating_cusp", "holder_ridge", "quadratic",
                "custom_piecewise")
SYSTEM_BUILTINS = ("laplacian_power", "max_eig_system", "min_eig_system", "det_system")
CHECK_KINDS = ("jet", "kinked_line_sweep", "approx_jet", "contact_map", "contact_round_trip",
               "ellipticity", "quasilinear", "contact_solution", "approximation")

_vec = {"type": "array", "items": {"type": "number"}}
_nested = {"type": "array"}
_index_or_vec = {"oneOf": [{"type": "integer", "minimum": 0}, _vec]}

SCHEMA = {
    "type": "object",
    "required": ["schema_version", "dims", "map"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "dims": {
            "type": "object",
            "required": ["N", "n"],
            "additionalProperties": False,
            "properties": {"N": {"type": "integer", "minimum": 1, "maximum": T.MAX_DIM},
                           "n": {"type": "integer", "minimum": 1, "maximum": T.MAX_DIM}},
        },
        "map": {
            "type": "object",
            "required": ["builtin"],
            "additionalProperties": False,
            "properties": {"builtin": {"enum": list(MAP_BUILTINS)}, "params": {"type": "object"}},
        },
        "points": {"type": "array", "items": _vec},
        "directions": {"oneOf": [
            {"type": "array", "items": _vec},
            {"type": "object", "required": ["sphere_samples"], "additionalProperties": False,
             "properties": {"sphere_samples": {"type": "integer", "minimum": 1, "maximum": 4096}}},
        ]},
        "candidates": {"type": "array", "items": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": list(CHECK_KINDS)}, "id": {"type": "string", "minLength": 1},
                           "point": _index_or_vec, "direction": _index_or_vec, "P": _nested, "X": _nested,
                           "order": {"enum": [1, 2]},
                           "expect": {"type": "string"}},
        }},
        "schedule": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"r0": {"type": "number"}, "factor": {"type": "number"},
                           "count": {"type": "integer"}, "sphere_samples": {"type": "integer"},
                           "decay_tol": {"type": "number"}},
        },
        "seed": {"type": "integer", "minimum": 0},
    },
}


def _path(err: jsonschema.ValidationError) -> str:
    out = ""
    for part in err.absolute_path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


@dataclass
class Problem:
    raw: dict
    N: int
    n: int
    u: MapHandle
    points: np.ndarray
    directions: np.ndarray
    checks: list
    schedule: RadiiSchedule
    seed: int


def load_problem(source, seed: int | None = None, tol: float | None = None) -> Problem:
    """Parse a spec from a path, JSON text or dict. Raises InputError with a field path."""
    if isinstance(source, dict):
        raw = copy.deepcopy(source)
    else:
        text = Path(source).read_text() if not str(source).lstrip().startswith("{") else str(source)
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        raise InputError(f"{_path(err)}: {err.message}")
    if seed is not None:
        raw["seed"] = int(seed)
    if tol is not None:
        raw.setdefault("schedule", {})["decay_tol"] = float(tol)
    N, n = raw["dims"]["N"], raw["dims"]["n"]
    u = build_map(raw["map"], N, n)
    points = np.asarray(raw.get("points", [[0.0] * n]), dtype=float)
    if points.ndim != 2 or points.shape[1] != n:
        raise InputError(f"points: each point needs {n} coordinates")
    directions = _directions(raw.get("directions", {"sphere_samples": 8}), N)
    schedule = build_schedule(raw.get("schedule", {}))
    checks = []
    seen = set()
    for k, c in enumerate(raw.get("candidates", [])):
        cid = c.get("id", f"{c['kind']}-{k}")
        if cid in seen:
            raise InputError(f"candidates[{k}].id: duplicate id {cid!r}")
        seen.add(cid)
        checks.append(dict(c, id=cid, index=k))
    return Problem(raw, N, n, u, points, directions, checks, schedule, int(raw.get("seed", 0)))


def _directions(spec, N: int) -> np.ndarray:
    if isinstance(spec, dict):
        return sphere_directions(N, spec["sphere_samples"])
    out = []
    for k, d in enumerate(spec):
        try:
            out.append(T.as_direction(d))
        except InputError as exc:
            raise InputError(f"directions[{k}]: {exc}") from None
        if out[-1].shape[0] != N:
            raise InputError(f"directions[{k}]: expected {N} components")
    if not out:
        raise InputError("directions: list is empty")
    return np.array(out)


def build_schedule(spec: dict) -> RadiiSchedule:
    try:
        return RadiiSchedule(**spec)
    except InputError as exc:
        raise InputError(f"schedule: {exc}") from None


def _param(params: dict, key: str, where: str, default=None, required: bool = False):
    if key not in params:
        if required:
            raise InputError(f"{where}.params.{key}: required")
        return default
    return params[key]


def build_map(spec: dict, N: int, n: int) -> MapHandle:
    name = spec["builtin"]
    params = spec.get("params", {})
    where = "map"
    try:
        if name == "kinked_line":
            A = _param(params, "A", where, required=True)
            B = _param(params, "B", where, required=True)
            C = _param(params, "C", where, default=[0.0] * N)
            u = fixtures.kinked_line(A, B, C)
        elif name == "oscillating_line":
            u = fixtures.oscillating_line()
        elif name == "oscillating_cusp":
            u = fixtures.oscillating_cusp()
        elif name == "holder_ridge":
            u = fixtures.holder_ridge(float(_param(params, "alpha", where, default=0.5)))
        elif name == "quadratic":
            c0 = _param(params, "c", where, default=[0.0] * N)
            P = _param(params, "P", where, default=np.zeros((N, n)).tolist())
            X = _param(params, "X", where, default=np.zeros((N, n, n)).tolist())
            u = fixtures.quadratic_map(c0, T.as_grad(P, N, n), T.hess_tensor(X, N, n), "quadratic")
        else:
            u = fixtures.piecewise_polynomial(n, N, _param(params, "regions", where, required=True))
    except (ValueError, TypeError) as exc:
        raise InputError(f"{where}.params: {exc}") from None
    if (u.N, u.n) != (N, n):
        raise InputError(f"dims: builtin {name!r} has N={u.N}, n={u.n}")
    return u


def build_system(spec: dict, where: str) -> E.Nonlinearity:
    if not isinstance(spec, dict) or spec.get("name") not in SYSTEM_BUILTINS:
        raise InputError(f"{where}.name: expected one of {', '.join(SYSTEM_BUILTINS)}")
    try:
        N, n = int(spec["N"]), int(spec["n"])
    except KeyError as exc:
        raise InputError(f"{where}.{exc.args[0]}: required") from None
    T.check_dims(N, n)
    h = spec.get("h")
    p = spec.get("p")
    name = spec["name"]
    if name == "laplacian_power":
        return E.laplacian_power_system(N, n, p, h)
    if name == "max_eig_system":
        return E.max_eig_system(N, n, h)
    if name == "min_eig_system":
        return E.min_eig_system(N, n, p, h)
    return E.det_system(N, n, h)
