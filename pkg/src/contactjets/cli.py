"""Command line front-end: ``run``, ``paper-suite`` and ``replay``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import report as R
from .checks import run_check
from .errors import InputError
from .parallel import map_ordered
from .problem import load_problem
from .suite import ROWS, run_suite


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _timed_check(pb, c):
    t0 = time.perf_counter()
    result = run_check(pb, c)
    return result, time.perf_counter() - t0


def run_spec(source, seed=None, tol=None) -> dict:
    """Load a spec, run every candidate and return the report dict."""
    t0 = time.perf_counter()
    pb = load_problem(source, seed, tol)
    pairs = map_ordered(lambda c: _timed_check(pb, c), pb.checks)
    checks = [p[0] for p in pairs]
    timing = {"checks": {c["id"]: round(dt, 6) for c, (_, dt) in zip(checks, pairs)},
              "total": round(time.perf_counter() - t0, 6)}
    return R.build_run_report(pb.raw, pb.seed, checks, timing)


def cmd_run(args) -> int:
    try:
        rep = run_spec(args.spec, args.seed, args.tol)
    except (InputError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return R.EXIT_INPUT
    out = _out_dir(args.out)
    R.write_json(rep, out / "report.json")
    R.write_decay_csv(rep["checks"], out / "decay.csv")
    if args.plots:
        R.write_plots(rep["checks"], out)
    rows = [("check", "kind", "outcome", "status")]
    rows += [(c["id"], c["kind"], c["outcome"], c["status"]) for c in rep["checks"]]
    print(R.format_table(rows) if rep["checks"] else "no checks in spec")
    print(f"exit code {rep['exit_code']}; report written to {out / 'report.json'}")
    return rep["exit_code"]


def suite_report(seed: int = 0, tol=None) -> dict:
    rows, times = run_suite(seed, tol)
    timing = {"rows": {k: round(v, 6) for k, v in times.items()}, "total": round(sum(times.values()), 6)}
    return R.build_suite_report(seed, tol, rows, timing)


def cmd_suite(args) -> int:
    rep = suite_report(args.seed, args.tol)
    out = _out_dir(args.out)
    R.write_json(rep, out / "report.json")
    table = [("row", "criterion", "result", "seconds")]
    for r in rep["rows"]:
        table.append((r["key"], r["criterion"], "PASS" if r["passed"] else "FAIL",
                      f"{rep['timing']['rows'][r['key']]:.2f}"))
    print(R.format_table(table))
    print(f"exit code {rep['exit_code']}; report written to {out / 'report.json'}")
    return rep["exit_code"]


def _replay_suite(rep: dict, key: str) -> tuple[dict, dict]:
    rows = {r["key"]: r for r in rep["rows"]}
    if key not in rows:
        raise InputError(f"no row {key!r}; available: {', '.join(rows)}")
    fresh, _ = run_suite(rep["seed"], rep.get("decay_tol"), keys={key})
    return rows[key], fresh[0]


def _replay_run(rep: dict, check_id: str) -> tuple[dict, dict]:
    stored = {c["id"]: c for c in rep["checks"]}
    if check_id not in stored:
        raise InputError(f"no check {check_id!r}; available: {', '.join(stored)}")
    pb = load_problem(rep["spec"])
    c = next(c for c in pb.checks if c["id"] == check_id)
    return stored[check_id], run_check(pb, c)


def cmd_replay(args) -> int:
    try:
        rep = json.loads(Path(args.report).read_text())
        if rep.get("mode") == "paper-suite":
            old, new = _replay_suite(rep, args.check)
        else:
            old, new = _replay_run(rep, args.check)
    except (InputError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return R.EXIT_INPUT
    same = json.dumps(old, sort_keys=True) == json.dumps(new, sort_keys=True)
    status = new.get("status", "passed" if new.get("passed") else "violated")
    print(f"{args.check}: {status}; {'reproduced' if same else 'DIFFERS from stored result'}")
    if "counterexample" in new:
        print("counterexample: " + json.dumps(new["counterexample"], sort_keys=True)[:400])
    return 0 if same else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="contactjets", description="Numerical checks for contact jets of vector maps.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the checks listed in a problem spec")
    run.add_argument("spec", help="problem spec JSON file")
    run.add_argument("--out", default="out", help="output directory (default: out)")
    run.add_argument("--seed", type=int, default=None, help="override the spec seed")
    run.add_argument("--tol", type=float, default=None, help="override the decay tolerance")
    run.add_argument("--plots", action="store_true", help="write an SVG decay plot per check")
    run.set_defaults(func=cmd_run)

    suite = sub.add_parser("paper-suite", help="run the built-in acceptance battery")
    suite.add_argument("--out", default="out", help="output directory (default: out)")
    suite.add_argument("--seed", type=int, default=0)
    suite.add_argument("--tol", type=float, default=None, help="override the decay tolerance")
    suite.set_defaults(func=cmd_suite)

    rp = sub.add_parser("replay", help="re-run one check from a report and compare")
    rp.add_argument("report", help="report.json written by run or paper-suite")
    rp.add_argument("--check", required=True, help=f"check id, or a suite row ({', '.join(r.key for r in ROWS)})")
    rp.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
