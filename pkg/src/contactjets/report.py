"""Run reports: assembly, exit codes and the JSON / CSV / SVG writers."""

from __future__ import annotations

import csv
import json
import platform
import re
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .checks import PASSED, UNDECIDED, VIOLATED, plain
from .svg import decay_plot

REPORT_VERSION = 1

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_INCONCLUSIVE = 2
EXIT_INPUT = 3


def versions() -> dict:
    return {"contactjets": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def exit_code(statuses: list[str]) -> int:
    if not statuses:
        return EXIT_INCONCLUSIVE
    if VIOLATED in statuses:
        return EXIT_VIOLATED
    if UNDECIDED in statuses:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def summarise(statuses: list[str]) -> dict:
    return {"total": len(statuses), PASSED: statuses.count(PASSED), VIOLATED: statuses.count(VIOLATED),
            UNDECIDED: statuses.count(UNDECIDED)}


def build_run_report(raw: dict, seed: int, checks: list[dict], timing: dict) -> dict:
    statuses = [c["status"] for c in checks]
    code = exit_code(statuses)
    return plain({"schema_version": REPORT_VERSION, "mode": "run", "versions": versions(), "seed": seed,
                  "spec": raw, "checks": checks, "summary": summarise(statuses), "exit_code": code,
                  "timing": timing})


def build_suite_report(seed: int, tol, rows: list[dict], timing: dict) -> dict:
    statuses = [PASSED if r["passed"] else VIOLATED for r in rows]
    return plain({"schema_version": REPORT_VERSION, "mode": "paper-suite", "versions": versions(), "seed": seed,
                  "decay_tol": tol, "rows": rows, "summary": summarise(statuses),
                  "exit_code": exit_code(statuses), "timing": timing})


def canonical(report: dict) -> str:
    """The report text with wall times removed; equal inputs give equal text."""
    return json.dumps({k: v for k, v in report.items() if k != "timing"}, sort_keys=True, indent=2)


def write_json(report: dict, path: Path) -> None:
    path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")


def write_decay_csv(checks: list[dict], path: Path) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["check_id", "radius", "max_ratio"])
        for c in checks:
            for r, q in c.get("decay_table", []):
                w.writerow([c["id"], repr(float(r)), repr(float(q))])


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text) or "check"


def write_plots(checks: list[dict], out: Path) -> list[Path]:
    written = []
    for c in checks:
        table = c.get("decay_table")
        if not table:
            continue
        slope = c.get("details", {}).get("fitted_exponent")
        path = out / f"{_slug(c['id'])}.svg"
        path.write_text(decay_plot(table, title=f"{c['id']} ({c['outcome']})", slope=slope))
        written.append(path)
    return written


def format_table(rows: list[tuple]) -> str:
    widths = [max(len(str(r[k])) for r in rows) for k in range(len(rows[0]))]
    return "\n".join("  ".join(str(v).ljust(w) for v, w in zip(r, widths)).rstrip() for r in rows)
