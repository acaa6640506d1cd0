"""Command line front end: ``run``, ``scan`` and ``validate``."""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import algebra
from .algebra import weak_value_set
from .errors import ParseError, WeakPointerError
from .pointer import HERMITICITY_TOL, dump_wavefunction, make_lg_mode
from .readout import ReadoutRequest, readout
from .scenario import (
    SCAN_SCHEMA,
    Scenario,
    check_finite,
    csv_rows,
    load_scenario,
    reading_record,
    result_record,
    write_csv,
    write_json,
)

log = logging.getLogger("weakpointer")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_IO = 4
MAX_WORKERS_ENV = "WEAKPOINTER_MAX_WORKERS"

TOLERANCES = {
    "hermitian": algebra.HERMITIAN_TOL,
    "unit_norm": algebra.UNIT_NORM_TOL,
    "commutator": algebra.COMMUTATOR_TOL,
    "eigen_residual": algebra.EIGEN_RESIDUAL_TOL,
    "eps_overlap": algebra.DEFAULT_EPS_OVERLAP,
    "meter_hermiticity": HERMITICITY_TOL,
}


def max_workers() -> int:
    raw = os.environ.get(MAX_WORKERS_ENV)
    if raw:
        return max(1, int(raw))
    return min(4, os.cpu_count() or 1)


def run_scenario(sc: Scenario) -> dict:
    """Evaluate every requested readout and build a result record.

    Each readout gets its own generator seeded from the scenario hash, so the
    output does not depend on evaluation order.
    """
    wv = weak_value_set(sc.a, sc.b, sc.sel)
    exact_cache: dict[str, float] = {}

    def exact_value(req: ReadoutRequest) -> float:
        if req.meter.tag not in exact_cache:
            ref = ReadoutRequest(req.meter, "Exact")
            exact_cache[req.meter.tag] = readout(
                sc.a, sc.b, sc.sel, sc.pointer, sc.coupling, ref, rng=sc.seed
            ).value
        return exact_cache[req.meter.tag]

    readings = []
    for req in sc.readouts:
        reading = readout(sc.a, sc.b, sc.sel, sc.pointer, sc.coupling, req, rng=sc.seed)
        if req.method == "Exact":
            exact_cache.setdefault(req.meter.tag, reading.value)
            delta = None
        else:
            delta = abs(reading.value - exact_value(req))
        readings.append(reading_record(req, reading, delta))
    record = result_record(sc, wv, readings, TOLERANCES)
    check_finite(record)
    return record


def _fit_slope(xs, ys) -> float | None:
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    if len(xs) < 2:
        return None
    return float(np.polyfit(xs, ys, 1)[0])


def scan_fits(param: str, values, records: list[dict]) -> list[dict]:
    """Log-log slope of ``|delta vs exact|`` for g-scans, linear slope of the value for l-scans."""
    fits = []
    keys = [(r["meter"], r["method"]) for r in records[0]["readings"]] if records else []
    for idx, (meter_tag, method) in enumerate(keys):
        if param in ("g", "g_a", "g_b") and method != "Exact":
            pts = [(v, rec["readings"][idx]["abs_delta_vs_exact"]) for v, rec in zip(values, records)]
            pts = [(v, d) for v, d in pts if v > 0 and d is not None and d > 0]
            slope = _fit_slope([math.log(v) for v, _ in pts], [math.log(d) for _, d in pts])
            kind = "loglog_slope_abs_delta"
        elif param == "l":
            slope = _fit_slope(values, [rec["readings"][idx]["value"] for rec in records])
            kind = "linear_slope_value"
        else:
            continue
        if slope is not None:
            fits.append({"meter": meter_tag, "method": method, "kind": kind, "value": slope})
    return fits


def scan_scenario(sc: Scenario, param: str, values: list) -> dict:
    if not values:
        raise ParseError("values", "empty scan")
    if param == "l":
        if any(int(v) != v for v in values):
            raise ParseError("values", "l values must be integers")
        values = [int(v) for v in values]
    variants = [sc.with_param(param, v) for v in values]
    with ThreadPoolExecutor(max_workers=max_workers()) as pool:
        records = list(pool.map(run_scenario, variants))
    return {
        "schema_version": SCAN_SCHEMA,
        "param": param,
        "values": values,
        "rows": [{"param_value": v, "record": r} for v, r in zip(values, records)],
        "fits": scan_fits(param, values, records),
    }


def _parse_values(text: str) -> list[float]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ParseError("values", "empty scan")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ParseError("values", str(exc)) from None


def cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    record = run_scenario(sc)
    if args.format == "json":
        write_json(record, args.out)
    else:
        write_csv(csv_rows(record), args.out)
    if args.dump:
        from .dynamics import evolve_exact

        state = evolve_exact(sc.a, sc.b, sc.sel, make_lg_mode(sc.pointer), sc.coupling, rng=sc.seed)
        dump_wavefunction(state.wavefunction, args.dump)
    return EXIT_OK


def cmd_scan(args) -> int:
    sc = load_scenario(args.scenario)
    result = scan_scenario(sc, args.param, _parse_values(args.values))
    fmt = args.format or ("json" if str(args.out).endswith(".json") else "csv")
    if fmt == "json":
        write_json(result, args.out)
    else:
        rows = []
        for row in result["rows"]:
            rows.extend(csv_rows(row["record"], result["param"], row["param_value"]))
        for fit in result["fits"]:
            rows.append([result["param"], fit["kind"], fit["meter"], fit["method"], repr(fit["value"]), "", ""])
        write_csv(rows, args.out)
    for fit in result["fits"]:
        print(f"{fit['meter']:>8} {fit['method']:<12} {fit['kind']}: {fit['value']:.4f}")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validation import CRITERIA, run_validation

    for cid in args.filter or ():
        if cid.upper() not in CRITERIA:
            raise ParseError("--filter", f"unknown criterion {cid!r}; expected one of {list(CRITERIA)}")
    results = run_validation(args.filter, fixtures_dir=args.fixtures)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weakpointer", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evaluate every readout of a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--dump", help="also write the exact post-selected pointer state as text")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("scan", help="sweep one parameter of a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--param", required=True, choices=("g", "l", "sigma", "g_a", "g_b"))
    p.add_argument("--values", required=True, help="comma-separated list")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("json", "csv"))
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("validate", help="run the acceptance criteria on built-in fixtures")
    p.add_argument("--filter", action="append", help="criterion id, e.g. A3 (repeatable)")
    p.add_argument("--fixtures", help="directory holding the fixture scenarios")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except WeakPointerError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
