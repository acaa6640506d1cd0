"""Scenario files (input) and result records (output).

Scenarios are JSON documents; every complex number is an explicit ``[re, im]``
pair and nothing is renormalized on load.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .algebra import Observable, SelectionPair, WeakValueSet
from .dynamics import PHASE_SPACE, TRANSLATION, CouplingSpec
from .errors import InvalidState, ParseError, WeakPointerError
from .pointer import PointerSpec
from .readout import MeterReading, ReadoutRequest

RESULT_SCHEMA = "weakpointer.result/1"
SCAN_SCHEMA = "weakpointer.scan/1"
CSV_COLUMNS = ["param", "param_value", "meter", "method", "value", "w", "abs_delta_vs_exact"]


@dataclass(frozen=True, eq=False)
class Scenario:
    a: Observable
    b: Observable
    sel: SelectionPair
    pointer: PointerSpec
    coupling: CouplingSpec
    readouts: tuple[ReadoutRequest, ...]
    document: dict
    seed: int

    def with_param(self, name: str, value) -> "Scenario":
        """Copy with one scan parameter replaced, re-validated through the parser."""
        doc = json.loads(json.dumps(self.document))
        if name in ("l", "sigma"):
            doc["pointer"][name] = value
        elif name in ("g", "g_a", "g_b"):
            if name not in doc["coupling"]:
                raise ParseError(f"coupling.{name}", f"not a parameter of {doc['coupling'].get('kind')}")
            doc["coupling"][name] = value
        else:
            raise ParseError("param", f"cannot scan {name!r}; expected one of g, l, sigma, g_a, g_b")
        return parse_scenario(doc)


def _complex(value, path: str) -> complex:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        raise ParseError(path, "expected a [re, im] pair of numbers")
    z = complex(float(value[0]), float(value[1]))
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ParseError(path, "non-finite entry")
    return z


def _vector(value, path: str, dim: int) -> np.ndarray:
    if not isinstance(value, list) or len(value) != dim:
        raise ParseError(path, f"expected a list of {dim} [re, im] pairs")
    return np.array([_complex(v, f"{path}[{i}]") for i, v in enumerate(value)])


def _matrix(value, path: str, dim: int) -> np.ndarray:
    if not isinstance(value, list) or len(value) != dim:
        raise ParseError(path, f"expected {dim} rows")
    return np.array([_vector(row, f"{path}[{i}]", dim) for i, row in enumerate(value)])


def _get(doc: dict, key: str, path: str):
    if not isinstance(doc, dict):
        raise ParseError(path, "expected an object")
    if key not in doc:
        raise ParseError(f"{path}.{key}" if path else key, "missing field")
    return doc[key]


def _number(value, path: str, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(path, "expected a number")
    if integer:
        if int(value) != value:
            raise ParseError(path, "expected an integer")
        return int(value)
    if not math.isfinite(value):
        raise ParseError(path, "non-finite value")
    return float(value)


def scenario_seed(document: dict) -> int:
    canonical = json.dumps(document, sort_keys=True, separators=(",", ":"))
    return int.from_bytes(hashlib.sha256(canonical.encode()).digest()[:8], "big")


def parse_scenario(doc: Any) -> Scenario:
    if not isinstance(doc, dict):
        raise ParseError("<root>", "expected a JSON object")
    system = _get(doc, "system", "")
    dim = _number(_get(system, "dim", "system"), "system.dim", integer=True)
    if dim < 2:
        raise ParseError("system.dim", "must be at least 2")
    observables = {}
    for key in ("A", "B"):
        m = _matrix(_get(system, key, "system"), f"system.{key}", dim)
        try:
            observables[key] = Observable(m)
        except InvalidState as exc:
            raise ParseError(f"system.{key}", str(exc)) from None
    pre = _vector(_get(system, "pre", "system"), "system.pre", dim)
    post = _vector(_get(system, "post", "system"), "system.post", dim)
    for name, v in (("pre", pre), ("post", post)):
        n = float(np.linalg.norm(v))
        if abs(n - 1.0) > 1e-12:
            raise ParseError(f"system.{name}", f"state is not unit-norm (|v| = {n!r}); no implicit normalization")
    sel = SelectionPair(pre, post)

    p = _get(doc, "pointer", "")
    try:
        pointer = PointerSpec(
            l=_number(_get(p, "l", "pointer"), "pointer.l", integer=True),
            sigma=_number(_get(p, "sigma", "pointer"), "pointer.sigma"),
            grid_points=_number(_get(p, "grid_points", "pointer"), "pointer.grid_points", integer=True),
            grid_extent=_number(_get(p, "grid_extent", "pointer"), "pointer.grid_extent"),
            dims=_number(_get(p, "dims", "pointer"), "pointer.dims", integer=True),
        )
    except InvalidState as exc:
        raise ParseError("pointer", str(exc)) from None

    c = _get(doc, "coupling", "")
    kind = _get(c, "kind", "coupling")
    if kind == TRANSLATION:
        extra = set(c) - {"kind", "g"}
        if extra:
            raise ParseError("coupling", f"unexpected fields for {kind}: {sorted(extra)}")
        coupling = CouplingSpec.translation(_number(_get(c, "g", "coupling"), "coupling.g"))
    elif kind == PHASE_SPACE:
        extra = set(c) - {"kind", "g_a", "g_b"}
        if extra:
            raise ParseError("coupling", f"unexpected fields for {kind}: {sorted(extra)}")
        coupling = CouplingSpec.phase_space(
            _number(_get(c, "g_a", "coupling"), "coupling.g_a"),
            _number(_get(c, "g_b", "coupling"), "coupling.g_b"),
        )
    else:
        raise ParseError("coupling.kind", f"expected {TRANSLATION} or {PHASE_SPACE}, got {kind!r}")

    raw_readouts = doc.get("readouts", [])
    if not isinstance(raw_readouts, list):
        raise ParseError("readouts", "expected a list")
    readouts = []
    for i, r in enumerate(raw_readouts):
        path = f"readouts[{i}]"
        norm_flag = r.get("normalize_closed_form") if isinstance(r, dict) else None
        if norm_flag is not None and not isinstance(norm_flag, bool):
            raise ParseError(f"{path}.normalize_closed_form", "expected true, false or null")
        try:
            readouts.append(
                ReadoutRequest(
                    meter=_get(r, "meter", path),
                    method=r.get("method", "Exact"),
                    normalize_closed_form=r.get("normalize_closed_form"),
                )
            )
        except InvalidState as exc:
            raise ParseError(f"{path}.meter", str(exc)) from None
        except ParseError:
            raise
        except WeakPointerError as exc:
            raise ParseError(path, str(exc)) from None
    return Scenario(observables["A"], observables["B"], sel, pointer, coupling, tuple(readouts), doc,
                    scenario_seed(doc))


def load_scenario(path) -> Scenario:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from None
    return parse_scenario(doc)


# --- writing scenarios -------------------------------------------------------------------


def _pair(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def scenario_document(a, b, pre, post, pointer: PointerSpec, coupling: CouplingSpec, readouts=()) -> dict:
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    return {
        "system": {
            "dim": int(a.shape[0]),
            "A": [[_pair(z) for z in row] for row in a],
            "B": [[_pair(z) for z in row] for row in b],
            "pre": [_pair(z) for z in pre],
            "post": [_pair(z) for z in post],
        },
        "pointer": {
            "dims": pointer.dims,
            "l": pointer.l,
            "sigma": pointer.sigma,
            "grid_points": pointer.grid_points,
            "grid_extent": pointer.grid_extent,
        },
        "coupling": coupling.as_dict(),
        "readouts": [dict(r) for r in readouts],
    }


# --- results -----------------------------------------------------------------------------


def reading_record(req: ReadoutRequest, reading: MeterReading, delta: float | None) -> dict:
    return {
        "meter": req.meter.tag,
        "method": reading.method,
        "normalize_closed_form": req.normalize_closed_form,
        "value": reading.value,
        "w": reading.w,
        "abs_delta_vs_exact": delta,
        "meta": reading.meta,
    }


def result_record(scenario: Scenario, wv: WeakValueSet, readings: list[dict], tolerances: dict) -> dict:
    return {
        "schema_version": RESULT_SCHEMA,
        "scenario": scenario.document,
        "weak_values": {k: _pair(v) for k, v in wv.as_dict().items()},
        "readings": readings,
        "tolerances": tolerances,
    }


def check_finite(record: dict) -> None:
    for r in record["readings"]:
        for key in ("value", "w"):
            if not math.isfinite(r[key]):
                raise InvalidState(f"non-finite {key} for {r['meter']}/{r['method']}")


def write_json(obj: dict, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, allow_nan=False) + "\n")


def load_result(path) -> dict:
    return json.loads(Path(path).read_text())


def csv_rows(record: dict, param: str = "", param_value="") -> list[list]:
    rows = []
    for r in record["readings"]:
        delta = r["abs_delta_vs_exact"]
        rows.append([param, param_value, r["meter"], r["method"], repr(r["value"]), repr(r["w"]),
                     "" if delta is None else repr(delta)])
    return rows


def write_csv(rows: list[list], path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue())
