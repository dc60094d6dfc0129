"""Serialization of simulation results into JSON-ready reports."""

from __future__ import annotations

import csv
import io
import json

from .fock import PhotonicState, QubitSpec
from .switch_unit import PortContent

VOLATILE_KEYS = ("duration_s", "version")


def complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def state_triples(state: PhotonicState) -> list[list]:
    """``[configuration, re, im]`` per term in canonical configuration order."""
    return [[str(cfg), float(a.real), float(a.imag)] for cfg, a in state.items()]


def qubit_json(q: QubitSpec) -> dict:
    return {"beta_h": complex_pair(q.beta_h), "beta_v": complex_pair(q.beta_v)}


def port_json(p: PortContent | None):
    return None if p is None else p.describe()


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def strip_volatile(report: dict) -> dict:
    return {k: v for k, v in report.items() if k not in VOLATILE_KEYS}


def _flatten(prefix: str, value, rows: list[tuple[str, object]]) -> None:
    if isinstance(value, dict):
        for k in sorted(value):
            _flatten(f"{prefix}.{k}" if prefix else str(k), value[k], rows)
    elif isinstance(value, (int, float, str, bool)) or value is None:
        rows.append((prefix, value))


def to_csv(report: dict) -> str:
    """Scalar entries of ``report["results"]`` as ``key,value`` rows.

    Nested states and lists are left to the JSON format.
    """
    rows: list[tuple[str, object]] = []
    _flatten("", report.get("results", {}), rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    writer.writerows(rows)
    return buf.getvalue()
