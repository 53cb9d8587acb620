"""Verification reports and their line-delimited JSON form.

Numbers are written as decimal strings (``repr`` of the binary64 value,
which round-trips exactly); complex numbers as [re, im] string pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

SCHEMA_VERSION = "1.0"

SCHEMA = {
    "schema_version": SCHEMA_VERSION,
    "record": "one JSON object per line",
    "fields": {
        "schema_version": "string",
        "identity_id": "string, registered identity name",
        "sample": "integer, sample index within the run",
        "seed": "integer, seed of this sample",
        "params": "object, parameter name -> decimal string, [re, im] pair, or list of those",
        "lhs": "[re, im] decimal strings, or null if an error was raised",
        "rhs": "[re, im] decimal strings, or null",
        "abs_err": "decimal string, or null",
        "rel_err": "decimal string, or null",
        "error_estimate": "decimal string (quadrature two-grid estimate), or null",
        "threshold": "decimal string, the rel_err pass threshold",
        "grid": "object: {n, N} for quadrature, {lambda_box} for sums, {} otherwise",
        "truncation": "object: {tolerance, K}",
        "elapsed_ms": "integer; 0 unless timing was requested",
        "pass": "boolean: rel_err <= threshold and no error raised",
        "conjecture_flag": "boolean, true only for probes of the conjectural (C, A) kernel",
        "error": "null, or {type, message} of the raised error",
        "notes": "list of strings",
    },
}


def dec(x: float) -> str:
    return repr(float(x))


def cplx(z: complex) -> list[str]:
    z = complex(z)
    return [dec(z.real), dec(z.imag)]


def encode(value: Any):
    """Parameter values to decimal strings, recursively."""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return dec(value)
    if isinstance(value, (complex, np.complexfloating)):
        return cplx(value)
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    if value is None:
        return None
    return str(value)


@dataclass
class VerificationReport:
    identity_id: str
    params: dict
    lhs: complex | None
    rhs: complex | None
    threshold: float
    grid: dict = field(default_factory=dict)
    truncation: dict = field(default_factory=dict)
    error_estimate: float | None = None
    elapsed_ms: int = 0
    conjecture_flag: bool = False
    error: tuple[str, str] | None = None
    sample: int = 0
    seed: int = 0
    notes: list = field(default_factory=list)
    # for checks whose natural output is a residual rather than two sides
    residual: float | None = None

    @property
    def abs_err(self) -> float | None:
        if self.residual is not None:
            return self.residual
        if self.lhs is None or self.rhs is None:
            return None
        return abs(self.lhs - self.rhs)

    @property
    def rel_err(self) -> float | None:
        if self.residual is not None:
            return self.residual
        if self.lhs is None or self.rhs is None:
            return None
        return abs(self.lhs - self.rhs) / max(abs(self.rhs), 1e-300)

    @property
    def passed(self) -> bool:
        rel = self.rel_err
        return self.error is None and rel is not None and bool(rel <= self.threshold)

    def to_dict(self) -> dict:
        opt = lambda v: None if v is None else dec(v)  # noqa: E731
        return {
            "schema_version": SCHEMA_VERSION,
            "identity_id": self.identity_id,
            "sample": self.sample,
            "seed": self.seed,
            "params": encode(self.params),
            "lhs": None if self.lhs is None else cplx(self.lhs),
            "rhs": None if self.rhs is None else cplx(self.rhs),
            "abs_err": opt(self.abs_err),
            "rel_err": opt(self.rel_err),
            "error_estimate": opt(self.error_estimate),
            "threshold": dec(self.threshold),
            "grid": encode(self.grid),
            "truncation": encode(self.truncation),
            "elapsed_ms": int(self.elapsed_ms),
            "pass": self.passed,
            "conjecture_flag": bool(self.conjecture_flag),
            "error": None if self.error is None else {"type": self.error[0], "message": self.error[1]},
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
