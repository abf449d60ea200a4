"""Certificates and run reports.

A report is a JSON document with the run's configuration, its named
certificates (measured value, bound, verdict) and the artifacts written.
Wall-clock time goes to a separate ``timing.json`` so that the report of a
rerun is byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .io import atomic_write


@dataclass
class Certificate:
    name: str
    value: object
    bound: object
    passed: bool
    relation: str = "<="  # how value compares to bound when the check passes

    def as_dict(self) -> dict:
        return {"value": self.value, "bound": self.bound, "relation": self.relation,
                "passed": bool(self.passed)}


def check(name: str, value, bound, relation: str = "<=", tol: float = 0.0) -> Certificate:
    """Certificate for ``value <relation> bound`` with an absolute tolerance."""
    if relation == "<=":
        ok = value <= bound + tol
    elif relation == ">=":
        ok = value >= bound - tol
    elif relation == "<":
        ok = value < bound + tol
    elif relation == ">":
        ok = value > bound - tol
    elif relation == "==":
        ok = value == bound
    elif relation == "in":
        ok = bound[0] < value < bound[1]
    else:
        raise ValueError(f"unknown relation {relation!r}")
    return Certificate(name, value, bound, bool(ok), relation)


def plain(obj):
    """Recursively convert numpy scalars and arrays, tuples and non-finite floats to JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(x) for x in obj]
    if isinstance(obj, np.ndarray):
        return [plain(x) for x in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


@dataclass
class Report:
    config: dict
    certificates: list[Certificate] = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)
    wall_time: float = 0.0
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed for c in self.certificates)

    def add(self, cert: Certificate) -> Certificate:
        self.certificates.append(cert)
        return cert

    def to_json(self) -> str:
        data = {
            "config": self.config,
            "certificates": {c.name: c.as_dict() for c in self.certificates},
            "passed": self.passed,
            "artifacts": sorted(self.artifacts),
            "details": self.details,
        }
        if self.error is not None:
            data["error"] = self.error
        return json.dumps(plain(data), sort_keys=True, indent=2) + "\n"

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        if "report.json" not in self.artifacts:
            self.artifacts.append("report.json")
        path = atomic_write(out / "report.json", self.to_json())
        atomic_write(out / "timing.json", json.dumps({"wall_time": self.wall_time}) + "\n")
        return path
