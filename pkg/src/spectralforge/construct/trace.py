"""Per-step logs of construction sequences."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field


@dataclass
class TraceStep:
    step: int
    surgery: str
    eigenvalue: float
    girth: float
    counter: int
    extra: dict = field(default_factory=dict)


@dataclass
class InterpolationTrace:
    steps: list[TraceStep] = field(default_factory=list)
    target: float | None = None
    achieved: float = math.nan
    best_step: int = 0
    stop_reason: str = ""

    def append(self, *args, **extra) -> TraceStep:
        rec = TraceStep(*args, extra=extra)
        self.steps.append(rec)
        return rec

    @property
    def eigenvalues(self) -> list[float]:
        return [s.eigenvalue for s in self.steps]

    def column(self, key: str) -> list:
        return [s.extra.get(key) for s in self.steps]

    def to_csv(self) -> str:
        """CSV with columns step, surgery, eigenvalue, girth, counter and any extras."""
        extras: list[str] = []
        for s in self.steps:
            for k in s.extra:
                if k not in extras:
                    extras.append(k)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "surgery", "eigenvalue", "girth", "counter", *extras])
        for s in self.steps:
            w.writerow([s.step, s.surgery, _fmt(s.eigenvalue), _fmt(s.girth), s.counter,
                        *(_fmt(s.extra.get(k)) for k in extras)])
        return buf.getvalue()


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(float(x))
    return str(x)
