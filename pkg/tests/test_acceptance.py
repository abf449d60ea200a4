"""Acceptance criteria 1 to 13, each run once at its stated tolerance.

Every criterion prints one PASS/FAIL line (collected again in the terminal
summary). The reports from the first pass are cached so that the
determinism criterion only pays for the reruns.
"""

import csv
import io
import math

import pytest

from conftest import ACCEPTANCE_LINES
from spectralforge.verify import CRITERIA

SEED = 0
# wall-clock budgets in seconds; criterion 2 states none
BUDGET = {1: 10, 3: 30, 4: 600, 5: 600, 6: 300, 7: 120, 8: 120, 9: 300, 10: 120, 11: 900, 12: 60}
EDGE3 = 2 * math.sqrt(2)

_first_runs = {}


def _record(label, ok, note=""):
    line = f"criterion {label}: {'PASS' if ok else 'FAIL'}{'  ' + note if note else ''}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def _run(i):
    if i not in _first_runs:
        _first_runs[i] = CRITERIA[i](seed=SEED)
    return _first_runs[i]


def _trace_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def _num(x):
    return math.inf if x == "inf" else -math.inf if x == "-inf" else float(x)


def _recheck_swap_trace(rep, mode, target):
    """Rederive drift, target error and girth floor from the emitted trace alone."""
    rows = _trace_rows(rep.details["trace_csv"])
    lam = [_num(r["eigenvalue"]) for r in rows]
    gir = [_num(r["girth"]) for r in rows]
    drifts = []
    for a in range(len(rows) - 1):
        drift = abs(lam[a + 1] - lam[a])
        drifts.append(drift)
        outside = max(lam[a], lam[a + 1]) > EDGE3 if mode == "lambda2" else min(lam[a], lam[a + 1]) < -EDGE3
        if outside:
            r = (int(min(gir[a], gir[a + 1])) + 1) // 2
            assert drift <= 8 / r + 1e-9, f"step {a + 1}: drift {drift} > 8/{r}"
    assert abs(rep.details["achieved"] - target) <= max(drifts)
    assert min(gir) >= 6
    crossing_counts = [int(r["counter"]) for r in rows]
    assert all(b - a == -2 for a, b in zip(crossing_counts, crossing_counts[1:]))
    return rows


def _extra_checks(i, rep):
    certs = {c.name: c for c in rep.certificates}
    if i == 4:
        _recheck_swap_trace(rep, "lambda2", 2.95)
        assert certs["terminal_rayleigh"].bound == pytest.approx(3 - 4 / math.sqrt(1000))
    elif i == 5:
        rows = _recheck_swap_trace(rep, "lambda_min", -2.95)
        assert all(r["odd_girth"] != "" for r in rows)
        assert certs["terminal_rayleigh"].bound == pytest.approx(-3 + 8 / math.sqrt(1000))
    elif i == 6:
        rows = _trace_rows(rep.details["trace_csv"])
        lam1 = [float(r["eigenvalue"]) for r in rows]
        assert all(b <= a + 1e-12 for a, b in zip(lam1, lam1[1:]))
        assert max(float(r["lambda2"]) for r in rows) <= EDGE3 + 1e-6
        assert abs(rep.details["achieved"] - 2.9) <= float(rows[-1]["drop_bound"]) + 1e-12
    elif i == 7:
        counts = [c for c in rep.certificates if c.name.endswith(".count")]
        assert len(counts) == 30
    elif i == 8:
        assert len(rep.certificates) == 20
    elif i == 9:
        d, R, n1 = 3, 4, rep.details["gadget_vertices"]
        bound = max(math.sqrt(d - 1) / R, 2 * d ** 3 * n1 / 3000)
        assert abs(rep.details["lambda2"] - rep.details["mu1"]) <= bound
        assert EDGE3 < rep.details["mu1"] < 3
    elif i == 11:
        assert rep.details["eigenvalue"] > EDGE3
        assert rep.details["mass"] >= 0.7
    elif i == 12:
        assert len([c for c in rep.certificates if c.name.endswith("min_slack")]) >= 1


@pytest.mark.parametrize("i", list(range(1, 13)))
def test_criterion(i):
    rep = _run(i)
    failed = [c.name for c in rep.certificates if not c.passed]
    budget = BUDGET.get(i)
    in_time = budget is None or rep.wall_time <= budget
    ok = rep.passed and in_time
    note = f"{rep.wall_time:.1f}s"
    if budget is not None:
        note += f" (budget {budget}s)"
    if failed:
        note += f"  failed: {', '.join(failed)}"
    if rep.error:
        note += f"  error: {rep.error}"
    try:
        _extra_checks(i, rep)
    except AssertionError as exc:
        ok = False
        note += f"  independent recheck: {exc}"
        _record(i, ok, note)
        raise
    _record(i, ok, note)
    assert rep.error is None, rep.error
    assert not failed, failed
    assert in_time, f"took {rep.wall_time:.1f}s, budget {budget}s"


def test_criterion_13_determinism():
    mismatched = []
    for i in range(1, 13):
        first = _run(i).to_json()
        again = CRITERIA[i](seed=SEED).to_json()
        if first != again:
            mismatched.append(i)
    _record(13, not mismatched, f"reran criteria 1-12; mismatched: {mismatched or 'none'}")
    assert not mismatched
