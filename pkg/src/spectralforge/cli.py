"""``forge``: command-line front end for the constructions and the verification suites.

Every command writes ``report.json`` (plus ``timing.json``) into ``--out``,
and most also write ``graph.txt`` and ``trace.csv``. Parameters come from
``--config`` (a JSON object) and are overridden by explicit flags. Exit
status: 0 when every certificate passes, 1 on a failed certificate or a
pipeline error, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import verify
from .augment import AugmentationSpec, augment, augment_s, bulk_edge, secular_solve
from .construct.deletion import deletion_interpolate
from .construct.gadgets import bipartite_gadget, gadget_search_lift, gadget_search_simple
from .construct.interpolate import interpolate_lambda2, interpolate_lambda_min
from .construct.localized import localized_graph
from .construct.patching import patch, plan_patch
from .graph_core import GenerationPolicy, girth, odd_girth, random_regular
from .io import atomic_write, derive_seed, format_graph, read_graph
from .report import Report, check
from .spectral import SolverConfig, spectrum

REQUIRED = object()


class UsageError(Exception):
    pass


class StageFailure(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage


def _emit_graph(out: Path, rep: Report, g, name: str = "graph.txt") -> None:
    atomic_write(out / name, format_graph(g))
    rep.artifacts.append(name)


def _emit_trace(out: Path, rep: Report, trace) -> None:
    atomic_write(out / "trace.csv", trace.to_csv())
    rep.artifacts.append("trace.csv")


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (UsageError, StageFailure):
        raise
    except Exception as exc:
        raise StageFailure(name, exc) from exc


# ----------------------------------------------------------------- handlers
def cmd_gen(p, seed, out, rep):
    policy = GenerationPolicy(seed=derive_seed(seed, "gen"), min_girth=p["min_girth"],
                              lambda2_ceiling=p["lambda2_ceiling"], max_retries=p["max_retries"])
    g = _stage("generate", random_regular, p["n"], p["d"], policy, bipartite=p["bipartite"])
    _emit_graph(out, rep, g)
    rep.add(check("regular", g.is_regular(p["d"]), True, "=="))
    if p["min_girth"] is not None:
        rep.add(check("girth", girth(g), p["min_girth"], ">="))
    rep.details = {"n": g.n, "edges": g.edge_count, "girth": girth(g)}


def cmd_girth(p, seed, out, rep):
    g = _stage("read", read_graph, p["graph"])
    rep.details = {"girth": girth(g), "odd_girth": odd_girth(g)}


def cmd_spectrum(p, seed, out, rep):
    g = _stage("read", read_graph, p["graph"])
    k_top = g.n - p["k_bottom"] if p["k_top"] is None else p["k_top"]
    cfg = SolverConfig(tol=p["tol"], method=p["method"], seed=derive_seed(seed, "spectrum") % 2**32)
    sp = _stage("eigensolve", spectrum, g, k_top, p["k_bottom"], cfg)
    rep.add(check("max_residual", float(np.max(sp.residuals, initial=0.0)), p["tol"], "<="))
    rep.details = {"eigenvalues": sp.eigenvalues, "method": sp.method}


def _swap(p, seed, out, rep, fn):
    policy = GenerationPolicy(seed=derive_seed(seed, "start"), min_girth=p["girth_floor"],
                              lambda2_ceiling=bulk_edge(p["d"]) + p["ceiling_margin"])
    run = _stage("interpolate", fn, p["n"], p["d"], p["target"], policy=policy,
                 seed=derive_seed(seed, "bisect") % 2**32)
    _emit_graph(out, rep, run.graph)
    _emit_trace(out, rep, run.trace)
    rows = verify.drift_rows(run.trace, p["d"], "lambda2" if fn is interpolate_lambda2 else "lambda_min")
    worst = max((r["drift"] - r["bound"] for r in rows if r["applicable"]), default=-math.inf)
    rep.add(check("drift_excess_over_bound", worst, 0.0, "<=", 1e-9))
    if p["target"] is None:
        c = run.certificates
        rep.add(check("terminal_rayleigh", c["rayleigh"], c["bound"],
                      ">=" if fn is interpolate_lambda2 else "<="))
    rep.details = {"target": p["target"], "achieved": run.trace.achieved,
                   "steps": len(run.trace.steps) - 1, "stop_reason": run.trace.stop_reason,
                   "certificates": run.certificates}


def cmd_interp_l2(p, seed, out, rep):
    _swap(p, seed, out, rep, interpolate_lambda2)


def cmd_interp_lmin(p, seed, out, rep):
    _swap(p, seed, out, rep, interpolate_lambda_min)


def cmd_delete_interp(p, seed, out, rep):
    run = _stage("delete", deletion_interpolate, p["n"], p["d"], p["target"],
                 connected=p["connected"], seed=derive_seed(seed, "start"), ell_max=p["ell_max"])
    _emit_graph(out, rep, run.graph)
    _emit_trace(out, rep, run.trace)
    c = run.certificates
    rep.add(check("error_within_step_bound", c["error"], c["crossing_step_drop_bound"], "<=", 1e-12))
    rep.add(check("monotone_lambda1", c["monotone_lambda1"], True, "=="))
    if p["connected"]:
        rep.add(check("connected", c["connected"], True, "=="))
    rep.details = {"achieved": run.trace.achieved, "certificates": c}


def cmd_augment(p, seed, out, rep):
    g = _stage("read", read_graph, p["graph"])
    if p["s"] is None:
        aug = _stage("augment", augment, g, p["d"], p["levels"])
    else:
        aug = _stage("augment", augment_s, g, AugmentationSpec(p["d"], p["s"], p["levels"]))
    _emit_graph(out, rep, aug.graph)
    atomic_write(out / "augment.json", aug.to_sidecar())
    rep.artifacts.append("augment.json")
    rep.add(check("max_degree", aug.graph.max_degree, p["d"], "<="))
    rep.details = {"vertices": aug.graph.n, "leaves": aug.leaf_count}


def cmd_secular(p, seed, out, rep):
    lam = secular_solve(p["mu1"], p["d"], p["s"], p["levels"])
    if p["s"] == 0 and p["mu1"] > bulk_edge(p["d"]):
        rep.add(check("echo", lam, p["mu1"], "=="))
    rep.details = {"lambda": lam, "bulk_edge": bulk_edge(p["d"])}


def cmd_patch(p, seed, out, rep):
    host = _stage("read", read_graph, p["host"])
    gadgets = [_stage("read", read_graph, f) for f in p["gadget"]]
    d = p["d"] or host.max_degree
    plan = _stage("select", plan_patch, host, gadgets, p["radius"], d)
    res = _stage("patch", patch, plan, certify=True)
    _emit_graph(out, rep, res.graph)
    c = res.certificates
    rep.add(check("regular", c["regular"], True, "=="))
    rep.add(check("pinning", max(r["pin_error"] for r in c["rows"]), c["pinning_bound"], "<=", 1e-9))
    rep.add(check("patch_lower_bound", c["lower_ok"], True, "=="))
    rep.details = {"patch_vertices": plan.patch_vertices, "certificates": c}


def cmd_gadget(p, seed, out, rep):
    s = derive_seed(seed, f"gadget/{p['mode']}")
    if p["mode"] == "simple":
        res = _stage("search", gadget_search_simple, p["d"], p["target"], p["eps"], seed=s)
        rep.add(check("within_2eps", res.certificates["error"], 2 * p["eps"], "<=", 1e-12))
    elif p["mode"] == "lift":
        res = _stage("search", gadget_search_lift, p["d"], p["target"], p["eps"], seed=s % 2**32,
                     N=p["lift_n"])
        rep.add(check("within_eps", res.certificates["error"], p["eps"], "<=", 1e-12))
        rep.add(check("lambda2", res.lambda2, res.certificates["lambda2_bound"], "<=", 1e-9))
    else:
        res = _stage("search", bipartite_gadget, p["d"], p["eps"], p["eps2"] or p["eps"],
                     n0=p["n0"], seed=s)
        rep.add(check("in_window", res.lambda1, res.certificates["window"], "in"))
    _emit_graph(out, rep, res.core)
    _emit_trace(out, rep, res.trace)
    rep.details = {"lambda1": res.lambda1, "depth": res.depth, "certificates": res.certificates}


def cmd_localized(p, seed, out, rep):
    res = _stage("localized", localized_graph, p["d"], p["beta"], p["C"],
                 seed=derive_seed(seed, "localized"), n0=p["n0"], levels=p["levels"],
                 host_cap=p["host_cap"])
    _emit_graph(out, rep, res.graph)
    c = res.certificates
    rep.add(check("above_edge", res.eigenvalue, bulk_edge(p["d"]), ">"))
    rep.add(check("mass", res.mass, 1 - p["beta"], ">="))
    rep.add(check("split_error", c["split_error"], 1e-6, "<="))
    rep.details = {k: v for k, v in c.items() if k != "gadget"}


def _run_suite(args):
    name, seeds, seed = args
    return name, verify.SUITES[name](seeds, seed)


def cmd_verify(p, seed, out, rep):
    names = list(verify.SUITES) if p["suite"] == "all" else [p["suite"]]
    for name in names:
        if name not in verify.SUITES:
            raise UsageError(f"unknown suite {name!r}; choose from {', '.join(verify.SUITES)} or all")
    jobs = [(name, p["seeds"], seed) for name in names]
    if p["jobs"] > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(p["jobs"]) as pool:
            results = list(pool.map(_run_suite, jobs))
    else:
        results = [_run_suite(j) for j in jobs]
    for name, sub in results:
        for c in sub.certificates:
            c.name = f"{name}.{c.name}"
            rep.add(c)
    rep.details = {"suites": names}


# parameter tables: name -> (type, default); REQUIRED marks mandatory ones
COMMANDS = {
    "gen": (cmd_gen, {"n": (int, REQUIRED), "d": (int, REQUIRED), "min_girth": (int, None),
                      "lambda2_ceiling": (float, None), "max_retries": (int, 1000),
                      "bipartite": (bool, False)}),
    "girth": (cmd_girth, {"graph": (str, REQUIRED)}),
    "spectrum": (cmd_spectrum, {"graph": (str, REQUIRED), "k_top": (int, None), "k_bottom": (int, 0),
                                "method": (str, "auto"), "tol": (float, 1e-9)}),
    "interp-l2": (cmd_interp_l2, {"n": (int, REQUIRED), "d": (int, REQUIRED), "target": (float, None),
                                  "girth_floor": (int, 6), "ceiling_margin": (float, 0.1)}),
    "interp-lmin": (cmd_interp_lmin, {"n": (int, REQUIRED), "d": (int, REQUIRED), "target": (float, None),
                                      "girth_floor": (int, 6), "ceiling_margin": (float, 0.1)}),
    "delete-interp": (cmd_delete_interp, {"n": (int, REQUIRED), "d": (int, REQUIRED),
                                          "target": (float, REQUIRED), "connected": (bool, False),
                                          "ell_max": (int, 64)}),
    "augment": (cmd_augment, {"graph": (str, REQUIRED), "d": (int, REQUIRED), "levels": (int, 1),
                              "s": (int, None)}),
    "secular": (cmd_secular, {"mu1": (float, REQUIRED), "d": (int, REQUIRED), "s": (int, REQUIRED),
                              "levels": (int, REQUIRED)}),
    "patch": (cmd_patch, {"host": (str, REQUIRED), "gadget": (list, REQUIRED), "radius": (int, 1),
                          "d": (int, None)}),
    "gadget": (cmd_gadget, {"mode": (str, "simple"), "d": (int, REQUIRED), "target": (float, None),
                            "eps": (float, REQUIRED), "eps2": (float, None), "n0": (int, 200),
                            "lift_n": (int, 40)}),
    "localized": (cmd_localized, {"d": (int, 3), "beta": (float, 0.3), "C": (float, 4.0),
                                  "n0": (int, 200), "levels": (int, 5), "host_cap": (int, 10000)}),
    "verify": (cmd_verify, {"suite": (str, "all"), "seeds": (int, 10), "jobs": (int, 1)}),
}
CHOICES = {"method": ("auto", "dense", "lanczos"), "mode": ("simple", "lift", "bipartite")}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="forge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, params) in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON file with parameters (flags override it)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None, help="output directory (default: current)")
        if "jobs" not in params:
            sp.add_argument("--jobs", type=int, default=None)
        for key, (typ, _) in params.items():
            flag = "--" + key.replace("_", "-")
            if typ is bool:
                sp.add_argument(flag, dest=key, action="store_const", const=True, default=None)
            elif typ is list:
                sp.add_argument(flag, dest=key, action="append", default=None)
            else:
                sp.add_argument(flag, dest=key, type=typ, default=None, choices=CHOICES.get(key))
    return parser


def resolve(command: str, ns: argparse.Namespace) -> tuple[dict, int, Path]:
    """Merge config file, flags and defaults; raise :class:`UsageError` on bad input."""
    _, params = COMMANDS[command]
    cfg: dict = {}
    if ns.config:
        try:
            cfg = json.loads(Path(ns.config).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    unknown = set(cfg) - set(params) - {"seed", "out", "jobs", "command"}
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {', '.join(sorted(unknown))}")
    merged = {}
    for key, (typ, default) in params.items():
        val = getattr(ns, key, None)
        if val is None:
            val = cfg.get(key, default)
        if val is REQUIRED:
            raise UsageError(f"{command} needs --{key.replace('_', '-')}")
        if val is not None and typ is not list:
            try:
                val = typ(val)
            except (TypeError, ValueError) as exc:
                raise UsageError(f"bad value for {key}: {val!r}") from exc
        if key in CHOICES and val not in CHOICES[key]:
            raise UsageError(f"{key} must be one of {', '.join(CHOICES[key])}")
        merged[key] = val
    seed = ns.seed if ns.seed is not None else int(cfg.get("seed", 0))
    if seed < 0 or seed >= 2 ** 64:
        raise UsageError("seed must be an unsigned 64-bit integer")
    out = Path(ns.out if ns.out is not None else cfg.get("out", "."))
    _validate(command, merged)
    return merged, seed, out


def _validate(command: str, p: dict) -> None:
    def need(cond, msg):
        if not cond:
            raise UsageError(msg)

    if "d" in p and p["d"] is not None:
        need(p["d"] >= 2, "d must be at least 2")
    if command in ("gen", "interp-l2", "interp-lmin", "delete-interp"):
        need(p["n"] > p["d"], "n must exceed d")
    if command in ("interp-l2", "interp-lmin", "delete-interp"):
        need(p["n"] % 2 == 0, "n must be even")
    if command == "gadget":
        need(p["eps"] > 0, "eps must be positive")
        if p["mode"] != "bipartite":
            need(p["target"] is not None, "gadget modes simple and lift need --target")
    if command == "secular":
        need(p["s"] >= 0 and p["levels"] >= 0, "s and levels must be non-negative")
    if command == "localized":
        need(p["C"] >= 4, "C must be at least 4")
    if command == "verify":
        need(p["seeds"] >= 1 and p["jobs"] >= 1, "seeds and jobs must be positive")


def run(command: str, params: dict, seed: int, out: Path) -> Report:
    handler, _ = COMMANDS[command]
    rep = Report({"command": command, "seed": seed, **params})
    t = time.perf_counter()
    try:
        handler(params, seed, out, rep)
    except StageFailure as exc:
        rep.error = str(exc)
    rep.wall_time = time.perf_counter() - t
    rep.write(out)
    return rep


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        params, seed, out = resolve(ns.command, ns)
        rep = run(ns.command, params, seed, out)
    except UsageError as exc:
        print(f"forge {ns.command}: {exc}", file=sys.stderr)
        return 2
    for c in rep.certificates:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value} {c.relation} {c.bound}")
    if rep.error:
        print(f"error {rep.error}", file=sys.stderr)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
