"""Command line entry point and config-driven experiment runner.

Exit status: 0 when every requested check passes, 2 when a check fails,
1 on input errors (printed as ``error [CODE]: message``).
"""

from __future__ import annotations

import argparse
import copy
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import platform
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .core import (FiniteMarkovModel, ModelError, NoMeasureError, NormKind, NormProfile, Observable,
                   center, midpoint_quadrature, norm_profile)
from .montecarlo import estimate_s4
from .oracle import exact_fourth_moments, path_enumeration_fourth_moment
from .spectral import theta_kappa
from .systems import MapSampler, StationarySampler, build_system, shift_observable
from .verify import (binomial_fourth_central, clt_check, empirical_tightness, hat_sweep, proof_ledger,
                     verify_bound)

SCHEMA_VERSION = 1
EXIT_PASS, EXIT_INPUT, EXIT_FAIL = 0, 1, 2


class SchemaError(ModelError):
    code = "E_SCHEMA"


# -- canonical output ------------------------------------------------------------

def plain(obj):
    """Convert numpy scalars, arrays, tuples and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, NormKind):
        return obj.value
    return obj


def canonical_json(obj) -> str:
    return json.dumps(plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def config_hash(cfg: dict) -> str:
    blob = json.dumps(plain(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def provenance(cfg: dict, seed) -> dict:
    return {"config_sha256": config_hash(cfg), "seed": seed, "schema": SCHEMA_VERSION,
            "versions": {"ergomoment": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                         "python": platform.python_version()}}


def write_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(float(r[c])) if isinstance(r[c], (float, np.floating)) else r[c] for c in columns])
    return buf.getvalue()


def emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- builders ----------------------------------------------------------------------

def load_json(path) -> dict:
    p = Path(path)
    if not p.exists():
        zoo = resources.files("ergomoment") / "zoo" / p.name
        if zoo.is_file():
            return json.loads(zoo.read_text())
        raise SchemaError(f"file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc


def build_observable(cfg: dict, system, *, centre: bool = True) -> Observable:
    """Observable from a config dict, centred against the system's stationary law.

    kinds: ``values``, ``hat``, ``indicator``, ``identity`` (declared
    ``sup`` and ``banach``), ``shift``. Centring uses the exact ``nu`` of a
    finite model, a declared ``mean`` (with ``note``), or a midpoint rule on
    the invariant density of an interval map.
    """
    kind = cfg.get("kind", "values")
    q = float(cfg.get("q", 2.0))
    if kind == "values":
        obs = Observable.from_values(cfg["values"], q=q, norm_kind=cfg.get("norm_kind", "sup"),
                                     banach_norm=cfg.get("banach_norm", cfg.get("banach")))
    elif kind == "hat":
        obs = Observable.hat(cfg["s"], cfg["t"], cfg["eps"], q=q)
    elif kind == "indicator":
        obs = Observable.indicator(cfg["s"], cfg["t"], q=q)
    elif kind == "identity":
        if "sup" not in cfg:
            raise SchemaError("identity observable needs a declared sup")
        obs = Observable(func=lambda x: np.asarray(x, dtype=float), q=q, sup_bound=float(cfg["sup"]),
                         banach_norm=float(cfg.get("banach", cfg["sup"])),
                         norm_kind=cfg.get("norm_kind", "sup"), spec=dict(cfg))
    elif kind == "shift":
        obs = shift_observable(cfg["coeffs"], cfg.get("symbols"), q=q, offset=float(cfg.get("offset", 0.0)))
    else:
        raise SchemaError(f"unknown observable kind {kind!r}")
    if not centre or cfg.get("center") is False:
        return obs
    if isinstance(system, FiniteMarkovModel):
        return center(obs, system)
    if "mean" in cfg:
        return center(obs, mean=float(cfg["mean"]), tol=float(cfg.get("mean_tol", 0.0)),
                      note=cfg.get("note", "declared in config"))
    if isinstance(system, MapSampler) and system.map.density is not None:
        quad = midpoint_quadrature(system.map.density, int(cfg.get("quad_cells", 2 ** 16)))
        return center(obs, quad)
    raise NoMeasureError("no measure: declare the stationary mean of the observable in the config")


def _profile_for(cfg: dict, obs: Observable, system) -> NormProfile:
    if "profile" in cfg:
        return NormProfile.declared(cfg.get("profile_note", "config"), **cfg["profile"])
    if isinstance(system, FiniteMarkovModel):
        return norm_profile(obs.on_states(system), system)
    if isinstance(system, MapSampler) and system.map.density is not None:
        return norm_profile(obs, midpoint_quadrature(system.map.density, int(cfg.get("quad_cells", 2 ** 16))))
    raise NoMeasureError("no measure: declare a norm profile for this system")


def _require_finite(system) -> FiniteMarkovModel:
    if not isinstance(system, FiniteMarkovModel):
        raise SchemaError("this check needs a finite-state system")
    return system


# -- checks ------------------------------------------------------------------------

def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def check_oracle_s4(c, system, obs, seed):
    model = _require_finite(system)
    ns = list(c["ns"])
    vals = exact_fourth_moments(model, obs, ns)
    rows = [{"n": n, "exact_S4": vals[n]} for n in ns]
    passed = True
    if "expect" in c:
        want = c["expect"]
        if want == "iid_rademacher":
            want = {n: 3 * n * n - 2 * n for n in ns}
        want = {int(k): float(v) for k, v in want.items()}
        errs = {n: _rel(vals[n], want[n]) for n in want}
        passed = max(errs.values()) <= float(c.get("rtol", 1e-9))
        for r in rows:
            if r["n"] in want:
                r["expected"] = want[r["n"]]
                r["rel_err"] = errs[r["n"]]
    return passed, {"rows": rows}, (rows, ["n", "exact_S4"])


def check_oracle_paths(c, system, obs, seed):
    model = _require_finite(system)
    rows = []
    for n in c["ns"]:
        a = exact_fourth_moments(model, obs, [n])[n]
        b = path_enumeration_fourth_moment(model, obs, n)
        rows.append({"n": n, "gap_expansion": a, "path_enumeration": b, "rel_err": _rel(a, b) if b else abs(a)})
    passed = max(r["rel_err"] for r in rows) <= float(c.get("rtol", 1e-12))
    return passed, {"rows": rows}, (rows, ["n", "gap_expansion", "path_enumeration", "rel_err"])


def check_spectral(c, system, obs, seed):
    model = _require_finite(system)
    cert = theta_kappa(model, c.get("norm", "sup"), horizon=int(c.get("horizon", 50)),
                       probes=[obs.table(model)] if obs is not None else None)
    res = {"certificate": cert.to_dict(include_probes=bool(c.get("include_probes", False)))}
    passed = True
    if "expect_theta" in c:
        res["theta_error"] = abs(cert.theta - float(c["expect_theta"]))
        passed = res["theta_error"] <= float(c.get("tol", 1e-10))
    return passed, res, None


def check_ulam_theta(c, system, obs, seed):
    from .spectral import subdominant_radius, ulam
    from .systems import beta_map, doubling_map, gauss_map

    name = c.get("map", "doubling")
    tmap = {"doubling": doubling_map, "gauss": gauss_map}.get(name)
    tmap = beta_map(c["beta"]) if name == "beta" else tmap()
    rows = []
    for k in c["cells"]:
        U = ulam(tmap, int(k))
        r, _ = subdominant_radius(U.P, U.nu)
        rows.append({"cells": int(k), "radius": r, "method": U.meta["ulam"]["method"]})
    radii = [r["radius"] for r in rows]
    spread = max(radii) - min(radii)
    return spread <= float(c.get("tol", 1e-6)), {"rows": rows, "spread": spread}, (rows, ["cells", "radius"])


def check_ledger(c, system, obs, seed):
    model = _require_finite(system)
    cutoff = int(c.get("cutoff", 20))
    cert = theta_kappa(model, c.get("norm", "sup"), horizon=max(int(c.get("horizon", cutoff)), cutoff, 2),
                       closure=(obs, cutoff))
    led = proof_ledger(model, obs, cert, cutoff)
    agg_ok = all(v.get("holds", True) for k, v in led.aggregates.items() if k.startswith("CASE"))
    res = led.to_dict(entries=bool(c.get("entries", True)))
    res["aggregates_hold"] = agg_ok
    rows = [e.to_dict() | {"i": e.gaps[0], "j": e.gaps[1], "k": e.gaps[2]} for e in led.entries]
    return led.sound and agg_ok and led.n0_check["holds"], res, \
        (rows, ["case", "i", "j", "k", "inequality", "lhs", "bound", "slack"])


def check_bound(c, system, obs, seed):
    mode = c.get("mode", "exact")
    ns = list(c["ns"])
    profile = None if isinstance(system, FiniteMarkovModel) else _profile_for(c, obs, system)
    summ = verify_bound(system, obs, ns, mode, profile=profile, reps=c.get("reps"), seed=seed)
    res = summ.to_dict()
    passed = all(math.isfinite(r.empirical_K) for r in summ.reports) and not summ.underpowered
    stab = c.get("stabilize")
    if stab:
        lo, hi = summ.running_max(int(stab["n_lo"])), summ.running_max(int(stab["n_hi"]))
        res["stabilize"] = {"max_lo": lo, "max_hi": hi, "rel_diff": _rel(hi, lo)}
        passed = passed and _rel(hi, lo) <= float(stab.get("rtol", 0.05))
    rows = [r.to_dict() for r in summ.reports]
    return passed, res, (rows, ["n", "lhs", "term1", "term2", "term3", "empirical_K"])


def check_hat_sweep(c, system, obs, seed):
    res = hat_sweep(c["eps"], int(c["n"]), int(c["reps"]), seed, interval=tuple(c.get("interval", (0.25, 0.75))),
                    cells=int(c.get("cells", 64)), quad_cells=int(c.get("quad_cells", 2 ** 18)))
    d = res.to_dict()
    passed = res.K_span < float(c.get("max_K_span", 10.0))
    if "min_norm_span" in c:
        passed = passed and res.norm_span >= float(c["min_norm_span"])
    rows = [{"eps": r["eps"], "banach": r["banach"], "lhs": r["lhs"], "lhs_stderr": r["lhs_stderr"],
             "term1": r["term1"], "term2": r["term2"], "term3": r["term3"], "empirical_K": r["empirical_K"]}
            for r in d["rows"]]
    return passed, d, (rows, list(rows[0]))


def check_clt(c, system, obs, seed):
    diag = clt_check(system, obs, int(c["n"]), int(c["reps"]), seed, sigma2=c.get("sigma2"),
                     thresholds=c.get("thresholds"))
    res = diag.to_dict()
    if "expect_sigma2" in c:
        res["sigma2_error"] = abs(diag.sigma2 - float(c["expect_sigma2"]))
    passed = diag.passed and res.get("sigma2_error", 0.0) <= float(c.get("sigma2_tol", 1e-9))
    return passed, res, None


def check_tightness(c, system, obs, seed):
    start = float(c.get("start", 0.25))
    intervals = [tuple(iv) for iv in c["intervals"]] if "intervals" in c else \
        [(start, start + float(d)) for d in c["deltas"]]
    res = empirical_tightness(system, intervals, int(c["n"]), c.get("reps"), seed, C=float(c.get("C", 3.0)),
                              mode=c.get("mode", "mc"))
    d = res.to_dict()
    passed = res.holds
    if "binomial" in c:
        checks = []
        for row in res.rows:
            want = binomial_fourth_central(res.n, row["delta"])
            z = abs(row["value"] - want) / row["stderr"] if row["stderr"] > 0 else abs(row["value"] - want)
            checks.append({"delta": row["delta"], "binomial": want, "z": z})
            row["binomial"] = want
        d["binomial"] = checks
        passed = passed and all(ch["z"] <= 3.0 for ch in checks)
    return passed, d, (res.rows, ["s", "t", "delta", "value", "stderr", "scale", "ratio", "bound"])


def check_mc_s4(c, system, obs, seed):
    n, reps = int(c["n"]), int(c["reps"])
    est = estimate_s4(system, obs, n, reps, seed)
    res = est.to_dict()
    passed = not est.underpowered
    if "expect" in c:
        want = c["expect"]
        if want == "exact":
            want = exact_fourth_moments(_require_finite(system), obs, [n])[n]
        res["expected"] = float(want)
        res["z"] = abs(est.mean - float(want)) / est.stderr if est.stderr else abs(est.mean - float(want))
        passed = passed and res["z"] <= 3.0
    return passed, res, None


CHECKS = {"oracle_s4": check_oracle_s4, "oracle_paths": check_oracle_paths, "spectral": check_spectral,
          "ulam_theta": check_ulam_theta, "ledger": check_ledger, "bound": check_bound,
          "hat_sweep": check_hat_sweep, "clt": check_clt, "tightness": check_tightness, "mc_s4": check_mc_s4}
NEEDS_SYSTEM = {"oracle_s4", "oracle_paths", "spectral", "ledger", "bound", "clt", "tightness", "mc_s4"}


def _set_path(cfg: dict, dotted: str, value):
    keys = dotted.split(".")
    cur = cfg
    for k in keys[:-1]:
        cur = cur[int(k)] if isinstance(cur, list) else cur.setdefault(k, {})
    last = keys[-1]
    if isinstance(cur, list):
        cur[int(last)] = value
    else:
        cur[last] = value


def apply_overrides(cfg: dict, seed=None, sets=()) -> dict:
    cfg = copy.deepcopy(cfg)
    if seed is not None:
        cfg["seed"] = int(seed)
    for item in sets:
        if "=" not in item:
            raise SchemaError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            val = raw
        _set_path(cfg, key, val)
    return cfg


def validate_config(cfg: dict):
    if not isinstance(cfg, dict):
        raise SchemaError("config must be a JSON object")
    if cfg.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {cfg.get('schema')}")
    if "seed" not in cfg:
        raise SchemaError("config needs a seed")
    if not isinstance(cfg.get("checks"), list) or not cfg["checks"]:
        raise SchemaError("config needs a non-empty checks list")
    for c in cfg["checks"]:
        if c.get("type") not in CHECKS:
            raise SchemaError(f"unknown check type {c.get('type')!r}")
        if c["type"] in NEEDS_SYSTEM and "system" not in c and "system" not in cfg:
            raise SchemaError(f"check {c['type']} needs a system")


def run_config(cfg: dict) -> tuple[dict, dict]:
    """Run every check of a config; return ``(report, csv tables)``."""
    validate_config(cfg)
    seed = int(cfg["seed"])
    results, tables = [], {}
    for idx, c in enumerate(cfg["checks"]):
        syscfg = c.get("system", cfg.get("system"))
        system = build_system(dict(syscfg, seed=syscfg.get("seed", seed))) if syscfg else None
        obscfg = c.get("observable", cfg.get("observable"))
        obs = build_observable(obscfg, system) if obscfg is not None and system is not None else None
        cseed = int(c.get("seed", seed))
        passed, res, table = CHECKS[c["type"]](c, system, obs, cseed)
        label = c.get("label", f"{idx:02d}_{c['type']}")
        results.append({"label": label, "type": c["type"], "passed": bool(passed), "seed": cseed, "result": res})
        if table is not None:
            tables[label] = table
    report = {"name": cfg.get("name", "run"), "config": cfg, "provenance": provenance(cfg, seed),
              "checks": results, "passed": all(r["passed"] for r in results)}
    return report, tables


# -- subcommands -------------------------------------------------------------------

def _finish(payload: dict, args, table=None) -> int:
    if args.format == "csv":
        if table is None:
            raise SchemaError("this subcommand has no CSV form")
        emit(write_csv(*table), args.out)
    else:
        emit(canonical_json(payload), args.out)
    return EXIT_PASS if payload.get("passed", True) else EXIT_FAIL


def _single(args, kind: str, check: dict, system_attr: str, flatten: str | None = None):
    seed = getattr(args, "seed", None)
    syscfg = load_json(getattr(args, system_attr))
    obscfg = load_json(args.obs) if getattr(args, "obs", None) else None
    system = build_system(syscfg | ({"seed": seed} if seed is not None else {}))
    obs = build_observable(obscfg, system) if obscfg is not None else None
    passed, res, table = CHECKS[kind](check, system, obs, seed or 0)
    cfg = {"command": kind, "check": check, system_attr: syscfg, "observable": obscfg, "seed": seed}
    if flatten:
        # the named part of the result becomes the top level of the document
        payload = {**res[flatten], "passed": passed, "provenance": provenance(cfg, cfg["seed"])}
    else:
        payload = {"passed": passed, "result": res, "provenance": provenance(cfg, cfg["seed"])}
    return _finish(payload, args, table)


def cmd_spectral(args):
    check = {"horizon": args.horizon, "norm": args.norm, "include_probes": True}
    return _single(args, "spectral", check, "model", flatten="certificate")


def cmd_oracle(args):
    ns = args.ns or [args.n]
    return _single(args, "oracle_s4", {"ns": ns}, "model")


def cmd_mc(args):
    return _single(args, "mc_s4", {"n": args.n, "reps": args.reps}, "system")


def cmd_bound(args):
    check = {"ns": args.ns, "mode": args.mode, "reps": args.reps}
    if args.mode == "mc" and args.seed is None:
        raise SchemaError("--seed is required in mc mode")
    return _single(args, "bound", check, "system")


def cmd_ledger(args):
    return _single(args, "ledger", {"cutoff": args.cutoff, "horizon": args.horizon or args.cutoff}, "model")


def cmd_clt(args):
    return _single(args, "clt", {"n": args.n, "reps": args.reps, "sigma2": args.sigma2}, "system")


def cmd_tightness(args):
    return _single(args, "tightness", {"n": args.n, "reps": args.reps, "deltas": args.deltas,
                                       "start": args.start, "C": args.C}, "system")


def cmd_run(args):
    cfg = apply_overrides(load_json(args.config), args.seed, args.set or [])
    t0 = time.time()
    report, tables = run_config(cfg)
    out = Path(args.out or f"{report['name']}-report")
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(canonical_json(report))
    meta = {"created": _dt.datetime.now(_dt.timezone.utc).isoformat(), "wall_seconds": time.time() - t0,
            "config_path": str(args.config)}
    (out / "report.meta.json").write_text(canonical_json(meta))
    if args.format == "csv":
        for label, (rows, cols) in tables.items():
            (out / f"{label}.csv").write_text(write_csv(rows, cols))
    for r in report["checks"]:
        print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['label']}")
    print(f"report: {out / 'report.json'}")
    return EXIT_PASS if report["passed"] else EXIT_FAIL


def _ints(s: str) -> list[int]:
    return [int(x) for x in s.split(",") if x]


def _floats(s: str) -> list[float]:
    return [float(x) for x in s.split(",") if x]


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors: exit status 1, not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"error [E_USAGE]: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ergomoment", description="Fourth-moment bounds for ergodic systems.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed_required=False):
        sp.add_argument("--out", help="output file (stdout by default)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--seed", type=int, required=seed_required)

    sp = sub.add_parser("spectral", help="theta/kappa certificate of a finite chain")
    sp.add_argument("--model", required=True)
    sp.add_argument("--obs")
    sp.add_argument("--horizon", type=int, default=50)
    sp.add_argument("--norm", default="SUP", type=str.upper, choices=[k.value for k in NormKind])
    common(sp)
    sp.set_defaults(func=cmd_spectral)

    op = sub.add_parser("oracle", help="exact moments on finite chains")
    osub = op.add_subparsers(dest="what", required=True)
    s4 = osub.add_parser("s4")
    s4.add_argument("--model", required=True)
    s4.add_argument("--obs", required=True)
    s4.add_argument("--n", type=int, default=10)
    s4.add_argument("--ns", type=_ints, help="comma-separated list of n")
    common(s4)
    s4.set_defaults(func=cmd_oracle)

    mp = sub.add_parser("mc", help="Monte Carlo moments")
    msub = mp.add_subparsers(dest="what", required=True)
    m4 = msub.add_parser("s4")
    m4.add_argument("--system", required=True)
    m4.add_argument("--obs", required=True)
    m4.add_argument("--n", type=int, required=True)
    m4.add_argument("--reps", type=int, default=20000)
    common(m4, seed_required=True)
    m4.set_defaults(func=cmd_mc)

    def add_bound(sp):
        sp.add_argument("--system", required=True)
        sp.add_argument("--obs", required=True)
        sp.add_argument("--ns", type=_ints, required=True)
        sp.add_argument("--mode", choices=("exact", "mc"), default="exact")
        sp.add_argument("--reps", type=int, default=20000)
        common(sp)
        sp.set_defaults(func=cmd_bound)

    def add_ledger(sp):
        sp.add_argument("--model", required=True)
        sp.add_argument("--obs", required=True)
        sp.add_argument("--cutoff", type=int, default=20)
        sp.add_argument("--horizon", type=int)
        common(sp)
        sp.set_defaults(func=cmd_ledger)

    def add_clt(sp):
        sp.add_argument("--system", required=True)
        sp.add_argument("--obs", required=True)
        sp.add_argument("--n", type=int, default=10_000)
        sp.add_argument("--reps", type=int, default=10_000)
        sp.add_argument("--sigma2", type=float)
        common(sp, seed_required=True)
        sp.set_defaults(func=cmd_clt)

    def add_tight(sp):
        sp.add_argument("--system", required=True)
        sp.add_argument("--n", type=int, default=100)
        sp.add_argument("--reps", type=int, default=20000)
        sp.add_argument("--deltas", type=_floats, default=[0.01, 0.05, 0.1, 0.5])
        sp.add_argument("--start", type=float, default=0.25)
        sp.add_argument("--C", type=float, default=3.0)
        common(sp, seed_required=True)
        sp.set_defaults(func=cmd_tightness)

    vp = sub.add_parser("verify", help="bound, ledger, clt and tightness checks")
    vsub = vp.add_subparsers(dest="what", required=True)
    add_bound(vsub.add_parser("bound"))
    add_ledger(vsub.add_parser("ledger"))
    add_clt(vsub.add_parser("clt"))
    add_tight(vsub.add_parser("tightness"))
    add_ledger(sub.add_parser("ledger", help="alias of verify ledger"))
    add_clt(sub.add_parser("clt", help="alias of verify clt"))
    add_tight(sub.add_parser("tightness", help="alias of verify tightness"))

    rp = sub.add_parser("run", help="run a config or bundled preset")
    rp.add_argument("config")
    rp.add_argument("--seed", type=int)
    rp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config entry")
    rp.add_argument("--out", help="output directory")
    rp.add_argument("--format", choices=("json", "csv"), default="json")
    rp.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    try:
        return args.func(args)
    except ModelError as exc:
        code = getattr(exc, "code", "E_MODEL")
        print(f"error [{code}]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error [E_SCHEMA]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
