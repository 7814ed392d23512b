"""Acceptance checks, one per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the lines
inline; they are also written to the terminal when output is captured).
"""

import math
import time

import pytest

from ergomoment.cli import canonical_json, load_json, run_config
from ergomoment.oracle import exact_fourth_moments, path_enumeration_fourth_moment
from ergomoment.spectral import subdominant_radius, theta_kappa, ulam
from ergomoment.systems import doeblin_chain, doubling_map, iid_chain
from ergomoment.verify import proof_ledger, verify_bound

from conftest import ASYMMETRIC, FOUR, SYMMETRIC, WALK, centred


@pytest.fixture
def report(capsys):
    def line(number, ok, detail, elapsed, budget):
        in_time = elapsed < budget
        status = "PASS" if ok and in_time else "FAIL"
        with capsys.disabled():
            print(f"\n{status} criterion {number}: {detail} [{elapsed:.2f} s of {budget:g} s]")
        return ok and in_time
    return line


def test_criterion_1_oracle_matches_rademacher_closed_form(report):
    t0 = time.perf_counter()
    m = iid_chain([0.5, 0.5], states=[1, -1])
    vals = exact_fourth_moments(m, centred(m, [1.0, -1.0]), range(1, 65))
    worst = max(abs(v - (3 * n * n - 2 * n)) / (3 * n * n - 2 * n) for n, v in vals.items())
    dt = time.perf_counter() - t0
    assert report(1, worst <= 1e-9, f"max relative error {worst:.1e} over n = 1..64", dt, 1.0)


def test_criterion_2_gap_expansion_matches_path_enumeration(report):
    t0 = time.perf_counter()
    zoo = [
        (iid_chain([0.5, 0.5], states=[1, -1]), [1.0, -1.0]),
        (doeblin_chain(SYMMETRIC), [1.0, -1.0]),
        (doeblin_chain(ASYMMETRIC), [0.0, 1.0]),
        (doeblin_chain(WALK), [1.0, 0.0, -1.0]),
        (doeblin_chain(FOUR), [2.0, -1.0, 0.5, -3.0]),
    ]
    worst = 0.0
    for m, v in zoo:
        phi = centred(m, v)
        gap = exact_fourth_moments(m, phi, range(1, 9))
        for n in range(1, 9):
            ref = path_enumeration_fourth_moment(m, phi, n)
            worst = max(worst, abs(gap[n] - ref) / abs(ref))
    dt = time.perf_counter() - t0
    assert report(2, worst <= 1e-12, f"max relative gap {worst:.1e} on 5 models, n = 1..8", dt, 10.0)


def test_criterion_3_ledger_is_sound_at_cutoff_20(report):
    t0 = time.perf_counter()
    details, ok = [], True
    for name, P, v in (("symmetric", SYMMETRIC, [1.0, -1.0]), ("reflected walk", WALK, [1.0, 0.0, -1.0])):
        m = doeblin_chain(P)
        phi = centred(m, v)
        cert = theta_kappa(m, probes=[phi.values], closure=(phi, 20), horizon=20)
        led = proof_ledger(m, phi, cert, 20)
        ok &= led.sound and led.min_slack >= -1e-12
        details.append(f"{name}: {len(led.entries)} entries, min slack {led.min_slack:.3g}")
    dt = time.perf_counter() - t0
    assert report(3, ok, "; ".join(details), dt, 30.0)


def test_criterion_4_empirical_K_stabilises(report):
    t0 = time.perf_counter()
    ns = [8, 16, 32, 64, 128, 256, 512]
    details, ok = [], True
    for name, m, v in (("rademacher", iid_chain([0.5, 0.5], states=[1, -1]), [1.0, -1.0]),
                       ("symmetric", doeblin_chain(SYMMETRIC), [1.0, -1.0]),
                       ("reflected walk", doeblin_chain(WALK), [1.0, 0.0, -1.0])):
        s = verify_bound(m, centred(m, v), ns, "exact")
        hi, lo = s.running_max(64), s.running_max(32)
        finite = all(math.isfinite(r.empirical_K) for r in s.reports)
        ok &= finite and abs(hi - lo) <= 0.05 * lo
        details.append(f"{name}: max K {hi:.4g} (n>=64) vs {lo:.4g} (n>=32)")
    dt = time.perf_counter() - t0
    assert report(4, ok, "; ".join(details), dt, 60.0)


def _sweep(label):
    cfg = load_json("hat_sweep.json")
    cfg["checks"] = [c for c in cfg["checks"] if c["label"] == label]
    rep, _ = run_config(cfg)
    return rep["checks"][0]


def test_criterion_5_K_span_on_the_stated_grid(report):
    t0 = time.perf_counter()
    res = _sweep("doubling_hats")["result"]
    dt = time.perf_counter() - t0
    ok = res["K_span"] < 10
    assert report("5 (K span, stated grid)", ok,
                  f"eps 1e-1..1e-4, K span {res['K_span']:.3g}, norm span {res['norm_span']:.4g}", dt, 120.0)


@pytest.mark.xfail(strict=True, reason="a hat norm 1 + 1/eps over eps in 1e-1..1e-4 spans about 909, not 1e4")
def test_criterion_5_norm_span_on_the_stated_grid(report):
    t0 = time.perf_counter()
    res = _sweep("doubling_hats")["result"]
    dt = time.perf_counter() - t0
    ok = res["norm_span"] >= 1e4
    report("5 (norm span, stated grid)", ok,
           f"norm span {res['norm_span']:.4g} < 1e4 is forced by the grid itself", dt, 120.0)
    assert ok


def test_criterion_5_extended_grid_spans_ten_thousand(report):
    t0 = time.perf_counter()
    res = _sweep("doubling_hats_wide")["result"]
    dt = time.perf_counter() - t0
    ok = res["norm_span"] >= 1e4 and res["K_span"] < 10
    assert report("5 (extended grid to 1e-6)", ok,
                  f"norm span {res['norm_span']:.4g}, K span {res['K_span']:.3g}", dt, 120.0)


def test_criterion_6_spectral_gaps(report):
    t0 = time.perf_counter()
    t_sym = theta_kappa(doeblin_chain(SYMMETRIC)).theta
    t_asym = theta_kappa(doeblin_chain(ASYMMETRIC)).theta
    r16 = subdominant_radius(ulam(doubling_map(), 16).P)[0]
    r32 = subdominant_radius(ulam(doubling_map(), 32).P)[0]
    dt = time.perf_counter() - t0
    ok = abs(t_sym - 0.5) < 1e-10 and abs(t_asym - 0.4) < 1e-10 and abs(r16 - r32) < 1e-6
    assert report(6, ok, f"theta {t_sym!r}, {t_asym!r}; Ulam radius k=16 {r16:.3g}, k=32 {r32:.3g}", dt, 5.0)


def test_criterion_7_clt_on_symmetric_chain(report):
    t0 = time.perf_counter()
    rep, _ = run_config(load_json("clt_symmetric.json"))
    res = rep["checks"][0]["result"]
    dt = time.perf_counter() - t0
    ok = (abs(res["mean"]) < 0.05 and abs(res["var"] - 1) < 0.05 and abs(res["kurt"] - 3) < 0.15
          and res["ks"] < 0.02 and abs(res["sigma2"] - 3) < 1e-9)
    assert report(7, ok, f"mean {res['mean']:.4f}, var {res['var']:.4f}, kurt {res['kurt']:.4f}, "
                         f"sup CDF distance {res['ks']:.4f}", dt, 60.0)


def test_criterion_8_tightness_inequality(report):
    t0 = time.perf_counter()
    rep, _ = run_config(load_json("tightness_uniform.json"))
    res = rep["checks"][0]["result"]
    dt = time.perf_counter() - t0
    rows = res["rows"]
    margins = all(r["bound"] - r["value"] >= 3 * r["stderr"] for r in rows)
    tenth = next(r for r in rows if abs(r["delta"] - 0.1) < 1e-12)
    binom = abs(tenth["value"] - 247.14) <= 3 * tenth["stderr"]
    ok = margins and binom and rep["checks"][0]["passed"]
    assert report(8, ok, f"{len(rows)} intervals within 3 SE of the bound; delta 0.1 estimate "
                         f"{tenth['value']:.2f} +- {tenth['stderr']:.2f} vs 247.14", dt, 60.0)


def test_criterion_9_presets_are_byte_reproducible(report):
    t0 = time.perf_counter()
    ok = True
    for name in ("rademacher_s4.json", "tightness_uniform.json"):
        a = canonical_json(run_config(load_json(name))[0])
        b = canonical_json(run_config(load_json(name))[0])
        ok &= a == b
    dt = time.perf_counter() - t0
    assert report(9, ok, "rademacher_s4 and tightness_uniform reports identical across two runs", dt, 60.0)
