"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``[criterion N] PASS|FAIL ...`` line (shown even
under output capture) and then asserts.
"""

from __future__ import annotations

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from hetsleep import defaults, harness
from hetsleep import power_model as pm
from hetsleep.nonuniform import delta_m, handed_over_load, phat
from hetsleep.power_model import OperationMode
from hetsleep.scenario import distance_order
from hetsleep.uniform import solve_uniform, threshold_lambda_off
from hetsleep.validation import (
    exact_efficiency_factor,
    exhaustive_search,
    monte_carlo_validate,
)

from conftest import random_scenario, random_uniform_scenario

DATA = Path(__file__).parent / "data"


def report(capsys, n: int, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def _mc_scenario(seed: int):
    """Four SBSs in a 150 m macro cell with roughly 5-15 expected macro users."""
    rng = np.random.default_rng(1000 + seed)
    r_macro = 150.0
    r_small = float(rng.uniform(1.5, 4.5))
    pos = defaults.random_layout(4, r_macro, r_small, rng, min_dist=0.3 * r_macro)
    lam0 = float(rng.uniform(5.0, 15.0)) / (math.pi * r_macro**2)
    lam = list(lam0 * rng.uniform(0.5, 5.0, 4))
    s = defaults.reference_scenario(pos, lam0, lam, r_macro=r_macro, r_small=r_small)
    mode = OperationMode(tuple(int(v) for v in rng.integers(0, 2, 4)))
    return s, mode


def test_criterion_1_monte_carlo_mean(capsys):
    start = time.perf_counter()
    worst_z = worst_gap = 0.0
    for i in range(10):
        s, mode = _mc_scenario(i)
        rep = monte_carlo_validate(s, mode, 1_000_000, seed=i, outage_users=0)
        worst_z = max(worst_z, abs(rep.z_score))
        worst_gap = max(worst_gap, abs(rep.p_t_empirical_mean / rep.p_t_analytic - 1.0))
    elapsed = time.perf_counter() - start
    ok = worst_z <= 3.0 and worst_gap <= 0.01 and elapsed <= 120.0
    report(capsys, 1, ok, f"max |z| = {worst_z:.2f} (<= 3), max relative gap = {worst_gap:.2e} "
                          f"(<= 1e-2), runtime {elapsed:.0f} s (<= 120)")


def test_criterion_2_outage_at_target(capsys):
    s, mode = _mc_scenario(0)
    rep = monte_carlo_validate(s, mode, 20_000, seed=99, outage_users=20, fading_draws=100_000,
                               exact_z=False)
    dev = max(abs(v - 0.05) for v in rep.outage_per_user)
    ok = len(rep.outage_per_user) == 20 and dev <= 0.005
    report(capsys, 2, ok, f"{len(rep.outage_per_user)} users, max |outage - 0.05| = {dev:.4f} (<= 0.005)")


def test_criterion_3_uniform_solver_optimal(capsys):
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    n = mismatches = non_prefix = 0
    while n < 200:
        s = random_uniform_scenario(rng, int(rng.integers(4, 15)))
        if not pm.evaluate(s, OperationMode.all_on(s.n_sbs)).feasible:
            continue
        n += 1
        sol = solve_uniform(s)
        best_mode, best = exhaustive_search(s)
        if abs(sol.eval.p_het - best.p_het) > 1e-9 * best.p_het:
            mismatches += 1
        order = distance_order(s)
        k = s.n_sbs - best_mode.n_active
        if best_mode != pm.prefix_off_mode(s, order, k):
            non_prefix += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and non_prefix == 0 and elapsed <= 300.0
    report(capsys, 3, ok, f"{n} scenarios, {mismatches} value mismatches, {non_prefix} non-prefix optima, "
                          f"runtime {elapsed:.1f} s (<= 300)")


def test_criterion_4_ratio_table(capsys):
    start = time.perf_counter()
    grid = [k * 0.2e-3 for k in range(1, 9)]
    spec = harness.SweepSpec(lambda0_grid=grid, seeds=list(range(20)))
    summary, detail = harness.table2_benchmark(spec)
    elapsed = time.perf_counter() - start
    worst = min(r["mean_ratio"] for r in summary)
    ok = worst >= 0.99 and all(r["ratio"] <= 1 + 1e-12 for r in detail) and elapsed <= 900.0
    table = ", ".join(f"{r['lambda0_per_m2'] * 1e3:.1f}e-3: {r['mean_ratio']:.6f}" for r in summary)
    report(capsys, 4, ok, f"min mean ratio {worst:.6f} (>= 0.99) [{table}], runtime {elapsed:.0f} s (<= 900)")


def test_criterion_5_closed_form_constants(capsys):
    base = defaults.reference_scenario()
    hot = harness.SweepSpec(lambda0_grid=[5e-3], seeds=[0], p_active=0.7)
    rows = {(r["scheme"], r["estimate"]): r for r in harness.run_sweep(hot)}
    cold = harness.sweep_cell(base, harness.SweepSpec(lambda0_grid=[1e-6], sigma2=0.0, schemes=["alg"]),
                              1e-6, 0)[0]
    all_off = pm.evaluate(base.with_densities(1e-6, [50e-6] * 144), OperationMode.all_off(144))
    checks = {
        "always_on total 2732": (rows[("always_on", "exact")]["p_het_w"], 2732.0),
        "prob_on expected total 2429.6": (rows[("prob_on", "expected")]["p_het_w"], 2429.6),
        "MBS component at cap 1292": (rows[("always_on", "exact")]["mbs_w"], 1292.0),
        "all-sleep SBS component 432": (cold["sbs_w"], 432.0),
        "all-on SBS component 1440": (rows[("always_on", "exact")]["sbs_w"], 1440.0),
        "low-load MBS component": (cold["mbs_w"], all_off.mbs_power),
    }
    bad = {k: v for k, (v, ref) in checks.items() if abs(v - ref) > 0.1}
    detail = "; ".join(f"{k}: {v:.4f}" for k, (v, _) in checks.items())
    report(capsys, 5, not bad, detail)


def test_criterion_6_threshold_sensitivity(capsys):
    rng = np.random.default_rng(6)
    violations = 0
    directions = [("channel", "n0", -1), ("channel", "alpha", -1), ("qos", "rate_b", -1),
                  ("qos", "epsilon", +1), ("qos", "bandwidth_w", +1)]
    for _ in range(20):
        s = random_scenario(rng, int(rng.integers(2, 15)), uniform=True, lambda0=1e-3)
        s = s.with_power(p_t_max=math.inf)
        base = threshold_lambda_off(s)
        for kind, field, sign in directions:
            bumped = {field: getattr(getattr(s, kind), field) * 1.1}
            s2 = s.with_channel(**bumped) if kind == "channel" else s.with_qos(**bumped)
            if sign * (threshold_lambda_off(s2) - base) < 0:
                violations += 1
    report(capsys, 6, violations == 0, f"20 scenarios x 5 perturbations, {violations} violations")


def test_criterion_7_marginal_cost_increasing(capsys):
    rng = np.random.default_rng(7)
    violations = 0
    for _ in range(100):
        s = random_uniform_scenario(rng, int(rng.integers(2, 15)))
        costs = np.array([pm.delta_p_macro(s, m) for m in range(1, s.n_sbs + 1)])
        violations += int(np.sum(np.diff(costs) <= 0))
    report(capsys, 7, violations == 0, f"100 scenarios, {violations} violations")


def test_criterion_8_knapsack_identity(capsys):
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(1000):
        s = random_scenario(rng, int(rng.integers(1, 15)))
        mode = OperationMode(tuple(int(v) for v in rng.integers(0, 2, s.n_sbs)))
        load = handed_over_load(s, mode)
        pw = s.power
        rewritten = (pw.p_base_macro + s.n_sbs * pw.p_sbs_active + phat(s, load)
                     - sum(delta_m(s, m, load) for m in mode.off))
        direct = pm.evaluate(s, mode).p_het
        worst = max(worst, abs(rewritten - direct) / direct)
    report(capsys, 8, worst <= 1e-9, f"1000 pairs, max relative difference {worst:.2e} (<= 1e-9)")


def test_criterion_9_cell_integral_shortcut(capsys):
    r_macro = 500.0
    angles = [0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi]
    pos = [(f * r_macro * math.cos(a), f * r_macro * math.sin(a)) for f, a in zip((0.3, 0.5, 0.7, 0.9), angles)]
    errs = {}
    for ratio in (0.1, 0.05, 0.01):
        s = defaults.reference_scenario(pos, lambda0=1e-3, r_macro=r_macro, r_small=ratio * r_macro)
        mode = OperationMode.all_off(4)
        z = pm.efficiency_factor(s, mode)
        errs[ratio] = abs(exact_efficiency_factor(s, mode) - z) / exact_efficiency_factor(s, mode)
    ok = errs[0.05] <= 0.01 and errs[0.01] <= 0.01 and errs[0.1] > errs[0.05] > errs[0.01]
    detail = ", ".join(f"R_s/R_0={k}: {v:.2e}" for k, v in errs.items())
    report(capsys, 9, ok, f"relative Z error {detail}")


def test_criterion_10_sweep_determinism(capsys, tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        subprocess.run([sys.executable, "-m", "hetsleep", "sweep", str(DATA / "sweep_small.json"),
                        "--out", str(out)], check=True)
        outs.append(out.read_bytes())
    ok = outs[0] == outs[1] and len(outs[0]) > 0
    report(capsys, 10, ok, f"two sweep runs, {len(outs[0])} bytes each, identical={outs[0] == outs[1]}")
