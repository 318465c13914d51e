"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

Lines are printed as they are produced and repeated in the terminal summary.
"""

import csv
import io
import time
import timeit

import numpy as np

from aircomp import mse_policy, oracle, power_policy, simulator
from aircomp.cli import main
from aircomp.core import SystemInstance, TxRxDesign, mse

from conftest import ACCEPTANCE_LINES, S2_POWER_GAINS, random_instance


def report(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def best_time(fn, number=200):
    return min(timeit.repeat(fn, number=number, repeat=5)) / number


def rel(a, b):
    return abs(a - b) / abs(b)


def test_criterion_01_min_mse_closed_form():
    inst = SystemInstance.from_gains(np.ones(10), 1.0)
    rep = mse_policy.solve_min_mse(inst, 10.0)
    errs = [rel(rep.design.rx_gain, 10 / 11), float(np.max(np.abs(rep.design.tx_gains - 1.0))),
            rel(rep.mse_star, 10 / 11)]
    t = best_time(lambda: mse_policy.solve_min_mse(inst, 10.0))
    ok = max(errs) <= 1e-12 and t < 1e-3
    report(1, "min-MSE closed form", ok, f"max rel err {max(errs):.2e}, runtime {t * 1e3:.3f} ms")


def test_criterion_02_min_power_closed_form():
    inst = SystemInstance.from_gains(np.ones(10), 1.0)
    rep = power_policy.solve_min_power(inst, 5.0)
    errs = [abs(rep.diagnostics.m_value - 1.0), abs(rep.pw_star - 1.0),
            abs(rep.design.rx_gain - np.sqrt(2.5))]
    t = best_time(lambda: power_policy.solve_min_power(inst, 5.0))
    ok = max(errs) <= 1e-10 and t < 1e-3
    report(2, "min-power closed form", ok, f"max abs err {max(errs):.2e}, runtime {t * 1e3:.3f} ms")


def test_criterion_03_oracle_equivalence():
    rng = np.random.default_rng(2024)
    n = 200
    start = time.perf_counter()
    worst, beaten = 0.0, 0
    for _ in range(n):
        inst = random_instance(rng)
        P = rng.uniform(0.5, 50.0)
        closed = mse_policy.solve_min_mse(inst, P).mse_star
        found = oracle.pg_min_mse(inst, P).objective
        worst = max(worst, rel(found, closed))
        beaten += found < closed * (1.0 - 1e-6)

        K = inst.num_sensors
        eps = rng.uniform(0.05 * K, 0.95 * K)
        closed = power_policy.solve_min_power(inst, eps).pw_star
        found = oracle.nested_min_power(inst, eps).objective
        worst = max(worst, rel(found, closed))
        beaten += found < closed * (1.0 - 1e-6)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and beaten == 0 and elapsed < 120.0
    report(3, "oracle equivalence", ok,
           f"{n} instances per problem, worst rel err {worst:.2e}, oracle wins {beaten}, {elapsed:.1f} s")


def test_criterion_04_duality_round_trip():
    rng = np.random.default_rng(4)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(500):
        inst = random_instance(rng, k_max=16)
        K = inst.num_sensors
        eps = rng.uniform(0.05 * K, 0.95 * K)
        worst = max(worst, abs(power_policy.duality_check(inst, eps) - eps))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed < 10.0
    report(4, "duality round trip", ok, f"500 pairs, worst abs err {worst:.2e}, {elapsed:.2f} s")


def test_criterion_05_power_budget_monotonicity():
    rng = np.random.default_rng(5)
    fails = {"mse": 0, "g": 0, "b": 0}
    for _ in range(100):
        inst = random_instance(rng)
        P = rng.uniform(0.5, 50.0)
        a = mse_policy.solve_min_mse(inst, P)
        b = mse_policy.solve_min_mse(inst, 2.0 * P)
        fails["mse"] += not b.mse_star < a.mse_star
        fails["g"] += not b.design.rx_gain < a.design.rx_gain
        fails["b"] += not np.all(b.design.tx_gains > a.design.tx_gains)

    hump_ok = True
    for nv, P in [(1.0, 1.0), (1.0, 10.0), (0.3, 2.0), (4.0, 0.5)]:
        peak = np.sqrt(nv / P)
        grid = np.linspace(0.0, 5.0 * peak, 1000)
        vals = P * grid / (nv + P * grid * grid)
        hump_ok &= abs(grid[np.argmax(vals)] - peak) <= grid[1] - grid[0]

    ok = not any(fails.values()) and hump_ok
    report(5, "power-budget monotonicity", ok,
           f"violations over 100 instances: MSE* {fails['mse']}, g* {fails['g']}, b* {fails['b']}; "
           f"hump at sigma/sqrt(P): {'yes' if hump_ok else 'no'}")


def test_criterion_06_noise_scaling():
    rng = np.random.default_rng(6)
    worst, bad_b, bad_g = 0.0, 0, 0
    for _ in range(100):
        inst = random_instance(rng)
        K = inst.num_sensors
        eps = rng.uniform(0.05 * K, 0.95 * K)
        louder = SystemInstance(inst.channels, 4.0 * inst.noise_variance)
        a = power_policy.solve_min_power(inst, eps)
        b = power_policy.solve_min_power(louder, eps)
        worst = max(worst, rel(b.pw_star, 4.0 * a.pw_star))
        bad_b += not np.all(b.design.tx_gains > a.design.tx_gains)
        bad_g += not b.design.rx_gain < a.design.rx_gain
    ok = worst <= 1e-9 and bad_b == 0 and bad_g == 0
    report(6, "noise scaling", ok,
           f"worst PW ratio err {worst:.2e}, b* violations {bad_b}, g* violations {bad_g}")


def test_criterion_07_power_profile_shapes(capsys):
    assert main(["fig", "--which", "2", "--fig2-eps", "0.5,5"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))

    def profile(eps):
        sel = [r for r in rows if r["channel_set"] == "S2" and float(r["mse_limit[power]"]) == eps]
        sel.sort(key=lambda r: float(r["h_k[amplitude]"]))
        return np.array([float(r["b_k^2[power]"]) for r in sel])

    wide, tight = profile(5.0), profile(0.5)
    d = np.diff(wide)
    peak = int(np.argmax(wide))
    unimodal = 0 < peak < wide.size - 1 and np.all(d[:peak] > 0) and np.all(d[peak:] < 0)
    decreasing = bool(np.all(np.diff(tight) < 0))
    ok = wide.size == tight.size == S2_POWER_GAINS.size and unimodal and decreasing
    report(7, "S2 power profiles", ok,
           f"eps=5 unimodal with peak at sensor {peak + 1}: {unimodal}; eps=0.5 decreasing: {decreasing}")


def test_criterion_08_monte_carlo_mse():
    rng = np.random.default_rng(8)
    start = time.perf_counter()
    worst = 0.0
    for i in range(20):
        inst = random_instance(rng)
        design = TxRxDesign(rng.uniform(0.1, 2.0), rng.uniform(0.0, 2.0, inst.num_sensors))
        stats = simulator.empirical_mse(inst, design, 10**6, seed=i)
        worst = max(worst, abs(stats.mean - mse(inst, design)) / stats.std_error)
    elapsed = time.perf_counter() - start
    ok = worst <= 4.0 and elapsed < 30.0
    report(8, "Monte Carlo MSE", ok, f"20 designs, worst deviation {worst:.2f} SE, {elapsed:.1f} s")


def test_criterion_09_sum_vs_peak_ensemble():
    model = simulator.FadingModel(1.0)
    start = time.perf_counter()
    gaps, ses, parts = [], [], []
    below = True
    for K in (5, 10, 20):
        common = dict(sensors=K, trials=10**5, seed=9)
        s = simulator.trial_values(simulator.EnsembleSpec(
            policy="sum_power_mse", sum_power_limit_per_sensor=10.0, **common), model)
        p = simulator.trial_values(simulator.EnsembleSpec(
            policy="peak_mse", peak_limit=10.0, **common), model)
        # both policies see the same channel draws, so the gap is a paired difference
        diff = p - s
        gap, se = diff.mean(), diff.std(ddof=1) / np.sqrt(diff.size)
        below &= gap >= 5.0 * se
        gaps.append(gap)
        ses.append(se)
        parts.append(f"K={K}: sum {s.mean():.5f} peak {p.mean():.5f} gap {gap:.5f} "
                     f"ratio {p.mean() / s.mean():.3f}")
    steps = [(gaps[i + 1] - gaps[i]) / np.hypot(ses[i], ses[i + 1]) for i in range(2)]
    increasing = all(z >= 5.0 for z in steps)
    elapsed = time.perf_counter() - start
    ok = bool(below) and increasing and elapsed < 300.0
    report(9, "sum-power vs peak ensemble", ok,
           "; ".join(parts) + f"; gap steps {steps[0]:+.1f}/{steps[1]:+.1f} SE, {elapsed:.0f} s")


DETERMINISM_RUNS = [
    ["solve-mse", "--channels", "0.5,1,1.5", "--sum-power", "3"],
    ["solve-power", "--channels", "0.5,1,1.5", "--mse-limit", "1"],
    ["baseline-peak", "--channels", "0.5,1,1.5", "--peak-power", "2"],
    ["simulate", "--policy", "sum_power_pw", "--sensors", "6", "--trials", "700"],
    ["fig", "--which", "1"],
    ["fig", "--which", "2"],
    ["fig", "--which", "3"],
    ["fig", "--which", "4", "--trials", "600", "--fig4-sensors", "5,10"],
]


def test_criterion_10_determinism(tmp_path):
    mismatched = []
    for i, argv in enumerate(DETERMINISM_RUNS):
        outputs = []
        for run, workers in enumerate(("1", "1", "2")):
            out = tmp_path / f"{i}-{run}"
            assert main([*argv, "--seed", "11", "--workers", workers, "--out", str(out), "--quiet"]) == 0
            outputs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
        if not outputs[0] or outputs[0] != outputs[1] or outputs[0] != outputs[2]:
            mismatched.append(" ".join(argv[:3]))
    ok = not mismatched
    report(10, "determinism", ok,
           f"{len(DETERMINISM_RUNS)} runs x 3 (workers 1, 1, 2); mismatches: {mismatched or 'none'}")
