"""Acceptance gate: one test per exit criterion.

Each test records a PASS/FAIL line that the terminal summary prints (see
``conftest.py``), so ``pytest tests/test_acceptance.py`` gives a one-screen
verdict.
"""

import json
import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from relayfl import airfl, cli
from relayfl.config import load_config
from relayfl.energy import EnergyLedger
from relayfl.harness import random_instance, run_experiment, run_oracle_check, simulate_trial, trial_shards
from relayfl.oracle import schedule_violations
from relayfl.scheduler import priorities, relay_feasible, schedule_greedy
from relayfl.topology import SystemParams, draw_channels, place_devices

REFERENCE_CONFIG = Path(__file__).resolve().parents[1] / "configs" / "reference.json"
RESULTS = []


def record(n, title, ok, detail):
    RESULTS.append(f"[{'PASS' if ok else 'FAIL'}] criterion {n:>2}: {title} ({detail})")
    assert ok, detail


@pytest.fixture(scope="module")
def reference_config():
    return load_config(REFERENCE_CONFIG)


@pytest.fixture(scope="module")
def reference_run(reference_config):
    return run_experiment(reference_config)


def test_01_oracle_equivalence():
    start = time.perf_counter()
    report = run_oracle_check(1000, 8, seed=2024)
    elapsed = time.perf_counter() - start
    if report.mismatches:
        print(json.dumps(report.mismatches[:3], indent=1))
    ok = report.mismatch_count == 0 and elapsed < 60
    record(1, "greedy count == exhaustive optimum", ok,
           f"{report.mismatch_count}/1000 mismatches, {elapsed:.1f}s")


def test_02_constraint_soundness():
    failures = []
    for n in range(10_000):
        devices, ledger, t, p = random_instance([77, n], 20)
        problems = schedule_violations(schedule_greedy(devices, ledger, t, p), devices, ledger, t, p)
        if problems:
            failures.append((n, problems))
    record(2, "every greedy schedule passes the validator", not failures,
           f"{len(failures)}/10000 invalid" + (f", first {failures[0]}" if failures else ""))


def test_03_relay_feasibility_monotone():
    rng = np.random.default_rng(3)
    violations = 0
    flips = 0
    for n in range(1000):
        devices, ledger, t, p = random_instance([33, n], 20)
        # sweep the relay link over seven decades so both outcomes occur
        p = replace(p, fn_mag2=10 ** rng.uniform(-7, 0))
        table = priorities(devices, ledger, t, p)
        floor = math.sqrt(p.lambda_floor2)
        seq = []
        for i, k in enumerate(table.order, start=1):
            lam2 = math.sqrt(table.psi[k])
            if not lam2 > floor:
                break
            seq.append(relay_feasible(lam2, i, p))
        if False in seq:
            flips += 1
            if any(seq[seq.index(False):]):
                violations += 1
    record(3, "relay feasibility never recovers along the scan", violations == 0 and flips > 0,
           f"{violations} violations, {flips}/1000 instances hit infeasibility")


def test_04_device_count_trends(reference_config, reference_run):
    counts = {}
    for r in reference_run:
        counts.setdefault((r.scheme, r.round), []).append(r.scheduled_count)
    mean = {k: float(np.mean(v)) for k, v in counts.items()}
    early = np.mean([mean[("proposed", t)] for t in range(1, 21)])
    late = np.mean([mean[("proposed", t)] for t in range(81, 101)])
    first = {s: mean[(s, 1)] for s in reference_config.schemes}
    ideal = np.mean([v for (s, _), v in mean.items() if s == "ideal-relay"])
    plain = np.mean([v for (s, _), v in mean.items() if s == "all-relay"])
    ok_a = late > early
    ok_b = all(first["no-relay"] <= first[s] for s in reference_config.schemes)
    ok_c = ideal >= plain
    record(4, "device-count trends over 20 trials", ok_a and ok_b and ok_c,
           f"(a) proposed {early:.2f} -> {late:.2f}; (b) round-1 means {first}; "
           f"(c) ideal {ideal:.3f} vs all-relay {plain:.3f}")


def test_05_idle_allowance_accumulates(reference_config):
    c = replace(reference_config, trials=1, schemes=("proposed",), record_budgets=True)
    steps = list(simulate_trial(c, 0))
    ever = np.zeros(c.system.num_devices, dtype=bool)
    checked = bad = 0
    for prev, cur in zip(steps, steps[1:]):
        ever[list(prev.schedule.scheduled)] = True
        for k in np.flatnonzero(~ever):
            checked += 1
            if not cur.record.budgets[k] > prev.record.budgets[k]:
                bad += 1
    record(5, "never-scheduled devices' allowance strictly grows", bad == 0 and checked > 0,
           f"{bad} failures over {checked} (device, round) checks")


def test_06_noise_calibration():
    p = SystemParams()
    devices = draw_channels(1, 0, place_devices(1, replace(p, num_devices=20)))
    sched = schedule_greedy(devices, EnergyLedger.fresh(20), 0, p)
    assert sched.relay_set, "need a relay-assisted schedule"
    n = 100_000
    err = airfl.aggregate_airtime([np.zeros(n)], sched, 5, p)
    target = (1 / sched.lambda1 ** 2 + 1 / sched.lambda2 ** 2) * p.noise_var
    se = target * math.sqrt(2 / (n - 1))
    dev = abs(err.var(ddof=1) - target)
    record(6, "injected error variance matches the MSE formula", dev <= 3 * se,
           f"|{err.var(ddof=1):.5f} - {target:.5f}| = {dev:.2e} vs 3SE {3 * se:.2e}")


def test_07_gradient_finite_differences():
    rng = np.random.default_rng(11)
    p = SystemParams(batch_size=16)
    worst = 0.0
    for _ in range(100):
        x = rng.standard_normal((16, 6))
        y = rng.standard_normal(16)
        model = rng.standard_normal(7)
        g = airfl.local_gradient(airfl.FlState(model, 0.1), airfl.Shard(x, y, 0), 0, p)

        def loss(m):
            return 0.5 * np.mean((x @ m[:-1] + m[-1] - y) ** 2)

        eps = 1e-6
        fd = np.array([(loss(model + eps * e) - loss(model - eps * e)) / (2 * eps) for e in np.eye(7)])
        worst = max(worst, float(np.linalg.norm(g - fd) / np.linalg.norm(fd)))
    record(7, "analytic gradient vs central differences", worst < 1e-6, f"max rel err {worst:.2e}")


def test_08_training_loss_trend(reference_config):
    c = replace(reference_config, fl_enabled=True, record_budgets=False)
    noisy = run_experiment(c)
    clean = run_experiment(replace(c, fl=replace(c.fl, noisy=False)))
    last = c.system.total_rounds
    final_noisy = {(r.trial, r.scheme): r.global_loss for r in noisy if r.round == last}
    final_clean = {(r.trial, r.scheme): r.global_loss for r in clean if r.round == last}
    wins = sum(final_clean[(t, "proposed")] <= final_noisy[(t, "proposed")] for t in range(c.trials))
    decreased = True
    for t in range(c.trials):
        shards, _ = trial_shards(c, t)
        start = airfl.global_loss(airfl.init_state(c.fl.dim, c.fl.learning_rate), shards)
        decreased &= all(final_noisy[(t, s)] < start and final_clean[(t, s)] < start for s in c.schemes)
    record(8, "noiseless beats noisy in >= 18/20 paired trials, all schemes learn",
           wins >= 18 and decreased, f"{wins}/20 paired wins, all decreased={decreased}")


def test_09_scheduler_complexity():
    sizes = [100, 200, 400, 800]
    medians = []
    for k in sizes:
        p = SystemParams(num_devices=k)
        devices = draw_channels(9, 0, place_devices(9, p))
        ledger = EnergyLedger.fresh(k)
        times = []
        for _ in range(50):
            start = time.perf_counter()
            schedule_greedy(devices, ledger, 0, p)
            times.append(time.perf_counter() - start)
        medians.append(float(np.median(times)))
    slope = float(np.polyfit(np.log(sizes), np.log(medians), 1)[0])
    record(9, "scheduler runtime at most quadratic", slope <= 2.3,
           f"log-log slope {slope:.2f}, medians {[f'{m * 1e3:.2f}ms' for m in medians]}")


def test_10_simulate_is_deterministic(tmp_path, capsys):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        assert cli.main(["simulate", "--config", str(REFERENCE_CONFIG), "--seed", "7", "--out", str(path)]) == 0
    same = paths[0].read_bytes() == paths[1].read_bytes()
    record(10, "identical config and seed give byte-identical CSV", same,
           f"{paths[0].stat().st_size} bytes")
