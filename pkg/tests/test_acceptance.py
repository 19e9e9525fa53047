"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured values
before asserting, so ``pytest -v`` output doubles as the acceptance report.
Running this file directly prints the same lines without pytest.
"""

from __future__ import annotations

import functools
import math
import os
import time

import numpy as np
import pytest
from scipy.stats import norm

from conftest import random_corpus
from setupsched.adversary import AdversaryConfig, build_adversary_instance, optimal_phase_schedule
from setupsched.analysis import check_balance_properties, check_level_lemmas, extract_subschedule
from setupsched.core import max_flow, validate_schedule
from setupsched.offline import brute_force_opt, dp_opt, lower_bound
from setupsched.policies import balance_fixed_policy, balance_policy, fifo_policy, simulate
from setupsched.smoothing import (
    OptMode,
    PerturbationSpec,
    Smoothing,
    noise,
    smoothed_experiment,
    tail_probability_test,
)

TOL = 1e-9
ALPHA = 13.0


_write = print


@pytest.fixture(autouse=True)
def _terminal(pytestconfig):
    global _write
    reporter = pytestconfig.pluginmanager.getplugin("terminalreporter")
    _write = (lambda line: reporter.write_line("\n" + line)) if reporter else print
    yield
    _write = print


def report(number: int, ok: bool, detail: str) -> None:
    _write(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")


@functools.lru_cache(maxsize=None)
def small_corpus():
    # n <= 8, k <= 3, sizes in [1, 4], s in {1, 2}
    return tuple(random_corpus(200, 3, 8, 3))


@functools.lru_cache(maxsize=None)
def balance_runs():
    # half of the instances are crowded so that lambda actually grows
    out = []
    for inst in random_corpus(1000, 5, 50, 4, heavy=True):
        out.append((inst, simulate(inst, balance_policy(ALPHA))))
    return tuple(out)


def _adversary_check(number, make_policy, label):
    start = time.perf_counter()
    rows, ok = [], True
    for P in (4, 8, 16):
        inst, sched = build_adversary_instance(AdversaryConfig(P), make_policy())
        alg = max_flow(inst, sched)
        witness = optimal_phase_schedule(inst)
        valid = validate_schedule(inst, witness) == []
        opt = max_flow(inst, witness)
        good = alg >= P + 2 - TOL and valid and opt <= 5 + TOL
        ok &= good
        rows.append(f"P={P} alg={alg:g} need>={P + 2} opt<={opt:g}{'' if good else ' (short)'}")
    elapsed = time.perf_counter() - start
    return ok, elapsed, f"{label}: " + "; ".join(rows) + f"; {elapsed:.2f}s"


def test_criterion_01_adversary_balance():
    ok, elapsed, detail = _adversary_check(1, lambda: balance_policy(ALPHA), "balance")
    ok &= elapsed < 5
    report(1, ok, detail)
    assert ok


def test_criterion_02_adversary_other_greedy():
    ok_f, _, det_f = _adversary_check(2, fifo_policy, "fifo")
    ok_b, _, det_b = _adversary_check(2, lambda: balance_fixed_policy(13.0), "balance-fixed(13)")
    report(2, ok_f and ok_b, det_f + " | " + det_b)
    assert ok_f and ok_b


def test_criterion_03_oracle_equivalence():
    start = time.perf_counter()
    mismatches, invalid = 0, 0
    for inst in small_corpus():
        bf, dp = brute_force_opt(inst), dp_opt(inst)
        mismatches += abs(bf.opt_flow - dp.opt_flow) > TOL
        invalid += bool(validate_schedule(inst, bf.witness)) + bool(validate_schedule(inst, dp.witness))
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and invalid == 0 and elapsed < 60
    report(3, ok, f"200 instances, {mismatches} mismatches, {invalid} invalid witnesses, {elapsed:.1f}s")
    assert ok


def test_criterion_04_lower_bound_soundness():
    violations = 0
    slack = []
    for inst in small_corpus():
        opt = brute_force_opt(inst).opt_flow
        lb = lower_bound(inst)
        violations += lb > opt + TOL
        slack.append(lb / opt)
    ok = violations == 0
    report(4, ok, f"{violations} violations over 200, mean lb/opt {np.mean(slack):.3f}")
    assert ok


def test_criterion_05_balance_propositions():
    bad = 0
    first = None
    grown = 0
    for inst, sched in balance_runs():
        errors = check_balance_properties(inst, sched)
        bad += bool(errors)
        first = first or (errors[0] if errors else None)
        grown += max(sched.lambda_trace) > ALPHA
    ok = bad == 0
    report(5, ok, f"1000 runs (n <= 50), {bad} with violations, {grown} with lambda growth" + (f"; {first}" if first else ""))
    assert ok


def _f_star_corpus(count, seed, k_fixed=None):
    return random_corpus(count, seed, 14, 3, k_fixed=k_fixed)


def test_criterion_06_competitive_envelope():
    worst, loose_ok = 0.0, True
    for inst in _f_star_corpus(500, 6):
        F = max_flow(inst, simulate(inst, balance_policy(ALPHA)))
        opt = dp_opt(inst).opt_flow
        scale = opt + math.sqrt(inst.n * inst.p_max * inst.setup)
        loose_ok &= F <= ALPHA**3 * scale + TOL
        worst = max(worst, F / scale)
    ok = loose_ok and worst <= 5
    report(6, ok, f"500 instances, max F/(F*+sqrt(n p_max s)) = {worst:.4f} (band <= 5), 13^3 envelope {'holds' if loose_ok else 'broken'}")
    assert ok


def test_criterion_07_two_types():
    worst = 0.0
    for inst in _f_star_corpus(300, 7, k_fixed=2):
        F = max_flow(inst, simulate(inst, balance_policy(ALPHA)))
        worst = max(worst, F / dp_opt(inst).opt_flow)
    ok = worst <= ALPHA**3
    report(7, ok, f"300 k=2 instances, max F/F* = {worst:.4f}")
    assert ok


def test_criterion_08_distributions():
    eps = 0.5
    ids = np.arange(1_000_000)
    u = noise(PerturbationSpec(Smoothing.UNIFORM, eps, seed=11), ids)
    uni_ok = u.min() >= -eps and u.max() <= eps and u.min() < -eps + 1e-3 and u.max() > eps - 1e-3
    uni_ok &= abs(u.mean()) <= 0.002
    spec = PerturbationSpec(Smoothing.TRUNC_NORMAL, eps, seed=11)
    x = noise(spec, ids)
    sigma = spec.sigma
    b = 2 / sigma
    stated = sigma**2 * (1 - b * norm.pdf(b) / (2 * norm.cdf(b) - 1))
    b1 = 1 / sigma
    exact = sigma**2 * (1 - 2 * b1 * norm.pdf(b1) / (2 * norm.cdf(b1) - 1))
    var = x.var()
    normal_ok = np.abs(x).max() < 1 and abs(var / stated - 1) <= 0.02
    report(
        8,
        uni_ok and normal_ok,
        f"uniform [{u.min():.7f}, {u.max():.7f}] mean {u.mean():+.5f}; "
        f"normal max|x| {np.abs(x).max():.4f}, var {var:.6f} vs stated {stated:.6f} "
        f"({100 * (var / stated - 1):+.2f}%), exact truncation {exact:.6f} ({100 * (var / exact - 1):+.2f}%)",
    )
    assert uni_ok and normal_ok


def test_criterion_09_tails():
    start = time.perf_counter()
    parts, ok = [], True
    for kind in Smoothing:
        up, down = tail_probability_test([1.0] * 200, PerturbationSpec(kind, 0.5, seed=2), 10_000)
        ok &= up >= 0.08 and down >= 0.08
        parts.append(f"{kind.value} up {up:.4f} down {down:.4f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 10
    report(9, ok, "; ".join(parts) + f"; {elapsed:.2f}s")
    assert ok


def test_criterion_10_fragility():
    jobs = min(8, os.cpu_count() or 1)
    ratios = {}
    median64 = None
    for P in (16, 32, 64):
        inst, sched = build_adversary_instance(AdversaryConfig(P), balance_policy(ALPHA))
        proxy = max(5.0, max_flow(inst, optimal_phase_schedule(inst)))
        ratios[P] = max_flow(inst, sched) / proxy
        if P == 64:
            spec = PerturbationSpec(Smoothing.UNIFORM, 0.5, seed=0)
            rep = smoothed_experiment(
                inst, spec, 50, balance_policy(ALPHA), OptMode.LOWER_BOUND_PROXY, jobs=jobs, baseline=False
            )
            median64 = rep.median_ratio
    growth = (ratios[32] / ratios[16], ratios[64] / ratios[32])
    ok = min(growth) >= 1.5 and median64 <= 0.5 * ratios[64]
    report(
        10,
        ok,
        f"unperturbed ratios {ratios[16]:.2f}, {ratios[32]:.2f}, {ratios[64]:.2f} (growth {growth[0]:.3f}, {growth[1]:.3f}); "
        f"perturbed median at P=64 {median64:.3f} vs cap {0.5 * ratios[64]:.2f}",
    )
    assert ok


def test_criterion_11_lemma_replay():
    checked, bad, first = 0, 0, None
    for inst, sched in balance_runs():
        F = max_flow(inst, sched)
        lb = lower_bound(inst)
        q = 0
        while ALPHA ** (q + 1) < F:
            if ALPHA**q >= lb:
                view = extract_subschedule(inst, sched, q, ALPHA)
                if view is not None:
                    checked += 1
                    errors = check_level_lemmas(inst, sched, view)
                    bad += bool(errors)
                    first = first or (errors[0] if errors else None)
            q += 1
    ok = bad == 0
    note = "" if checked else " (no run reaches F > 13^(q+1) with 13^q >= lower bound)"
    report(11, ok, f"{checked} level views checked, {bad} with violations{note}" + (f"; {first}" if first else ""))
    assert ok


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
