from __future__ import annotations

import math

import numpy as np
import pytest

from setupsched.core import Instance
from setupsched.offline import GuardError
from setupsched.policies import balance_policy
from setupsched.smoothing import (
    OptMode,
    PerturbationSpec,
    Smoothing,
    counter_uniforms,
    noise,
    perturb,
    smoothed_experiment,
    tail_probability_test,
    truncated_variance,
)


def test_sigma_value():
    assert PerturbationSpec(Smoothing.TRUNC_NORMAL, 0.5).sigma == pytest.approx(0.307729, abs=1e-6)


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.2])
def test_epsilon_range(eps):
    with pytest.raises(ValueError):
        PerturbationSpec(Smoothing.UNIFORM, eps)


def test_uniforms_in_open_unit_interval():
    u = counter_uniforms(7, np.arange(1000)[:, None], np.arange(100)[None, :], 0)
    assert u.shape == (1000, 100)
    assert 0 < u.min() and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.005


def test_noise_is_keyed_not_sequential():
    spec = PerturbationSpec(Smoothing.TRUNC_NORMAL, 0.7, seed=3)
    full = noise(spec, np.arange(50), 4)
    assert np.array_equal(noise(spec, np.arange(50)[::-1], 4), full[::-1])
    assert noise(spec, [17], 4)[0] == full[17]
    assert not np.array_equal(noise(spec, np.arange(50), 5), full)


def test_truncated_variance_limits():
    # a tiny sigma barely notices the truncation; a wide one approaches the uniform variance 1/3
    assert truncated_variance(0.01) == pytest.approx(1e-4, rel=1e-9)
    assert truncated_variance(100.0) == pytest.approx(1 / 3, rel=1e-3)


def test_perturb_keeps_releases_and_types():
    inst = Instance.build(1.0, [(0, 2, 0), (1, 3, 1)])
    spec = PerturbationSpec(Smoothing.UNIFORM, 0.5, seed=1)
    pert = perturb(inst, spec, trial=2)
    for a, b in zip(inst.jobs, pert.jobs):
        assert (a.release, a.type_id) == (b.release, b.type_id)
        assert 0.5 * a.size <= b.size <= 1.5 * a.size
    assert perturb(inst, spec, trial=2) == pert


def test_experiment_parallel_matches_serial(e1):
    spec = PerturbationSpec(Smoothing.UNIFORM, 0.5, seed=9)
    serial = smoothed_experiment(e1, spec, 6, balance_policy())
    parallel = smoothed_experiment(e1, spec, 6, balance_policy(), jobs=2)
    assert serial == parallel
    assert [t.trial for t in serial.per_trial] == list(range(6))
    assert serial.baseline_ratio == pytest.approx(7 / 6.5)
    csv = serial.to_csv().splitlines()
    assert csv[0] == "trial,alg_flow,opt_or_bound,ratio,opt_mode"
    assert csv[-1].startswith("summary,")


def test_experiment_guard():
    inst = Instance.build(1.0, [(float(i), 1.0, i % 2) for i in range(12)])
    spec = PerturbationSpec(Smoothing.UNIFORM, 0.5)
    with pytest.raises(GuardError, match="lower-bound proxy"):
        smoothed_experiment(inst, spec, 2, balance_policy(), OptMode.EXACT_BRUTE)
    rep = smoothed_experiment(inst, spec, 2, balance_policy(), OptMode.LOWER_BOUND_PROXY)
    assert all(t.ratio >= 1 for t in rep.per_trial)


def test_tail_sample_floor():
    with pytest.raises(ValueError):
        tail_probability_test([1.0] * 10, PerturbationSpec(Smoothing.UNIFORM, 0.5), 999)


def test_tail_threshold_uses_floor():
    # total work 2.9 floors to 2; a tiny gap is crossed about half the time each way
    up, down = tail_probability_test([1.45, 1.45], PerturbationSpec(Smoothing.UNIFORM, 0.5), 4000)
    gap = 0.5 / 5 * math.sqrt(2 / 3)
    assert 0.2 < up < 0.5 and 0.2 < down < 0.5
    assert gap < 0.1
