"""Multiplicative perturbation of processing times and the smoothed-ratio harness.

Every random number is a pure function of ``(seed, trial, job id, draw)``: a
SplitMix64-style counter hash, evaluated with numpy on whole arrays. Results
therefore do not depend on iteration order or on how trials are spread over
worker processes.
"""

from __future__ import annotations

import copy
import enum
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import norm

from .core import Instance, max_flow
from .offline import (
    BRUTE_FORCE_MAX_N,
    DP_STATE_BUDGET,
    GuardError,
    brute_force_opt,
    dp_opt,
    dp_state_count,
    lower_bound,
)
from .policies import Policy, simulate

NORMAL_VARIANCE_DIVISOR = 2.64

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_GAMMA_DRAW = np.uint64(0xD1B54A32D192ED03)
_GAMMA_TRIAL = np.uint64(0xCA5A826395121157)


def _mix64(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    x ^= x >> np.uint64(30)
    x *= np.uint64(0xBF58476D1CE4E5B9)
    x ^= x >> np.uint64(27)
    x *= np.uint64(0x94D049BB133111EB)
    x ^= x >> np.uint64(31)
    return x


def counter_uniforms(seed: int, trial, job, draw) -> np.ndarray:
    """Uniforms in (0, 1) keyed by broadcastable ``trial``, ``job`` and ``draw`` arrays."""
    with np.errstate(over="ignore"):
        base = _mix64(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))
        t = np.asarray(trial, dtype=np.uint64)
        j = np.asarray(job, dtype=np.uint64)
        d = np.asarray(draw, dtype=np.uint64)
        stream = _mix64(base + (t + np.uint64(1)) * _GAMMA_TRIAL)
        stream = _mix64(stream + (j + np.uint64(1)) * _GAMMA)
        bits = _mix64(stream + (d + np.uint64(1)) * _GAMMA_DRAW)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


class Smoothing(str, enum.Enum):
    UNIFORM = "uniform"
    TRUNC_NORMAL = "normal"


@dataclass(frozen=True)
class PerturbationSpec:
    kind: Smoothing
    epsilon: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")

    @property
    def sigma(self) -> float:
        return self.epsilon / math.sqrt(NORMAL_VARIANCE_DIVISOR)


def truncated_variance(sigma: float, bound: float = 1.0) -> float:
    """Variance of N(0, sigma^2) truncated to (-bound, bound)."""
    b = bound / sigma
    return sigma**2 * (1 - 2 * b * norm.pdf(b) / (2 * norm.cdf(b) - 1))


def noise(spec: PerturbationSpec, job_ids, trial=0) -> np.ndarray:
    """Draw X_j for the given job ids (broadcast against ``trial``)."""
    job_ids, trial = np.broadcast_arrays(np.asarray(job_ids), np.asarray(trial))
    if spec.kind is Smoothing.UNIFORM:
        u = counter_uniforms(spec.seed, trial, job_ids, 0)
        return spec.epsilon * (2.0 * u - 1.0)

    # rejection from the untruncated normal; rejected entries move to the next draw index
    out = np.empty(job_ids.shape)
    todo = np.ones(job_ids.shape, dtype=bool)
    draw = 0
    while todo.any():
        x = spec.sigma * ndtri(counter_uniforms(spec.seed, trial[todo], job_ids[todo], draw))
        ok = np.abs(x) < 1.0
        idx = np.flatnonzero(todo)
        out.flat[idx[ok]] = x[ok]
        todo.flat[idx[ok]] = False
        draw += 1
    return out


def perturb(instance: Instance, spec: PerturbationSpec, trial: int = 0) -> Instance:
    x = noise(spec, np.arange(instance.n), trial)
    sizes = [j.size * (1.0 + xj) for j, xj in zip(instance.jobs, x)]
    return instance.with_sizes(sizes)


# --------------------------------------------------------------------------
# smoothed experiment


class OptMode(str, enum.Enum):
    EXACT_DP = "dp"
    EXACT_BRUTE = "brute"
    LOWER_BOUND_PROXY = "lb"


@dataclass(frozen=True)
class TrialResult:
    trial: int
    alg_flow: float
    opt_or_bound: float
    ratio: float


@dataclass(frozen=True)
class SmoothedRunReport:
    trials: int
    per_trial: tuple[TrialResult, ...]
    mean_ratio: float
    median_ratio: float
    std_error: float
    opt_mode: OptMode
    baseline_ratio: float | None = None

    def to_csv(self) -> str:
        rows = ["trial,alg_flow,opt_or_bound,ratio,opt_mode"]
        for t in self.per_trial:
            rows.append(f"{t.trial},{t.alg_flow!r},{t.opt_or_bound!r},{t.ratio!r},{self.opt_mode.value}")
        base = "" if self.baseline_ratio is None else repr(self.baseline_ratio)
        rows.append(
            f"summary,mean={self.mean_ratio!r},median={self.median_ratio!r},"
            f"stderr={self.std_error!r},baseline={base}"
        )
        return "\n".join(rows) + "\n"


def check_opt_mode(instance: Instance, opt_mode: OptMode) -> None:
    if opt_mode is OptMode.EXACT_BRUTE and instance.n > BRUTE_FORCE_MAX_N:
        raise GuardError(
            f"brute force is limited to n <= {BRUTE_FORCE_MAX_N}; use the lower-bound proxy"
        )
    if opt_mode is OptMode.EXACT_DP and dp_state_count(instance) > DP_STATE_BUDGET:
        raise GuardError("DP state budget exceeded; use the lower-bound proxy")


def denominator(instance: Instance, opt_mode: OptMode) -> float:
    if opt_mode is OptMode.EXACT_DP:
        return dp_opt(instance).opt_flow
    if opt_mode is OptMode.EXACT_BRUTE:
        return brute_force_opt(instance).opt_flow
    return lower_bound(instance)


def _one_trial(args) -> TrialResult:
    instance, spec, trial, policy, opt_mode = args
    pert = perturb(instance, spec, trial)
    alg = max_flow(pert, simulate(pert, copy.deepcopy(policy)))
    den = denominator(pert, opt_mode)
    return TrialResult(trial, alg, den, alg / den)


def smoothed_experiment(
    instance: Instance,
    spec: PerturbationSpec,
    trials: int,
    policy: Policy,
    opt_mode: OptMode = OptMode.EXACT_DP,
    jobs: int = 1,
    baseline: bool = True,
) -> SmoothedRunReport:
    """Monte-Carlo estimate of the expected ratio under perturbation.

    The instance is fixed before any noise is drawn. With the lower-bound
    proxy each ratio over-estimates the true one.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    check_opt_mode(instance, opt_mode)
    work = [(instance, spec, t, policy, opt_mode) for t in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_one_trial, work))
    else:
        results = [_one_trial(w) for w in work]
    results.sort(key=lambda r: r.trial)

    ratios = [r.ratio for r in results]
    mean = statistics.fmean(ratios)
    stderr = statistics.stdev(ratios) / math.sqrt(len(ratios)) if len(ratios) > 1 else 0.0
    base = None
    if baseline:
        base = max_flow(instance, simulate(instance, copy.deepcopy(policy))) / denominator(
            instance, opt_mode
        )
    return SmoothedRunReport(
        trials, tuple(results), mean, statistics.median(ratios), stderr, opt_mode, base
    )


def tail_probability_test(
    sizes, spec: PerturbationSpec, samples: int
) -> tuple[float, float]:
    """Empirical frequencies of the upward and downward workload deviation events.

    The threshold is ``(eps / 5) * sqrt(floor(w) / 3)`` for total workload ``w``.
    """
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    p = np.asarray(sizes, dtype=float)
    w = float(p.sum())
    gap = spec.epsilon / 5 * math.sqrt(math.floor(w) / 3)
    trial = np.arange(samples)[:, None]
    job = np.arange(len(p))[None, :]
    shift = (noise(spec, job, trial) * p).sum(axis=1)
    return float(np.mean(shift >= gap)), float(np.mean(shift <= -gap))
