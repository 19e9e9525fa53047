"""Clairvoyant optimum and lower bounds for the maximum flow time.

Two independent exact routes are provided: a branch-and-bound enumeration of
all job orders (small n only) and a dynamic program over per-type progress
counters that keeps a Pareto front of (completion, max flow) labels. Both
schedule every order at earliest feasible times; deliberately delaying a
start can never lower a flow time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import TOL, Instance, Schedule, flow_report, schedule_from_order

BRUTE_FORCE_MAX_N = 10
DP_STATE_BUDGET = 10**7


class GuardError(ValueError):
    """An exact solver refused an instance that exceeds its size guard."""


@dataclass(frozen=True)
class OptResult:
    opt_flow: float
    witness: Schedule


def brute_force_opt(instance: Instance, max_n: int = BRUTE_FORCE_MAX_N) -> OptResult:
    """Exact optimum by enumerating job permutations.

    Branches are cut once their partial max flow, or a per-job lower bound on
    the remaining jobs, reaches the best value found so far. Enumeration is
    lexicographic in job ids, so the witness is the lexicographically first
    optimal order.
    """
    n = instance.n
    if n > max_n:
        raise GuardError(f"brute force is limited to n <= {max_n} jobs (got {n})")
    if n == 0:
        return OptResult(0.0, Schedule(()))
    jobs = instance.jobs
    s = instance.setup
    best = math.inf
    best_order: list[int] = []
    order: list[int] = []
    used = [False] * n

    def remaining_bound(now: float, last: int | None) -> float:
        # a job of another type waits for some setup that starts after `now`,
        # though not necessarily the one directly before it
        lb = 0.0
        for j in jobs:
            if used[j.id]:
                continue
            t = max(now + (s if j.type_id != last else 0.0), j.release)
            lb = max(lb, t + j.size - j.release)
        return lb

    def dfs(now: float, last: int | None, worst: float) -> None:
        nonlocal best, best_order
        if len(order) == n:
            if worst < best:
                best, best_order = worst, list(order)
            return
        if max(worst, remaining_bound(now, last)) >= best:
            return
        for j in jobs:
            if used[j.id]:
                continue
            start = max(now, j.release) + (s if j.type_id != last else 0.0)
            end = start + j.size
            w = max(worst, end - j.release)
            if w >= best:
                continue
            used[j.id] = True
            order.append(j.id)
            dfs(end, j.type_id, w)
            order.pop()
            used[j.id] = False

    dfs(0.0, None, 0.0)
    return OptResult(best, schedule_from_order(instance, best_order))


@dataclass
class ParetoLabel:
    counts: tuple[int, ...]
    last_type: int | None
    completion: float
    max_flow_so_far: float
    parent: ParetoLabel | None = None
    job_id: int | None = None


def _pareto(labels: list[ParetoLabel]) -> list[ParetoLabel]:
    labels.sort(key=lambda x: (x.completion, x.max_flow_so_far))
    kept: list[ParetoLabel] = []
    for lab in labels:
        if kept and lab.max_flow_so_far >= kept[-1].max_flow_so_far - TOL:
            continue
        kept.append(lab)
    return kept


def dp_state_count(instance: Instance) -> int:
    sizes = [0] * instance.num_types
    for j in instance.jobs:
        sizes[j.type_id] += 1
    used = [c for c in sizes if c]
    return math.prod(c + 1 for c in used) * max(len(used), 1)


def dp_opt(instance: Instance, state_budget: int = DP_STATE_BUDGET) -> OptResult:
    """Exact optimum by dynamic programming over per-type prefixes.

    Jobs of one type are taken in release order, which loses nothing for the
    max-flow objective. A DP cell is (jobs done per type, last type) and
    holds the mutually non-dominated (completion, max flow) labels.
    """
    if instance.n == 0:
        return OptResult(0.0, Schedule(()))
    states = dp_state_count(instance)
    if states > state_budget:
        raise GuardError(f"DP needs {states} states, budget is {state_budget}")

    types = sorted({j.type_id for j in instance.jobs})
    queues = [[j for j in instance.jobs if j.type_id == t] for t in types]
    s = instance.setup
    start = tuple(0 for _ in types)
    layer: dict[tuple[tuple[int, ...], int | None], list[ParetoLabel]] = {
        (start, None): [ParetoLabel(start, None, 0.0, 0.0)]
    }
    for _ in range(instance.n):
        nxt: dict[tuple[tuple[int, ...], int | None], list[ParetoLabel]] = {}
        for (counts, last), labels in layer.items():
            for k, queue in enumerate(queues):
                if counts[k] == len(queue):
                    continue
                job = queue[counts[k]]
                new_counts = counts[:k] + (counts[k] + 1,) + counts[k + 1 :]
                bucket = nxt.setdefault((new_counts, k), [])
                switch = s if k != last else 0.0
                for lab in labels:
                    end = max(lab.completion, job.release) + switch + job.size
                    bucket.append(
                        ParetoLabel(
                            new_counts,
                            k,
                            end,
                            max(lab.max_flow_so_far, end - job.release),
                            lab,
                            job.id,
                        )
                    )
        layer = {key: _pareto(labels) for key, labels in nxt.items()}

    final = [lab for labels in layer.values() for lab in labels]
    best = min(final, key=lambda x: (x.max_flow_so_far, x.completion))
    order: list[int] = []
    node: ParetoLabel | None = best
    while node is not None and node.job_id is not None:
        order.append(node.job_id)
        node = node.parent
    order.reverse()
    witness = schedule_from_order(instance, order)
    return OptResult(flow_report(instance, witness).max_flow, witness)


# --------------------------------------------------------------------------
# lower bounds


@dataclass(frozen=True)
class LowerBound:
    setup: float
    p_max: float
    interval: float
    interval_lo: float
    interval_hi: float

    @property
    def value(self) -> float:
        return max(self.setup, self.p_max, self.interval)


def lower_bound_components(instance: Instance) -> LowerBound:
    """Certified lower bounds on the optimal max flow time.

    The interval term maximises ``w(I) + (d(I) - 1) * s - |I|`` over closed
    intervals whose endpoints are release times, where ``d(I)`` counts the
    distinct types released in ``I``. Jobs of ``d`` types must be separated by
    at least ``d - 1`` setups, and all of them start no earlier than ``l(I)``.
    """
    n = instance.n
    if n == 0:
        return LowerBound(instance.setup, 0.0, -math.inf, 0.0, 0.0)
    s = instance.setup
    r = np.array([j.release for j in instance.jobs])
    p = np.array([j.size for j in instance.jobs])
    types = [j.type_id for j in instance.jobs]
    cum = np.concatenate(([0.0], np.cumsum(p)))

    prev_same = np.full(n, -1)
    last_seen: dict[int, int] = {}
    for m, t in enumerate(types):
        prev_same[m] = last_seen.get(t, -1)
        last_seen[t] = m

    # closed intervals: a left end takes the whole group of equal releases
    lefts = [i for i in range(n) if i == 0 or r[i - 1] < r[i]]
    is_right = np.append(r[1:] > r[:-1], True)

    best, best_lo, best_hi = -math.inf, 0.0, 0.0
    for i in lefts:
        first_of_type = prev_same[i:] < i
        d = np.cumsum(first_of_type)
        vals = (cum[i + 1 :] - cum[i]) + (d - 1) * s - (r[i:] - r[i])
        vals = np.where(is_right[i:], vals, -np.inf)
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, best_lo, best_hi = float(vals[k]), float(r[i]), float(r[i + k])
    return LowerBound(s, float(p.max()), best, best_lo, best_hi)


def lower_bound(instance: Instance) -> float:
    return lower_bound_components(instance).value
