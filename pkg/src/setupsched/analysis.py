"""Diagnostics that replay the structures used to analyse BALANCE.

Includes the size-oblivious setup estimate, candidate-interval partitioning
with dense/sparse labels, extraction of the high-flow suffix of one balance
level, and checkers for the structural properties BALANCE schedules obey.
Logarithms are natural logarithms.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass

from .core import (
    TOL,
    Batch,
    EntryKind,
    Instance,
    Interval,
    Schedule,
    ScheduleError,
    flow_report,
    workload_in,
)
from .policies import PendingJob, pick_adjusted

DEFAULT_ALPHA = 13.0
DEFAULT_DELTA = 3.0


# --------------------------------------------------------------------------
# setup estimate


def setup_sequence(instance: Instance, interval: Interval, gamma: float) -> list[int]:
    """Order jobs released in ``interval`` by the penalised-release rule.

    Each step takes the job with the smallest release, where jobs whose type
    differs from the previous job's type pay a penalty of ``gamma``. Only
    releases and types are read.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    queues: dict[int, list[PendingJob]] = {}
    for j in instance.jobs:
        if j.release in interval:
            queues.setdefault(j.type_id, []).append(PendingJob(j.id, j.release, j.type_id))
    heads = {t: 0 for t in queues}
    out: list[int] = []
    last: int | None = None
    total = sum(len(q) for q in queues.values())
    while len(out) < total:
        front = [queues[t][i] for t, i in heads.items() if i < len(queues[t])]
        pick = pick_adjusted(front, last, gamma)
        heads[pick.type_id] += 1
        out.append(pick.job_id)
        last = pick.type_id
    return out


def setup_estimate(
    instance: Instance, interval: Interval, gamma: float, count_first: bool = True
) -> int:
    """Number of type changes along :func:`setup_sequence`.

    With ``count_first`` the first job counts as a change (its predecessor
    has no type).
    """
    seq = setup_sequence(instance, interval, gamma)
    changes = 0
    last: int | None = None
    for k, j in enumerate(seq):
        t = instance.jobs[j].type_id
        if t != last and (k > 0 or count_first):
            changes += 1
        last = t
    return changes


# --------------------------------------------------------------------------
# partition into candidate groups


class Density(str, enum.Enum):
    DENSE = "DENSE"
    SPARSE = "SPARSE"


@dataclass(frozen=True)
class PartitionConfig:
    gamma: float
    epsilon: float
    setup: float
    n: int
    c2: float = 1.0

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.n < 2:
            raise ValueError("partitioning needs n >= 2 (log n must be positive)")

    @classmethod
    def for_instance(
        cls, instance: Instance, gamma: float, epsilon: float, c2: float = 1.0
    ) -> PartitionConfig:
        return cls(gamma, epsilon, instance.setup, instance.n, c2)

    @property
    def mu(self) -> int:
        raw = self.epsilon**2 * self.gamma / (self.c2 * self.setup**2 * math.log(self.n) ** 2)
        return max(1, math.ceil(raw))


def choose_gamma(
    alpha: float, q: int, epsilon: float, setup: float, n: int, c1: float | None = None, c2: float = 1.0
) -> float:
    """``alpha**(i-1)`` for the largest ``i`` with ``alpha**i <= c1 eps^-2 alpha^(q+1) s log^2 n``."""
    if c1 is None:
        c1 = alpha * c2
    cap = c1 * epsilon**-2 * alpha ** (q + 1) * setup * math.log(n) ** 2
    i = math.floor(math.log(cap, alpha))
    # guard the floor against rounding in log()
    while alpha ** (i + 1) <= cap:
        i += 1
    while alpha**i > cap:
        i -= 1
    return alpha ** (i - 1)


@dataclass(frozen=True)
class GroupStats:
    workload: float
    setup_estimate: int
    label: Density


@dataclass(frozen=True)
class PartitionReport:
    candidates: tuple[Interval, ...]
    groups: tuple[Interval, ...]
    per_group: tuple[GroupStats, ...]
    mu: int

    def to_csv(self) -> str:
        rows = [
            f"# mu={self.mu} candidates={len(self.candidates)} log=natural",
            "group,lo,hi,lo_open,workload,setup_estimate,label,candidates",
        ]
        for g, (iv, st) in enumerate(zip(self.groups, self.per_group)):
            inside = sum(1 for c in self.candidates if c.hi in iv)
            rows.append(
                f"{g},{iv.lo!r},{iv.hi!r},{int(iv.lo_open)},{st.workload!r},"
                f"{st.setup_estimate},{st.label.value},{inside}"
            )
        return "\n".join(rows) + "\n"


def find_candidates(instance: Instance, gamma: float) -> list[Interval]:
    """Greedy earliest non-overlapping windows of length ``gamma`` that hold a heavy type.

    A window ``[a, a + gamma]`` is a candidate if some single type releases
    at least ``gamma / 4`` workload inside it. Windows may touch but not
    overlap. Window workloads only change at ``r_j`` and ``r_j - gamma``, and
    at those points they dominate both neighbourhoods, so checking the
    previous right end plus those breakpoints is exhaustive.
    """
    per_type: dict[int, tuple[list[float], list[float]]] = {}
    for j in instance.jobs:
        rs, cum = per_type.setdefault(j.type_id, ([], [0.0]))
        rs.append(j.release)
        cum.append(cum[-1] + j.size)
    need = gamma / 4

    def heavy(a: float) -> bool:
        for rs, cum in per_type.values():
            lo = bisect.bisect_left(rs, a - TOL)
            hi = bisect.bisect_right(rs, a + gamma + TOL)
            if cum[hi] - cum[lo] >= need - TOL:
                return True
        return False

    points = sorted({j.release for j in instance.jobs} | {j.release - gamma for j in instance.jobs})
    out: list[Interval] = []
    floor = -math.inf
    k = 0
    while True:
        found = None
        if out and heavy(floor):
            found = floor
        else:
            k = bisect.bisect_right(points, floor, lo=k)
            while k < len(points):
                if heavy(points[k]):
                    found = points[k]
                    break
                k += 1
        if found is None:
            return out
        out.append(Interval(found, found + gamma))
        floor = found + gamma


def partition(instance: Instance, config: PartitionConfig) -> PartitionReport:
    if instance.n == 0:
        raise ValueError("cannot partition an empty instance")
    r_min = instance.jobs[0].release
    r_max = instance.jobs[-1].release
    cands = find_candidates(instance, config.gamma)
    mu = config.mu
    cuts = [cands[m - 1].hi for m in range(mu, len(cands) + 1, mu)]
    # the last full group absorbs the trailing candidates and ends at r_max
    cuts = [c for c in cuts[:-1] if c < r_max]
    bounds = [r_min] + cuts + [r_max]
    groups = tuple(
        Interval(bounds[g], bounds[g + 1], lo_open=g > 0) for g in range(len(bounds) - 1)
    )
    stats = []
    for iv in groups:
        w = workload_in(instance, iv)
        ns = setup_estimate(instance, iv, config.gamma)
        dense = w + ns * instance.setup >= iv.length - TOL
        stats.append(GroupStats(w, ns, Density.DENSE if dense else Density.SPARSE))
    return PartitionReport(tuple(cands), groups, tuple(stats), mu)


# --------------------------------------------------------------------------
# subschedules of one balance level


@dataclass(frozen=True)
class SubscheduleView:
    q: int
    delta: float
    alpha: float
    jobs: tuple[int, ...]
    batches: tuple[Batch, ...]
    release_span: tuple[float, float]

    @property
    def level(self) -> float:
        return self.alpha**self.q


def batch_starts(schedule: Schedule) -> set[int]:
    """Jobs directly preceded by a setup (since the previous job)."""
    out: set[int] = set()
    pending_setup = False
    for e in schedule.entries:
        if e.kind is EntryKind.SETUP:
            pending_setup = True
        elif e.kind is EntryKind.JOB:
            if pending_setup:
                out.add(e.job_id)
            pending_setup = False
    return out


def _at_level(lam: float, level: float) -> bool:
    return math.isclose(lam, level, rel_tol=1e-12)


def extract_subschedule(
    instance: Instance,
    schedule: Schedule,
    q: int,
    alpha: float = DEFAULT_ALPHA,
    delta: float = DEFAULT_DELTA,
) -> SubscheduleView | None:
    """Suffix of the jobs run at balance level ``alpha**q``.

    The suffix starts at the last job of that level which both starts a
    batch and has flow at most ``(alpha - delta) * alpha**q``. Returns
    ``None`` when the level is never used or no job qualifies.
    """
    if schedule.lambda_trace is None:
        raise ScheduleError("schedule carries no lambda trace")
    level = alpha**q
    order = schedule.job_order()
    at = [k for k, j in enumerate(order) if _at_level(schedule.lambda_trace[j], level)]
    if not at:
        return None
    first, last = at[0], at[-1]
    flows = flow_report(instance, schedule).per_job_flow
    starts = batch_starts(schedule)
    cap = (alpha - delta) * level + TOL
    begin = None
    for k in range(last, first - 1, -1):
        j = order[k]
        if j in starts and flows[j] <= cap:
            begin = k
            break
    if begin is None:
        return None
    ids = order[begin : last + 1]
    batches: list[Batch] = []
    current: list[int] = []
    for j in ids:
        if current and j in starts:
            batches.append(_mk_batch(instance, current))
            current = []
        current.append(j)
    batches.append(_mk_batch(instance, current))
    span = (instance.jobs[ids[0]].release, instance.jobs[ids[-1]].release)
    return SubscheduleView(q, delta, alpha, tuple(ids), tuple(batches), span)


def _mk_batch(instance: Instance, ids: list[int]) -> Batch:
    return Batch(instance.jobs[ids[0]].type_id, tuple(ids), sum(instance.jobs[j].size for j in ids))


# --------------------------------------------------------------------------
# property checkers


def check_balance_properties(instance: Instance, schedule: Schedule) -> list[str]:
    """Check FIFO within types, the cross-type release gap and the consecutive-flow bound."""
    if schedule.lambda_trace is None:
        raise ScheduleError("schedule carries no lambda trace")
    lam = schedule.lambda_trace
    jobs = instance.jobs
    order = schedule.job_order()
    flows = flow_report(instance, schedule).per_job_flow
    out: list[str] = []

    last_release: dict[int, float] = {}
    for j in order:
        t = jobs[j].type_id
        if jobs[j].release < last_release.get(t, -math.inf):
            out.append(f"job {j}: type {t} not processed in release order")
        last_release[t] = jobs[j].release

    # min release among later jobs, per type
    later: dict[int, float] = {}
    for j in reversed(order):
        t = jobs[j].type_id
        others = [r for tt, r in later.items() if tt != t]
        if others and min(others) < jobs[j].release - lam[j] - TOL:
            out.append(f"job {j}: a later job of another type was released more than lambda earlier")
        later[t] = min(later.get(t, math.inf), jobs[j].release)

    for a, b in zip(order, order[1:]):
        bound = flows[a] + jobs[b].size + instance.setup + lam[a]
        if flows[b] > bound + TOL:
            out.append(f"jobs {a}->{b}: flow {flows[b]} exceeds {bound}")
    return out


def check_level_lemmas(
    instance: Instance, schedule: Schedule, view: SubscheduleView
) -> list[str]:
    """Flow, workload and release-gap properties of a level suffix.

    Meaningful when ``alpha**q`` is at least the optimum and the run's max
    flow exceeds ``alpha**(q+1)``.
    """
    level = view.level
    jobs = instance.jobs
    flows = flow_report(instance, schedule).per_job_flow
    out: list[str] = []
    for j in view.jobs:
        if flows[j] < 3 * level - TOL:
            out.append(f"job {j}: flow {flows[j]} below 3 * {level}")
    ell = len(view.batches)
    lhs = sum(b.workload for b in view.batches) + view.release_span[0] - view.release_span[1]
    rhs = view.delta * level - (ell - 1) * instance.setup
    if lhs < rhs - TOL:
        out.append(f"workload inequality fails: {lhs} < {rhs}")
    seen: dict[int, float] = {}
    for b in view.batches:
        r = jobs[b.job_ids[0]].release
        if b.type_id in seen and not r > seen[b.type_id] + level - TOL:
            out.append(f"batch of type {b.type_id} at release {r} within {level} of the previous one")
        seen[b.type_id] = r
    if instance.num_types == 2:
        heads = [jobs[b.job_ids[0]].release for b in view.batches]
        for i in range(2, len(heads)):
            if not heads[i] > heads[i - 1] + level - TOL:
                out.append(f"two-type gap fails at batch {i + 1}")
    return out
