"""Adaptive adversary that forces any greedy-like policy into Omega(sqrt n) flow.

Phase ``i`` (0-based) starts at ``i * (P + 2)`` and releases ``P`` unit jobs at
consecutive integer times using two fresh types ``2i`` and ``2i + 1``. The
first two jobs have one of each type; the remaining ``P - 2`` jobs all get the
type the policy starts first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import Instance, Schedule, schedule_from_order
from .policies import Policy, simulate

ADVERSARY_SETUP = 1.0


class AdversaryShapeError(ValueError):
    pass


@dataclass(frozen=True)
class AdversaryConfig:
    num_phases: int
    setup: float = ADVERSARY_SETUP
    phase_gap: int = 2

    def __post_init__(self) -> None:
        if self.num_phases < 2:
            raise ValueError("need at least two phases")

    @classmethod
    def from_n(cls, n: int) -> AdversaryConfig:
        return cls(math.isqrt(n))

    @property
    def n(self) -> int:
        return self.num_phases**2

    def phase_start(self, phase: int) -> float:
        return float(phase * (self.num_phases + self.phase_gap))


def _first_started(schedule: Schedule, instance: Instance, pair: tuple[int, int]) -> int:
    """Which of two types (by type id) has its phase job started first."""
    starts = schedule.start_times()
    best: tuple[float, int] | None = None
    for job in instance.jobs:
        if job.type_id in pair:
            key = (starts[job.id], job.id)
            if best is None or key < best:
                best = key
    return instance.jobs[best[1]].type_id


def build_adversary_instance(config: AdversaryConfig, policy: Policy) -> tuple[Instance, Schedule]:
    """Build the instance phase by phase against ``policy``.

    For each phase the simulation is replayed with that phase's remaining
    releases withheld; whichever of the two opening jobs the policy starts
    first fixes the type of the rest of the phase. Greedy-like policies rank
    jobs without looking at sizes, so this preference does not depend on
    jobs that are not yet visible.
    """
    P = config.num_phases
    committed: list[tuple[float, float, int]] = []
    num_types = 2 * P
    for phase in range(P):
        t0 = config.phase_start(phase)
        first, second = 2 * phase, 2 * phase + 1
        opening = [(t0, 1.0, first), (t0 + 1, 1.0, second)]
        trial = Instance.build(config.setup, committed + opening, num_types)
        preferred = _first_started(simulate(trial, policy), trial, (first, second))
        committed += opening
        committed += [(t0 + step, 1.0, preferred) for step in range(2, P)]
    instance = Instance.build(config.setup, committed, num_types)
    return instance, simulate(instance, policy)


def _phases(instance: Instance) -> list[list[int]]:
    n = instance.n
    P = math.isqrt(n)
    if P < 2 or P * P != n:
        raise AdversaryShapeError(f"adversary instances have a square number of jobs, got {n}")
    if instance.setup != ADVERSARY_SETUP or instance.num_types != 2 * P:
        raise AdversaryShapeError("adversary instances have s = 1 and 2P types")
    phases: list[list[int]] = [[] for _ in range(P)]
    for job in instance.jobs:
        phase, step = divmod(job.release, P + 2)
        if (
            job.size != 1.0
            or job.release != int(job.release)
            or step >= P
            or job.type_id // 2 != phase
        ):
            raise AdversaryShapeError(f"job {job.id} does not fit the phase grid")
        phases[int(phase)].append(job.id)
    if any(len(ids) != P for ids in phases):
        raise AdversaryShapeError("every phase must release exactly P jobs")
    return phases


def optimal_phase_schedule(instance: Instance) -> Schedule:
    """Per phase: the lone job of the minority type first, then the bulk in release order."""
    order: list[int] = []
    for ids in _phases(instance):
        by_type: dict[int, list[int]] = {}
        for j in ids:
            by_type.setdefault(instance.jobs[j].type_id, []).append(j)
        groups = sorted(by_type.values(), key=lambda js: (len(js), js[0]))
        if len(groups) != 2 or len(groups[0]) != 1:
            raise AdversaryShapeError("each phase needs one lone job and one bulk type")
        # with P = 2 both groups are single jobs; release order decides
        order += groups[0] + groups[1]
    return schedule_from_order(instance, order)
