"""Instances, schedules and the schedule algebra shared by every other module.

Times are doubles. Comparisons that decide feasibility or ties use the
absolute tolerance ``TOL``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

TOL = 1e-9


class ScheduleError(ValueError):
    """Raised when an operation needs a feasible schedule and gets a broken one."""


class InstanceFormatError(ValueError):
    def __init__(self, lineno: int, reason: str) -> None:
        self.lineno = lineno
        self.reason = reason
        super().__init__(f"line {lineno}: {reason}")


@dataclass(frozen=True)
class Job:
    id: int
    release: float
    size: float
    type_id: int


@dataclass(frozen=True)
class Instance:
    """A single-machine instance with a global setup time.

    Jobs are kept sorted by ``(release, id)`` and ``jobs[i].id == i``. Sizes
    only need to be positive so that perturbed instances are representable;
    unperturbed inputs from the model have sizes of at least 1.
    """

    setup: float
    jobs: tuple[Job, ...]
    num_types: int

    def __post_init__(self) -> None:
        if not self.setup > 0:
            raise ValueError(f"setup time must be positive, got {self.setup}")
        for i, job in enumerate(self.jobs):
            if job.id != i:
                raise ValueError(f"job at position {i} has id {job.id}")
            if not 0 <= job.type_id < self.num_types:
                raise ValueError(f"job {i} has type {job.type_id} outside [0, {self.num_types})")
            if not job.release >= 0:
                raise ValueError(f"job {i} has negative release {job.release}")
            if not job.size > 0:
                raise ValueError(f"job {i} has non-positive size {job.size}")
            if i and (job.release < self.jobs[i - 1].release):
                raise ValueError("jobs must be sorted by release time")

    @classmethod
    def build(
        cls,
        setup: float,
        jobs: Iterable[tuple[float, float, int]],
        num_types: int | None = None,
    ) -> Instance:
        """Build from ``(release, size, type_id)`` triples.

        Jobs are stably sorted by release and numbered in that order.
        """
        triples = sorted(
            ((float(r), float(p), int(t)) for r, p, t in jobs), key=lambda x: x[0]
        )
        if num_types is None:
            num_types = max((t for _, _, t in triples), default=-1) + 1
        return cls(
            setup=float(setup),
            jobs=tuple(Job(i, r, p, t) for i, (r, p, t) in enumerate(triples)),
            num_types=num_types,
        )

    @property
    def n(self) -> int:
        return len(self.jobs)

    @property
    def p_max(self) -> float:
        return max((j.size for j in self.jobs), default=0.0)

    @property
    def total_work(self) -> float:
        return sum(j.size for j in self.jobs)

    def with_sizes(self, sizes: Sequence[float]) -> Instance:
        if len(sizes) != self.n:
            raise ValueError("need one size per job")
        jobs = tuple(
            Job(j.id, j.release, float(p), j.type_id) for j, p in zip(self.jobs, sizes)
        )
        return Instance(self.setup, jobs, self.num_types)


class EntryKind(str, Enum):
    SETUP = "SETUP"
    JOB = "JOB"
    IDLE = "IDLE"


@dataclass(frozen=True)
class ScheduleEntry:
    kind: EntryKind
    start: float
    end: float
    job_id: int | None = None

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class Schedule:
    """Time-ordered, gap-free list of entries.

    ``lambda_trace[j]`` is the balance parameter in force when job ``j`` was
    started; only policies that carry such a parameter fill it in.
    """

    entries: tuple[ScheduleEntry, ...]
    lambda_trace: tuple[float, ...] | None = None

    def job_entries(self) -> list[ScheduleEntry]:
        return [e for e in self.entries if e.kind is EntryKind.JOB]

    def job_order(self) -> list[int]:
        return [e.job_id for e in self.entries if e.kind is EntryKind.JOB]

    def start_times(self) -> dict[int, float]:
        return {e.job_id: e.start for e in self.entries if e.kind is EntryKind.JOB}

    def completion_times(self) -> dict[int, float]:
        return {e.job_id: e.end for e in self.entries if e.kind is EntryKind.JOB}

    @property
    def makespan(self) -> float:
        return self.entries[-1].end if self.entries else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "start", "end", "job_id"])
        for e in self.entries:
            w.writerow(
                [e.kind.value, _fmt(e.start), _fmt(e.end), "" if e.job_id is None else e.job_id]
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> Schedule:
        rows = list(csv.DictReader(io.StringIO(text)))
        entries = tuple(
            ScheduleEntry(
                EntryKind(row["kind"]),
                float(row["start"]),
                float(row["end"]),
                int(row["job_id"]) if row["job_id"] else None,
            )
            for row in rows
        )
        return cls(entries)


@dataclass(frozen=True)
class Batch:
    type_id: int
    job_ids: tuple[int, ...]
    workload: float


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]``; ``lo_open`` makes it ``(lo, hi]``."""

    lo: float
    hi: float
    lo_open: bool = False

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def everything(cls) -> Interval:
        return cls(-math.inf, math.inf)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def __contains__(self, x: float) -> bool:
        if self.lo_open:
            return self.lo < x <= self.hi
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class FlowReport:
    per_job_flow: tuple[float, ...]
    max_flow: float
    argmax_job: int


# --------------------------------------------------------------------------
# schedule construction


@dataclass
class ScheduleBuilder:
    setup: float
    entries: list[ScheduleEntry] = field(default_factory=list)
    now: float | None = None
    active_type: int | None = None

    def run(self, job: Job) -> float:
        """Append ``job`` as early as possible; return its completion.

        A setup preceding a job never begins before that job's release.
        """
        if self.now is None:
            t = job.release
        else:
            t = max(self.now, job.release)
            if t > self.now + TOL:
                self.entries.append(ScheduleEntry(EntryKind.IDLE, self.now, t))
            else:
                t = self.now
        if job.type_id != self.active_type:
            self.entries.append(ScheduleEntry(EntryKind.SETUP, t, t + self.setup))
            t += self.setup
        end = t + job.size
        self.entries.append(ScheduleEntry(EntryKind.JOB, t, end, job.id))
        self.now = end
        self.active_type = job.type_id
        return end


def schedule_from_order(
    instance: Instance, order: Sequence[int], lambda_trace: Sequence[float] | None = None
) -> Schedule:
    """Earliest-start schedule processing jobs in ``order`` without deliberate idling."""
    b = ScheduleBuilder(instance.setup)
    for j in order:
        b.run(instance.jobs[j])
    return Schedule(tuple(b.entries), None if lambda_trace is None else tuple(lambda_trace))


# --------------------------------------------------------------------------
# schedule algebra


def validate_schedule(instance: Instance, schedule: Schedule) -> list[str]:
    """Return every feasibility violation, each tagged with its entry index."""
    out: list[str] = []
    jobs = instance.jobs
    seen: dict[int, int] = {}
    prev_end: float | None = None
    prev_type: int | None = None
    setups_since_job: list[int] = []

    for idx, e in enumerate(schedule.entries):
        if e.end < e.start - TOL:
            out.append(f"entry {idx}: ends before it starts")
        if prev_end is not None and abs(e.start - prev_end) > TOL:
            kind = "overlap" if e.start < prev_end else "gap"
            out.append(f"entry {idx}: {kind} with previous entry ({prev_end} -> {e.start})")
        prev_end = e.end

        if e.kind is EntryKind.SETUP:
            if abs(e.length - instance.setup) > TOL:
                out.append(f"entry {idx}: setup length {e.length} != {instance.setup}")
            setups_since_job.append(idx)
            continue
        if e.kind is EntryKind.IDLE:
            if e.job_id is not None:
                out.append(f"entry {idx}: idle entry carries a job id")
            continue

        j = e.job_id
        if j is None or not 0 <= j < len(jobs):
            out.append(f"entry {idx}: unknown job id {j}")
            continue
        if j in seen:
            out.append(f"entry {idx}: job {j} already scheduled at entry {seen[j]}")
        seen[j] = idx
        job = jobs[j]
        if e.start < job.release - TOL:
            out.append(f"entry {idx}: job {j} started before release ({e.start} < {job.release})")
        if abs(e.length - job.size) > TOL:
            out.append(f"entry {idx}: job {j} runs {e.length}, size is {job.size}")
        if prev_type is None or job.type_id != prev_type:
            if not setups_since_job:
                out.append(f"entry {idx}: missing setup before job {j}")
        elif setups_since_job:
            out.append(f"entry {setups_since_job[0]}: spurious setup between same-type jobs")
        if len(setups_since_job) > 1:
            out.append(f"entry {setups_since_job[1]}: repeated setup before job {j}")
        for s_idx in setups_since_job:
            if schedule.entries[s_idx].start < job.release - TOL:
                out.append(f"entry {s_idx}: setup for job {j} starts before its release")
        setups_since_job = []
        prev_type = job.type_id

    for s_idx in setups_since_job:
        out.append(f"entry {s_idx}: setup not followed by any job")
    for j in range(len(jobs)):
        if j not in seen:
            out.append(f"job {j} is never scheduled")
    if schedule.lambda_trace is not None and len(schedule.lambda_trace) != len(jobs):
        out.append("lambda trace length does not match job count")
    return out


def _require_valid(instance: Instance, schedule: Schedule) -> None:
    problems = validate_schedule(instance, schedule)
    if problems:
        raise ScheduleError(problems[0])


def flow_report(instance: Instance, schedule: Schedule) -> FlowReport:
    _require_valid(instance, schedule)
    done = schedule.completion_times()
    flows = tuple(done[j.id] - j.release for j in instance.jobs)
    if not flows:
        return FlowReport((), 0.0, -1)
    arg = max(range(len(flows)), key=lambda j: (flows[j], -j))
    return FlowReport(flows, flows[arg], arg)


def max_flow(instance: Instance, schedule: Schedule) -> float:
    return flow_report(instance, schedule).max_flow


def batches_of(instance: Instance, schedule: Schedule) -> list[Batch]:
    """Split the job sequence at setups."""
    _require_valid(instance, schedule)
    out: list[Batch] = []
    current: list[int] = []
    for e in schedule.entries:
        if e.kind is EntryKind.SETUP and current:
            out.append(_batch(instance, current))
            current = []
        elif e.kind is EntryKind.JOB:
            current.append(e.job_id)
    if current:
        out.append(_batch(instance, current))
    return out


def _batch(instance: Instance, ids: list[int]) -> Batch:
    return Batch(
        instance.jobs[ids[0]].type_id,
        tuple(ids),
        sum(instance.jobs[j].size for j in ids),
    )


def overhead_per_job(schedule: Schedule) -> dict[int, float]:
    """Setup plus idle time directly preceding each job."""
    out: dict[int, float] = {}
    acc = 0.0
    for e in schedule.entries:
        if e.kind is EntryKind.JOB:
            out[e.job_id] = acc
            acc = 0.0
        else:
            acc += e.length
    return out


def overhead_in(
    instance: Instance,
    schedule: Schedule,
    interval: Interval | None = None,
    released_in: Interval | None = None,
) -> float:
    """Overhead of jobs released in ``released_in`` that execute inside ``interval``.

    ``None`` means unbounded.
    """
    interval = interval or Interval.everything()
    released_in = released_in or Interval.everything()
    per_job = overhead_per_job(schedule)
    total = 0.0
    for e in schedule.job_entries():
        job = instance.jobs[e.job_id]
        if job.release not in released_in:
            continue
        if e.start < interval.lo - TOL or e.end > interval.hi + TOL:
            continue
        total += per_job[e.job_id]
    return total


def overhead_between(
    instance: Instance, schedule: Schedule, released_in: Interval, inclusive: bool = False
) -> float:
    """Overhead between the first and last processed jobs released in ``released_in``.

    The exclusive form counts only overhead after the first such job starts;
    ``inclusive=True`` adds the overhead directly preceding that first job.
    """
    order = schedule.job_order()
    positions = [k for k, j in enumerate(order) if instance.jobs[j].release in released_in]
    if not positions:
        return 0.0
    per_job = overhead_per_job(schedule)
    lo, hi = positions[0], positions[-1]
    total = sum(per_job[order[k]] for k in range(lo + 1, hi + 1))
    if inclusive:
        total += per_job[order[lo]]
    return total


def workload_in(instance: Instance, interval: Interval) -> float:
    return sum(j.size for j in instance.jobs if j.release in interval)


# --------------------------------------------------------------------------
# text format


def _fmt(x: float) -> str:
    return format(x, ".17g")


def format_instance(instance: Instance) -> str:
    lines = [f"s {_fmt(instance.setup)} k {instance.num_types}"]
    lines += [f"{_fmt(j.release)} {_fmt(j.size)} {j.type_id}" for j in instance.jobs]
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> Instance:
    header: tuple[float, int] | None = None
    triples: list[tuple[float, float, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 4 or parts[0] != "s" or parts[2] != "k":
                raise InstanceFormatError(lineno, "expected header 's <setup> k <types>'")
            try:
                header = (float(parts[1]), int(parts[3]))
            except ValueError as exc:
                raise InstanceFormatError(lineno, str(exc)) from None
            continue
        if len(parts) != 3:
            raise InstanceFormatError(lineno, "expected '<release> <size> <type_id>'")
        try:
            r, p, t = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise InstanceFormatError(lineno, str(exc)) from None
        if not (r >= 0 and p > 0 and 0 <= t < header[1]):
            raise InstanceFormatError(lineno, "release, size or type out of range")
        triples.append((r, p, t))
    if header is None:
        raise InstanceFormatError(0, "missing header line")
    if not header[0] > 0:
        raise InstanceFormatError(1, "setup time must be positive")
    return Instance.build(header[0], triples, header[1])
