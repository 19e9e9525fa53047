"""Non-clairvoyant online simulation and the greedy-like policies.

A policy only ever sees a :class:`MachineView`: release times and types of
the jobs waiting at the current decision point, never their sizes. It learns
a job's flow time when the job completes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import TOL, EntryKind, Instance, Schedule, ScheduleBuilder, ScheduleEntry


class PolicyContractError(RuntimeError):
    """The policy chose something that is not a waiting job."""


@dataclass(frozen=True)
class PendingJob:
    job_id: int
    release: float
    type_id: int


@dataclass(frozen=True)
class MachineView:
    now: float
    active_type: int | None
    pending: tuple[PendingJob, ...]


class Policy:
    """Base class for online policies.

    ``select`` returns a pending job id, or ``None`` to wait for the next
    arrival. ``lambda_value`` is the current balance parameter for policies
    that have one and ``None`` otherwise.
    """

    name = "policy"

    def reset(self) -> None:
        pass

    def select(self, view: MachineView) -> int | None:
        raise NotImplementedError

    def on_complete(self, job_id: int, flow: float) -> None:
        pass

    @property
    def lambda_value(self) -> float | None:
        return None


class FifoPolicy(Policy):
    name = "fifo"

    def select(self, view: MachineView) -> int | None:
        best = min(view.pending, key=lambda p: (p.release, p.job_id))
        return best.job_id


def pick_adjusted(pending, active_type: int | None, penalty: float) -> PendingJob:
    """Smallest adjusted release; near-ties prefer the active type, then release, then id.

    The adjusted release is the release itself for jobs of ``active_type``
    and release + ``penalty`` for everyone else.
    """

    def adjusted(p: PendingJob) -> float:
        return p.release if p.type_id == active_type else p.release + penalty

    keyed = [(adjusted(p), p) for p in pending]
    low = min(k for k, _ in keyed)
    near = [p for k, p in keyed if k <= low + TOL or k == low]
    return min(near, key=lambda p: (p.type_id != active_type, p.release, p.job_id))


class BalancePolicy(Policy):
    """Adjusted-release rule with a balance parameter that grows in powers of ``alpha``.

    When a job completes with flow at least ``alpha * lambda`` the parameter is
    multiplied by ``alpha``. By default this repeats until the flow falls below
    ``alpha * lambda``; ``single_step=True`` multiplies exactly once.
    """

    name = "balance"

    def __init__(self, alpha: float = 13.0, single_step: bool = False) -> None:
        if not alpha > 1:
            raise ValueError(f"alpha must exceed 1, got {alpha}")
        self.alpha = float(alpha)
        self.single_step = single_step
        self.reset()

    def reset(self) -> None:
        self.level = 1

    @property
    def lambda_value(self) -> float:
        return self.alpha**self.level

    def select(self, view: MachineView) -> int | None:
        return pick_adjusted(view.pending, view.active_type, self.lambda_value).job_id

    def on_complete(self, job_id: int, flow: float) -> None:
        if flow < self.alpha * self.lambda_value - TOL:
            return
        self.level += 1
        if self.single_step:
            return
        while flow >= self.alpha * self.lambda_value - TOL:
            self.level += 1


class FixedBalancePolicy(Policy):
    """Adjusted-release rule with a constant penalty (``math.inf`` allowed)."""

    name = "balance-fixed"

    def __init__(self, lam: float) -> None:
        if not lam >= 0:
            raise ValueError(f"lambda must be non-negative, got {lam}")
        self.lam = float(lam)

    @property
    def lambda_value(self) -> float:
        return self.lam

    def select(self, view: MachineView) -> int | None:
        return pick_adjusted(view.pending, view.active_type, self.lam).job_id


def balance_policy(alpha: float = 13.0, single_step: bool = False) -> BalancePolicy:
    return BalancePolicy(alpha, single_step)


def fifo_policy() -> FifoPolicy:
    return FifoPolicy()


def balance_fixed_policy(lam: float) -> FixedBalancePolicy:
    return FixedBalancePolicy(lam)


def make_policy(name: str, alpha: float = 13.0, lam: float = 13.0) -> Policy:
    if name == "balance":
        return balance_policy(alpha)
    if name == "fifo":
        return fifo_policy()
    if name == "balance-fixed":
        return balance_fixed_policy(lam)
    raise ValueError(f"unknown policy {name!r}")


def simulate(instance: Instance, policy: Policy) -> Schedule:
    """Run ``policy`` online on ``instance``.

    The machine decides whenever it is free and some job is waiting: at the
    first arrival, after every completion, and at any arrival into an idle
    machine. A setup, once begun, is never aborted.
    """
    policy.reset()
    jobs = instance.jobs
    n = len(jobs)
    builder = ScheduleBuilder(instance.setup)
    lam_trace: list[float] | None = None
    if policy.lambda_value is not None:
        lam_trace = [math.nan] * n

    pending: dict[int, PendingJob] = {}
    nxt = 0  # next job (by release) not yet arrived
    now = jobs[0].release if n else 0.0
    done = 0
    while done < n:
        while nxt < n and jobs[nxt].release <= now + TOL:
            j = jobs[nxt]
            pending[j.id] = PendingJob(j.id, j.release, j.type_id)
            nxt += 1
        if not pending:
            now = jobs[nxt].release
            continue
        view = MachineView(now, builder.active_type, tuple(pending.values()))
        choice = policy.select(view)
        if choice is None:
            if nxt >= n:
                raise PolicyContractError("policy waits although no further job will arrive")
            now = jobs[nxt].release
            continue
        if choice not in pending:
            raise PolicyContractError(f"policy chose job {choice}, which is not waiting")
        del pending[choice]
        if lam_trace is not None:
            lam_trace[choice] = policy.lambda_value
        job = jobs[choice]
        # after a deliberate wait the decision time can lie past the chosen release
        if builder.now is None:
            if now > job.release + TOL:
                builder.now = now
        elif now > builder.now + TOL:
            builder.entries.append(ScheduleEntry(EntryKind.IDLE, builder.now, now))
            builder.now = now
        end = builder.run(job)
        policy.on_complete(choice, end - job.release)
        now = end
        done += 1
    return Schedule(tuple(builder.entries), None if lam_trace is None else tuple(lam_trace))

