"""Command-line front end.

All output is CSV on stdout. Schemas:

  simulate   kind,start,end,job_id rows, then ``max_flow,<F>``
  opt        ``opt_flow,<F*>`` then the witness schedule CSV
  lb         ``component,value`` rows for setup, p_max, interval and max
  adversary  the instance, ``# policy schedule`` CSV, ``# witness schedule`` CSV,
             then ``alg_flow,<F>`` and ``opt_upper,<F>``
  smooth     trial,alg_flow,opt_or_bound,ratio,opt_mode rows plus a summary row
  analyze    group rows of the partition, or job,type,release,flow,batch rows
             of a level subschedule
  gen-random an instance in the text format

Instances are read from ``--input`` or standard input.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .adversary import AdversaryConfig, build_adversary_instance, optimal_phase_schedule
from .analysis import PartitionConfig, extract_subschedule, partition
from .core import (
    Instance,
    InstanceFormatError,
    ScheduleError,
    flow_report,
    format_instance,
    max_flow,
    parse_instance,
    _fmt,
)
from .offline import GuardError, brute_force_opt, dp_opt, lower_bound_components
from .policies import make_policy, simulate
from .smoothing import OptMode, PerturbationSpec, Smoothing, smoothed_experiment


def gen_random(
    n: int, k: int, horizon: float, size_max: float, seed: int, setup: float = 1.0
) -> Instance:
    """Random instance: releases on [0, horizon], sizes on [1, size_max], types on [0, k)."""
    if n < 1 or k < 1 or size_max < 1:
        raise ValueError("gen_random needs n >= 1, k >= 1 and size_max >= 1")
    rng = np.random.default_rng(seed)
    releases = rng.uniform(0.0, horizon, n)
    sizes = rng.uniform(1.0, size_max, n)
    types = rng.integers(0, k, n)
    return Instance.build(
        setup, [(float(r), float(p), int(t)) for r, p, t in zip(releases, sizes, types)], k
    )


def _read_instance(args) -> Instance:
    if args.input:
        with open(args.input) as fh:
            return parse_instance(fh.read())
    return parse_instance(sys.stdin.read())


def _add_policy_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--policy", choices=["balance", "fifo", "balance-fixed"], default="balance")
    p.add_argument("--alpha", type=float, default=13.0)
    p.add_argument("--lambda", dest="lam", type=float, default=13.0)


def _policy(args):
    return make_policy(args.policy, args.alpha, args.lam)


def cmd_simulate(args, out) -> None:
    inst = _read_instance(args)
    sched = simulate(inst, _policy(args))
    out.write(sched.to_csv())
    out.write(f"max_flow,{_fmt(max_flow(inst, sched))}\n")


def cmd_opt(args, out) -> None:
    inst = _read_instance(args)
    res = brute_force_opt(inst) if args.mode == "brute" else dp_opt(inst)
    out.write(f"opt_flow,{_fmt(res.opt_flow)}\n")
    out.write(res.witness.to_csv())


def cmd_lb(args, out) -> None:
    lb = lower_bound_components(_read_instance(args))
    out.write("component,value\n")
    out.write(f"setup,{_fmt(lb.setup)}\np_max,{_fmt(lb.p_max)}\n")
    out.write(f"interval,{_fmt(lb.interval)}\nmax,{_fmt(lb.value)}\n")


def cmd_adversary(args, out) -> None:
    if args.phases is None and args.n is None:
        raise ValueError("give --phases or --n")
    config = AdversaryConfig(args.phases) if args.phases is not None else AdversaryConfig.from_n(args.n)
    inst, sched = build_adversary_instance(config, _policy(args))
    witness = optimal_phase_schedule(inst)
    out.write(format_instance(inst))
    out.write("# policy schedule\n" + sched.to_csv())
    out.write("# witness schedule\n" + witness.to_csv())
    out.write(f"alg_flow,{_fmt(max_flow(inst, sched))}\nopt_upper,{_fmt(max_flow(inst, witness))}\n")


def cmd_smooth(args, out) -> None:
    inst = _read_instance(args)
    spec = PerturbationSpec(Smoothing(args.dist), args.eps, args.seed)
    report = smoothed_experiment(
        inst, spec, args.trials, _policy(args), OptMode(args.opt), jobs=args.jobs
    )
    out.write(report.to_csv())


def cmd_analyze(args, out) -> None:
    inst = _read_instance(args)
    if args.subschedule is not None:
        sched = simulate(inst, make_policy("balance", args.alpha))
        view = extract_subschedule(inst, sched, args.subschedule, args.alpha)
        if view is None:
            raise ValueError(f"no subschedule at level {args.subschedule}")
        flows = flow_report(inst, sched).per_job_flow
        out.write("job,type,release,flow,batch\n")
        for b, batch in enumerate(view.batches):
            for j in batch.job_ids:
                job = inst.jobs[j]
                out.write(f"{j},{job.type_id},{_fmt(job.release)},{_fmt(flows[j])},{b}\n")
        return
    if args.gamma is None:
        raise ValueError("analyze needs --gamma or --subschedule")
    config = PartitionConfig.for_instance(inst, args.gamma, args.eps, args.c2)
    out.write(partition(inst, config).to_csv())


def cmd_gen_random(args, out) -> None:
    inst = gen_random(args.n, args.k, args.horizon, args.size_max, args.seed, args.setup)
    out.write(format_instance(inst))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="setupsched",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run an online policy")
    _add_policy_flags(p)
    p.add_argument("--input")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("opt", help="exact optimum")
    p.add_argument("--mode", choices=["brute", "dp"], default="dp")
    p.add_argument("--input")
    p.set_defaults(func=cmd_opt)

    p = sub.add_parser("lb", help="lower bound on the optimum")
    p.add_argument("--input")
    p.set_defaults(func=cmd_lb)

    p = sub.add_parser("adversary", help="adaptive lower-bound instance")
    p.add_argument("--phases", type=int)
    p.add_argument("--n", type=int, help="job count; rounded down to a square")
    _add_policy_flags(p)
    p.set_defaults(func=cmd_adversary)

    p = sub.add_parser("smooth", help="smoothed-ratio experiment")
    p.add_argument("--dist", choices=[s.value for s in Smoothing], default="uniform")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--opt", choices=[m.value for m in OptMode], default="dp")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--input")
    _add_policy_flags(p)
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("analyze", help="partition report or level subschedule")
    p.add_argument("--gamma", type=float)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--c2", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=13.0)
    p.add_argument("--subschedule", type=int, metavar="Q")
    p.add_argument("--input")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("gen-random", help="random instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--horizon", type=float, default=10.0)
    p.add_argument("--size-max", type=float, default=4.0)
    p.add_argument("--setup", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_random)
    return parser


def run(argv: list[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        args.func(args, out)
    except (InstanceFormatError, GuardError, ScheduleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
