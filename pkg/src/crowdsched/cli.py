"""Command-line entry point (``crowdsched``).

Instances and bids are read as JSON in the model's format; results go to
stdout as JSON (CSV for experiments). Exit status: 0 on success, 1 when a
checked invariant fails (budget, IR, truthfulness, payment agreement),
2 on bad input.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from typing import Sequence

from .harness import (
    DEFAULT_SWEEPS,
    DESK,
    EXPERIMENTS,
    GeneratorConfig,
    ir_scatter,
    rows_to_csv,
    run_experiment,
    utility_sweep,
)
from .model import (
    Bid,
    Instance,
    InstanceError,
    Q,
    _fmt,
    bids_from_dict,
    instance_from_dict,
    instance_to_dict,
    outcome_to_dict,
    to_rational,
    truthful_bids,
    utility,
    validate_bids,
    validate_instance,
)
from .offline import Branch, BranchSelector, NotAWinner, cal_payment, greedy_branch, offline_mechanism
from .online import SamplingStream, SecretaryStream, binomial_half, random_order, sampling_mechanism, secretary_mechanism
from .oracle import (
    MECHANISMS,
    SearchSpaceTooLarge,
    brute_force_opt,
    partition_instance,
    payment_integral_oracle,
    truthfulness_sweep,
)

EXIT_VIOLATION = 1
EXIT_INPUT = 2


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, default=lambda v: _fmt(v) if isinstance(v, Q) else str(v))
    sys.stdout.write("\n")


def _load(args) -> tuple[Instance, tuple[Bid, ...]]:
    with open(args.instance) as fh:
        instance = instance_from_dict(json.load(fh))
    errors = validate_instance(instance)
    if errors:
        raise InstanceError(errors)
    if getattr(args, "bids", None):
        with open(args.bids) as fh:
            bids = bids_from_dict(json.load(fh))
        errors = validate_bids(instance, bids)
        if errors:
            raise InstanceError(errors)
    else:
        bids = truthful_bids(instance)
    return instance, bids


def _check_outcome(instance: Instance, bids, outcome) -> list[str]:
    problems = []
    if outcome.total_payment > instance.budget:
        problems.append(f"total payment {outcome.total_payment} exceeds budget {instance.budget}")
    for i, user in enumerate(instance.users):
        if bids[i] == Bid(user.true_cost, user.start, user.end):
            u = utility(user, bids[i], outcome.schedules[i], outcome.payments[i])
            if u < 0:
                problems.append(f"user {i}: negative truthful utility {u}")
    return problems


def _report(instance, bids, outcome) -> int:
    problems = _check_outcome(instance, bids, outcome)
    _emit({**outcome_to_dict(outcome), "violations": problems})
    return EXIT_VIOLATION if problems else 0


# -- subcommands ----------------------------------------------------------------


def cmd_validate(args) -> int:
    with open(args.instance) as fh:
        instance = instance_from_dict(json.load(fh))
    errors = validate_instance(instance)
    if args.bids and not errors:
        with open(args.bids) as fh:
            errors = validate_bids(instance, bids_from_dict(json.load(fh)))
    _emit({"valid": not errors, "errors": errors})
    return EXIT_INPUT if errors else 0


def cmd_solve_offline(args) -> int:
    instance, bids = _load(args)
    if args.branch == "coin":
        selector = BranchSelector.fair_coin(random.Random(args.seed))
    else:
        selector = BranchSelector(Branch(args.branch))
    outcome = offline_mechanism(instance, bids, selector)
    return _report(instance, bids, outcome)


def _read_arrivals(path: str):
    """JSON lines, one arrival each: ``{"user", "task", "cost", "start", "end"}``."""
    with open(path) as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                yield int(rec["user"]), int(rec["task"]), Bid(to_rational(rec["cost"]), int(rec["start"]), int(rec["end"]))


def _replay(args, instance: Instance) -> int:
    arrivals = list(_read_arrivals(args.arrivals))
    n = len(arrivals)
    if args.mech == "secretary":
        stream = SecretaryStream(n, instance.budget)
        feed = lambda u, t, b: stream.feed(u, instance.tasks[t].unit_value, b)
    else:
        xi = args.xi if args.xi is not None else binomial_half(random.Random(args.order_seed), n)
        stream = SamplingStream(n, instance.budget, xi, instance.tasks, instance.lam)
        feed = stream.feed
    decisions = [feed(u, t, b) for u, t, b in arrivals]
    total = sum((d.payment for d in decisions), Q(0))
    out = {
        "decisions": [{"user": d.user, "slots": list(d.slots), "payment": d.payment} for d in decisions],
        "total_payment": total,
        "violations": [] if total <= instance.budget else [f"total payment {total} exceeds budget"],
    }
    _emit(out)
    return EXIT_VIOLATION if out["violations"] else 0


def cmd_solve_online(args) -> int:
    if args.arrivals:
        with open(args.instance) as fh:
            instance = instance_from_dict(json.load(fh))
        if args.mech == "coin":
            args.mech = "sampling" if random.Random(args.order_seed).getrandbits(1) == 0 else "secretary"
        return _replay(args, instance)
    instance, bids = _load(args)
    rng = random.Random(args.order_seed)
    order = random_order(rng, instance.n)
    mech = args.mech
    if mech == "coin":
        mech = "sampling" if rng.getrandbits(1) == 0 else "secretary"
    if mech == "sampling":
        xi = args.xi if args.xi is not None else binomial_half(rng, instance.n)
        outcome = sampling_mechanism(instance, bids, order, xi)
    else:
        outcome = secretary_mechanism(instance, bids, order)
    outcome.meta["order"] = order
    return _report(instance, bids, outcome)


def cmd_oracle(args) -> int:
    instance, bids = _load(args)
    limit = None if args.no_limit else args.limit
    if args.what == "opt":
        opt = brute_force_opt(instance, bids, limit=limit)
        _emit({"value": opt.value, "cost": opt.cost, "schedule": [list(s) for s in opt.schedule]})
        return 0
    if args.what == "payment":
        outcome, _ = greedy_branch(instance, bids)
        rows, bad = [], False
        for w in outcome.winners:
            fast = cal_payment(instance, bids, w)[0]
            slow = payment_integral_oracle(instance, bids, w)
            bad |= fast != slow
            rows.append({"user": w, "cal_payment": fast, "oracle": slow, "equal": fast == slow})
        _emit({"winners": rows})
        return EXIT_VIOLATION if bad else 0
    # sweep
    users = range(instance.n) if args.user is None else [args.user]
    context = {}
    if args.mech in ("secretary", "sampling"):
        context["order"] = random_order(random.Random(args.order_seed), instance.n)
    if args.mech == "sampling":
        context["xi"] = args.xi if args.xi is not None else instance.n // 2
    reports = [truthfulness_sweep(instance, i, args.mech, bids, **context) for i in users]
    _emit({"mechanism": args.mech, "reports": [r.to_dict() for r in reports]})
    return 0 if all(r.ok for r in reports) else EXIT_VIOLATION


def cmd_gen_partition(args) -> int:
    numbers = [int(x) for x in args.numbers]
    _emit(instance_to_dict(partition_instance(numbers)))
    return 0


def cmd_experiment(args) -> int:
    base = GeneratorConfig(n=args.n, m=args.m, budget=to_rational(args.budget)) if args.n else DESK
    if args.kind == "ir-scatter":
        rows = ir_scatter(base, args.seed)
        text = rows_to_csv(rows)
        bad = any(r["utility"] < 0 for r in rows)
    elif args.kind == "utility-sweep":
        rows = utility_sweep(base, args.seed, args.user)
        text = rows_to_csv(rows)
        best = max(r["utility"] for r in rows)
        bad = not any(r["truthful"] and r["utility"] == best for r in rows)
    else:
        sweep = [to_rational(v) for v in args.sweep.split(",")] if args.sweep else None
        result = run_experiment(args.kind, sweep, args.trials, args.seed, base)
        text = result.to_csv()
        bad = any(r.max_payment > r.budget or not r.ir_ok for r in result.rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if bad:
        print("invariant violated (budget or IR)", file=sys.stderr)
    return EXIT_VIOLATION if bad else 0


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crowdsched", description="Budgeted truthful scheduling mechanisms.")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_instance(p):
        p.add_argument("instance", help="instance JSON file")
        p.add_argument("--bids", help="bids JSON file (default: truthful)")
        return p

    p = with_instance(sub.add_parser("validate", help="check an instance (and bids)"))
    p.set_defaults(func=cmd_validate)

    p = with_instance(sub.add_parser("solve-offline", help="run the offline mechanism"))
    p.add_argument("--branch", choices=["a", "b", "coin"], default="coin")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_solve_offline)

    p = with_instance(sub.add_parser("solve-online", help="run an online mechanism"))
    p.add_argument("--mech", choices=["secretary", "sampling", "coin"], default="coin")
    p.add_argument("--order-seed", type=int, default=0)
    p.add_argument("--xi", type=int, help="sample size (default: Binomial(n, 1/2))")
    p.add_argument("--arrivals", help="replay a JSON-lines arrival stream instead of a random order")
    p.set_defaults(func=cmd_solve_online)

    p = sub.add_parser("oracle", help="ground-truth checks")
    p.add_argument("what", choices=["opt", "payment", "sweep"])
    with_instance(p)
    p.add_argument("--limit", type=int, default=24, help="max total window length for brute force")
    p.add_argument("--no-limit", action="store_true")
    p.add_argument("--mech", choices=sorted(MECHANISMS), default="offline-a")
    p.add_argument("--user", type=int)
    p.add_argument("--order-seed", type=int, default=0)
    p.add_argument("--xi", type=int)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen-partition", help="emit the partition-reduction instance")
    p.add_argument("numbers", nargs="+")
    p.set_defaults(func=cmd_gen_partition)

    p = sub.add_parser("experiment", help="run a simulation experiment, CSV output")
    p.add_argument("kind", choices=EXPERIMENTS)
    p.add_argument("--sweep", help=f"comma-separated values (defaults: {DEFAULT_SWEEPS})")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--n", type=int, help="base users (with --m and --budget)")
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--budget", default="100")
    p.add_argument("--user", type=int, help="utility-sweep user")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InstanceError, NotAWinner, SearchSpaceTooLarge, ValueError, TypeError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
