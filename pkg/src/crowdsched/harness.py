"""Seeded instance generation and the simulation experiments.

Randomness comes from :class:`random.Random` (MT19937) seeded with an
integer, and every draw is an integer range, so an instance is a pure
function of its config. Rationals are drawn on a 1/1000 grid.
"""
from __future__ import annotations

import csv
import io
import random
import statistics
from dataclasses import dataclass, replace

from typing import Iterable, Sequence

from .greedy import approx_mcs
from .model import Q, Bid, Instance, Task, UserProfile, revenue, truthful_bids, utility
from .offline import best_user_branch, greedy_branch
from .online import draw_online, random_order, sampling_mechanism, secretary_mechanism
from .oracle import MECHANISMS

__all__ = [
    "GeneratorConfig",
    "generate",
    "Row",
    "ExperimentResult",
    "EXPERIMENTS",
    "DEFAULT_SWEEPS",
    "run_experiment",
    "offline_trial",
    "online_trial",
    "ir_scatter",
    "utility_sweep",
]

GRID = 1000


@dataclass(frozen=True)
class GeneratorConfig:
    """Simulation defaults: n = G = 1000, m = 100, costs and values
    U[0.1, 1.1], starts U{0..100}, window lengths U{1..10}."""

    n: int = 1000
    m: int = 100
    budget: Q = Q(1000)
    seed: int = 0
    cost_range: tuple[int, int] = (100, 1100)  # thousandths
    value_range: tuple[int, int] = (100, 1100)
    horizon: int = 100
    max_length: int = 10

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("need at least one user and one task")
        if Q(self.budget) <= 0:
            raise ValueError("budget must be positive")
        if self.max_length < 1:
            raise ValueError("window lengths start at 1")
        for lo, hi in (self.cost_range, self.value_range):
            if not 0 < lo <= hi:
                raise ValueError("draw ranges must be positive and ordered")


def generate(config: GeneratorConfig) -> tuple[Instance, tuple[Bid, ...]]:
    rng = random.Random(config.seed)
    tasks = tuple(Task(k, Q(rng.randint(*config.value_range), GRID)) for k in range(config.m))
    users = []
    for i in range(config.n):
        task = rng.randrange(config.m)
        cost = Q(rng.randint(*config.cost_range), GRID)
        start = rng.randint(0, config.horizon)
        length = rng.randint(1, config.max_length)
        users.append(UserProfile(i, task, cost, start, start + length))
    instance = Instance(Q(config.budget), config.max_length, tasks, tuple(users))
    return instance, truthful_bids(instance)


# -- single trials -------------------------------------------------------------


def _ir_ok(instance: Instance, bids: Sequence[Bid], schedules, payments) -> bool:
    return all(
        utility(instance.users[i], bids[i], schedules[i], payments[i]) >= 0 for i in range(instance.n)
    )


def offline_trial(instance: Instance, bids: Sequence[Bid]) -> dict:
    """Both offline branches; revenue is the exact fair-coin mixture."""
    a, _ = greedy_branch(instance, bids)
    b = best_user_branch(instance, bids)
    ra, rb = a.meta["revenue"], b.meta["revenue"]
    return {
        "revenue": (ra + rb) / 2,
        "payment": (a.total_payment + b.total_payment) / 2,
        "max_payment": max(a.total_payment, b.total_payment),
        "ir": _ir_ok(instance, bids, a.schedules, a.payments) and _ir_ok(instance, bids, b.schedules, b.payments),
        "branch_a_payment": a.total_payment,
    }


def online_trial(instance: Instance, bids: Sequence[Bid], rng: random.Random) -> dict:
    """One random order and sample size; revenue mixes both branches evenly."""
    order = random_order(rng, instance.n)
    draw = draw_online(rng, instance.n)
    s = sampling_mechanism(instance, bids, order, draw.xi)
    t = secretary_mechanism(instance, bids, order)
    rs, rt = revenue(instance, s.schedules), revenue(instance, t.schedules)
    return {
        "revenue": (rs + rt) / 2,
        "payment": (s.total_payment + t.total_payment) / 2,
        "max_payment": max(s.total_payment, t.total_payment),
        "ir": _ir_ok(instance, bids, s.schedules, s.payments) and _ir_ok(instance, bids, t.schedules, t.payments),
    }


# -- experiments -----------------------------------------------------------------

COLUMNS = ("param", "mechanism", "mean_revenue", "std_revenue", "mean_payment", "max_payment", "trials", "seed")


@dataclass(frozen=True)
class Row:
    param: Q
    mechanism: str
    mean_revenue: Q
    std_revenue: float
    mean_payment: Q
    max_payment: Q
    budget: Q
    trials: int
    seed: int
    ir_ok: bool

    def cells(self) -> list:
        return [
            _num(self.param),
            self.mechanism,
            f"{float(self.mean_revenue):.6f}",
            f"{self.std_revenue:.6f}",
            f"{float(self.mean_payment):.6f}",
            f"{float(self.max_payment):.6f}",
            self.trials,
            self.seed,
        ]


def _num(x: Q) -> str:
    return str(x.numerator) if x.denominator == 1 else str(float(x))


@dataclass
class ExperimentResult:
    kind: str
    rows: list[Row]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in self.rows:
            writer.writerow(row.cells())
        return buf.getvalue()

    def series(self, mechanism: str) -> list[Row]:
        return [r for r in self.rows if r.mechanism == mechanism]


# Desk-scale baseline: full-scale defaults shrunk tenfold (G/n = 1, n/m = 10).
DESK = GeneratorConfig(n=100, m=10, budget=Q(100))

DEFAULT_SWEEPS = {
    "revenue-vs-users": [10, 25, 50, 75, 100, 150, 200],
    "revenue-vs-budget": [20, 40, 60, 80, 100, 150, 200],
    "revenue-vs-tasks": [2, 4, 6, 8, 10, 12, 14, 16, 18, 20],
    "payment-vs-budget": [20, 40, 60, 80, 100, 150, 200],
}

FULL_SCALE_SWEEPS = {
    "revenue-vs-users": list(range(500, 1000, 100)) + list(range(1000, 5001, 1000)),
    "revenue-vs-budget": list(range(200, 1000, 100)) + list(range(1000, 2001, 500)),
    "revenue-vs-tasks": list(range(20, 201, 20)),
    "payment-vs-budget": list(range(200, 1000, 100)) + list(range(1000, 2001, 500)),
}

EXPERIMENTS = ("revenue-vs-users", "revenue-vs-budget", "revenue-vs-tasks", "payment-vs-budget", "ir-scatter", "utility-sweep")


def _config_for(kind: str, value, base: GeneratorConfig) -> GeneratorConfig:
    if kind == "revenue-vs-users":
        return replace(base, n=int(value))
    if kind in ("revenue-vs-budget", "payment-vs-budget"):
        return replace(base, budget=Q(value))
    if kind == "revenue-vs-tasks":
        return replace(base, m=int(value))
    raise ValueError(f"unknown sweep kind {kind!r}")


def _summarise(param, mechanism: str, trials: Sequence[dict], budget: Q, seed: int) -> Row:
    revs = [t["revenue"] for t in trials]
    return Row(
        param=Q(param),
        mechanism=mechanism,
        mean_revenue=sum(revs, Q(0)) / len(revs),
        std_revenue=statistics.pstdev(float(r) for r in revs),
        mean_payment=sum((t["payment"] for t in trials), Q(0)) / len(trials),
        max_payment=max(t["max_payment"] for t in trials),
        budget=budget,
        trials=len(trials),
        seed=seed,
        ir_ok=all(t["ir"] for t in trials),
    )


def run_experiment(
    kind: str,
    sweep: Iterable | None = None,
    trials: int = 100,
    seed: int = 0,
    base: GeneratorConfig = DESK,
) -> ExperimentResult:
    """Run ``trials`` random instances per sweep point through both mechanisms.

    Trial ``t`` at every sweep point uses instance seed ``seed * 1_000_003 + t``
    so points differ only in the swept parameter. The online estimator
    draws its order and sample size from a separate stream.
    """
    if kind not in DEFAULT_SWEEPS:
        raise ValueError(f"{kind!r} is not a sweep experiment; choose from {sorted(DEFAULT_SWEEPS)}")
    if trials < 1:
        raise ValueError("trials must be positive")
    sweep = DEFAULT_SWEEPS[kind] if sweep is None else list(sweep)
    rows = []
    for value in sweep:
        off, on = [], []
        for t in range(trials):
            cfg = _config_for(kind, value, replace(base, seed=seed * 1_000_003 + t))
            instance, bids = generate(cfg)
            off.append(offline_trial(instance, bids))
            on.append(online_trial(instance, bids, random.Random(f"online:{seed}:{t}:{value}")))
        rows.append(_summarise(value, "offline", off, cfg.budget, seed))
        rows.append(_summarise(value, "online", on, cfg.budget, seed))
    return ExperimentResult(kind, rows)


def ir_scatter(config: GeneratorConfig = DESK, seed: int = 0) -> list[dict]:
    """Cost against payment of every paid user in one offline and one online run."""
    instance, bids = generate(replace(config, seed=seed))
    rng = random.Random(f"ir:{seed}")
    a, _ = greedy_branch(instance, bids)
    order = random_order(rng, instance.n)
    draw = draw_online(rng, instance.n)
    on = sampling_mechanism(instance, bids, order, draw.xi) if draw.sampling else secretary_mechanism(instance, bids, order)
    rows = []
    for name, out in (("offline", a), ("online", on)):
        for i in range(instance.n):
            if out.payments[i] > 0:
                cost = instance.users[i].true_cost * len(out.schedules[i])
                rows.append(
                    {"mechanism": name, "user": i, "cost": cost, "payment": out.payments[i], "utility": out.payments[i] - cost}
                )
    return rows


def utility_sweep(config: GeneratorConfig = DESK, seed: int = 0, user: int | None = None) -> list[dict]:
    """Utility of one user as its cost bid runs over 0.1, 0.2, ..., 3.3
    (plus the true cost), greedy offline branch, window held at the truth.

    Defaults to the first greedy winner.
    """
    instance, bids = generate(replace(config, seed=seed))
    if user is None:
        winners = approx_mcs(instance, bids).winners
        user = winners[0] if winners else 0
    profile = instance.users[user]
    view = MECHANISMS["offline-a"](instance)
    costs = sorted({Q(k, 10) for k in range(1, 34)} | {profile.true_cost})
    rows = []
    for cost in costs:
        bid = Bid(cost, profile.start, profile.end)
        trial = list(bids)
        trial[user] = bid
        slots, pay = view(trial, user)
        rows.append(
            {
                "user": user,
                "true_cost": profile.true_cost,
                "bid_cost": cost,
                "utility": utility(profile, bid, slots, pay),
                "truthful": cost == profile.true_cost,
            }
        )
    return rows


def rows_to_csv(rows: Sequence[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (_num(v) if isinstance(v, Q) else v) for k, v in row.items()})
    return buf.getvalue()
