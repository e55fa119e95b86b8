"""Greedy budgeted schedule construction (``ApproxMCS``).

Users are visited in decreasing suppression order. The selected user gets
the earliest ``q`` uncovered slots of its window where

    q = min(|Z|, floor(G / (2 d) - R / mu))

and ``R`` is the revenue collected so far. The loop stops as soon as a
selected user cannot take its whole uncovered window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from typing import Iterable, Sequence

from .model import Q, Bid, Instance, revenue

__all__ = ["Step", "GreedyResult", "approx_mcs", "greedy_value", "greedy_order", "allocation_cap"]


@dataclass(frozen=True)
class Step:
    """One pass through the loop body.

    ``cap`` is the potential-function bound before the min with ``|Z|``;
    ``revenue_before``/``revenue_after`` bracket the allocation.
    """

    user: int
    zone: tuple[int, ...]
    cap: int
    q: int
    revenue_before: Q
    revenue_after: Q
    removed: tuple[int, ...]
    note: str = ""

    @property
    def effective(self) -> bool:
        return self.q > 0


@dataclass(frozen=True)
class GreedyResult:
    schedules: tuple[tuple[int, ...], ...]
    winners: tuple[int, ...]
    cost_payments: tuple[Q, ...]
    revenue: Q
    trace: tuple[Step, ...] = field(repr=False)
    order: tuple[int, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "schedules": [list(s) for s in self.schedules],
            "winners": list(self.winners),
            "cost_payments": [str(p) for p in self.cost_payments],
            "revenue": str(self.revenue),
            "trace": [
                {
                    "user": s.user,
                    "zone": list(s.zone),
                    "cap": s.cap,
                    "q": s.q,
                    "revenue_before": str(s.revenue_before),
                    "revenue_after": str(s.revenue_after),
                    "removed": list(s.removed),
                    **({"note": s.note} if s.note else {}),
                }
                for s in self.trace
            ],
        }


def allocation_cap(budget: Q, cost: Q, collected: Q, value: Q) -> int:
    """floor(G/(2d) - R/mu), computed exactly; may be negative."""
    return math.floor(budget / (2 * cost) - collected / value)


def greedy_order(instance: Instance, bids: Sequence[Bid], users: Iterable[int] | None = None) -> list[int]:
    """User indices from the top of the suppression order downwards."""
    pool = range(instance.n) if users is None else users
    return sorted(pool, key=lambda i: (instance.value_of(i) / bids[i].cost, i), reverse=True)


def approx_mcs(
    instance: Instance,
    bids: Sequence[Bid],
    budget: Q | None = None,
    users: Iterable[int] | None = None,
) -> GreedyResult:
    """Run the greedy scheduler on ``users`` (default: everyone).

    ``budget`` overrides the instance budget; the online sampling branch
    uses both overrides to schedule a sample of arrivals.
    """
    G = instance.budget if budget is None else budget
    n = instance.n
    order = greedy_order(instance, bids, users)
    values = [instance.value_of(i) for i in range(n)]
    task_of = [u.task for u in instance.users]

    remaining_by_task: dict[int, list[int]] = {}
    for i in order:
        remaining_by_task.setdefault(task_of[i], []).append(i)
    alive = dict.fromkeys(order, True)
    covered: dict[int, set[int]] = {}
    schedules: list[tuple[int, ...]] = [() for _ in range(n)]
    winners: list[int] = []
    trace: list[Step] = []
    collected = Q(0)

    for j in order:
        if not alive[j]:
            continue
        cov = covered.setdefault(task_of[j], set())
        zone = tuple(t for t in bids[j].window if t not in cov)
        if not zone:
            # Unreachable while pruning below is intact; never loop on it.
            alive[j] = False
            trace.append(Step(j, zone, 0, 0, collected, collected, (j,), "covered user selected; dropped"))
            continue
        cap = allocation_cap(G, bids[j].cost, collected, values[j])
        q = min(len(zone), cap)
        before = collected
        removed: tuple[int, ...] = ()
        if q > 0:
            winners.append(j)
            schedules[j] = zone[:q]
            cov.update(zone[:q])
            collected += values[j] * q
            peers = remaining_by_task[task_of[j]]
            removed = tuple(i for i in peers if alive[i] and all(t in cov for t in bids[i].window))
            for i in removed:
                alive[i] = False
            remaining_by_task[task_of[j]] = [i for i in peers if alive[i]]
        trace.append(Step(j, zone, cap, q, before, collected, removed))
        if q < len(zone):
            break

    cost_payments = tuple(bids[i].cost * len(schedules[i]) for i in range(n))
    return GreedyResult(tuple(schedules), tuple(winners), cost_payments, collected, tuple(trace), tuple(order))


def greedy_value(instance: Instance, bids: Sequence[Bid]) -> Q:
    result = approx_mcs(instance, bids)
    assert result.revenue == revenue(instance, result.schedules)
    return result.revenue
