"""Randomized offline mechanism: greedy with threshold-integral payments, or
a single best user paid the whole budget.

The threshold payment of a greedy winner ``w`` with bid cost ``d`` is

    d * |y_w| + integral_{d}^{inf} |y_w(v)| dv

where ``y_w(v)`` is the schedule ``w`` would get by bidding cost ``v`` with
everything else fixed. :func:`cal_payment` walks the users that ``w``
suppresses, one at a time, and integrates the step function exactly.
"""
from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field

from typing import Mapping, Sequence

from .greedy import GreedyResult, allocation_cap, approx_mcs, greedy_order
from .model import Q, Bid, Instance, Outcome, UserProfile, payment_voided

__all__ = [
    "Branch",
    "BranchSelector",
    "Piece",
    "PaymentBreakdown",
    "NotAWinner",
    "cap_breakpoint",
    "step_integral",
    "cal_payment",
    "greedy_branch",
    "best_user_branch",
    "offline_mechanism",
    "settle",
]


class NotAWinner(ValueError):
    pass


class Branch(enum.Enum):
    A = "a"  # greedy schedule + threshold payments
    B = "b"  # single highest-value affordable user, paid G


@dataclass(frozen=True)
class BranchSelector:
    """Which branch to run. ``fair_coin`` draws it from an explicit RNG."""

    branch: Branch
    source: str = "explicit"

    @classmethod
    def fair_coin(cls, rng: random.Random) -> "BranchSelector":
        # o ~ U[0,1], branch A iff o <= 1/2; one random bit has the same law.
        return cls(Branch.A if rng.getrandbits(1) == 0 else Branch.B, "fair-coin")


@dataclass(frozen=True)
class Piece:
    """Integral over one cost interval ``(low, high]`` with a fixed greedy prefix.

    ``steps`` lists ``(from, to, height)`` with ``height`` the scheduled length.
    """

    low: Q
    high: Q | None
    zone_size: int
    revenue_before: Q
    steps: tuple[tuple[Q, Q, int], ...]

    @property
    def area(self) -> Q:
        return sum(((b - a) * h for a, b, h in self.steps), Q(0))


@dataclass(frozen=True)
class PaymentBreakdown:
    user: int
    base: Q
    pieces: tuple[Piece, ...] = field(default=())

    @property
    def integral(self) -> Q:
        return sum((p.area for p in self.pieces), Q(0))

    @property
    def total(self) -> Q:
        return self.base + self.integral

    def to_dict(self) -> dict:
        return {
            "user": self.user,
            "base": str(self.base),
            "integral": str(self.integral),
            "payment": str(self.total),
            "pieces": [
                {
                    "gamma1": str(p.low),
                    "gamma2": "inf" if p.high is None else str(p.high),
                    "zone_size": p.zone_size,
                    "revenue_before": str(p.revenue_before),
                    "area": str(p.area),
                    "steps": [{"from": str(a), "to": str(b), "height": h} for a, b, h in p.steps],
                }
                for p in self.pieces
            ],
        }


def cap_breakpoint(budget: Q, value: Q, collected: Q, k: int) -> Q:
    """Cost ``v`` at which ``G/(2v) - R/mu`` equals ``k``."""
    return budget * value / (2 * (k * value + collected))


def step_integral(
    low: Q,
    high: Q | None,
    zone_size: int,
    budget: Q,
    value: Q,
    collected: Q,
) -> tuple[tuple[Q, Q, int], ...]:
    """Exact steps of ``v -> min(zone_size, max(0, floor(G/(2v) - R/mu)))`` on ``(low, high]``.

    On ``(v_{k+1}, v_k]`` the floor equals ``k``; past ``v_1`` it is zero, so an
    unbounded ``high`` is clipped there.
    """
    edge = cap_breakpoint(budget, value, collected, 1)
    top = edge if high is None else min(high, edge)
    if top <= low:
        return ()
    # only the bands between the cap at `top` and the cap at `low` intersect
    k_min = min(zone_size, max(1, math.floor(budget / (2 * top) - collected / value)))
    k_max = min(zone_size, math.floor(budget / (2 * low) - collected / value))
    steps = []
    for k in range(k_min, k_max + 1):
        upper = cap_breakpoint(budget, value, collected, k)
        lower = cap_breakpoint(budget, value, collected, k + 1) if k < zone_size else low
        a, b = max(low, lower), min(top, upper)
        if b > a:
            steps.append((a, b, k))
    steps.reverse()
    return tuple(steps)


def cal_payment(
    instance: Instance,
    bids: Sequence[Bid],
    winner: int,
    greedy: GreedyResult | None = None,
) -> tuple[Q, PaymentBreakdown]:
    """Threshold-integral payment to a greedy winner.

    Sub-intervals of the winner's cost are delimited by the costs at which
    successive suppressed users overtake it in the order; within each one
    the prefix schedule ``t`` is fixed and the integrand is a step function
    of the cost alone.
    """
    greedy = approx_mcs(instance, bids) if greedy is None else greedy
    if winner not in greedy.winners:
        raise NotAWinner(f"user {winner} is not a greedy winner")
    G = instance.budget
    w = winner
    mu_w = instance.value_of(w)
    d_w = bids[w].cost
    task_w = instance.users[w].task

    # schedules fixed before w's turn
    pos = greedy.winners.index(w)
    covered: dict[int, set[int]] = {}
    collected = Q(0)
    for j in greedy.winners[:pos]:
        covered.setdefault(instance.users[j].task, set()).update(greedy.schedules[j])
        collected += instance.value_of(j) * len(greedy.schedules[j])

    order = greedy.order or tuple(greedy_order(instance, bids))
    suppressed = order[order.index(w) + 1 :]

    base = d_w * len(greedy.schedules[w])
    pieces: list[Piece] = []
    gamma1 = d_w
    for idx in range(len(suppressed) + 1):
        j = suppressed[idx] if idx < len(suppressed) else None
        cov_w = covered.get(task_w, set())
        zone_w = sum(1 for t in bids[w].window if t not in cov_w)
        gamma2 = mu_w * G / (2 * collected) if collected > 0 else None
        if j is not None:
            overtake = mu_w * bids[j].cost / instance.value_of(j)
            gamma2 = overtake if gamma2 is None else min(gamma2, overtake)
        if zone_w == 0 or (gamma2 is not None and gamma2 < gamma1):
            break
        if gamma1 >= cap_breakpoint(G, mu_w, collected, 1):
            # cap already below one slot; it only shrinks from here on
            break
        steps = step_integral(gamma1, gamma2, zone_w, G, mu_w, collected)
        pieces.append(Piece(gamma1, gamma2, zone_w, collected, steps))
        if j is None:
            break
        # w has now dropped below j: schedule j on top of t
        mu_j = instance.value_of(j)
        cov_j = covered.setdefault(instance.users[j].task, set())
        zone_j = [t for t in bids[j].window if t not in cov_j]
        q = min(len(zone_j), allocation_cap(G, bids[j].cost, collected, mu_j))
        if q > 0:
            cov_j.update(zone_j[:q])
            collected += mu_j * q
        if q < len(zone_j):
            break
        gamma1 = mu_w * bids[j].cost / mu_j

    breakdown = PaymentBreakdown(w, base, tuple(pieces))
    return breakdown.total, breakdown


def greedy_branch(instance: Instance, bids: Sequence[Bid]) -> tuple[Outcome, dict[int, PaymentBreakdown]]:
    greedy = approx_mcs(instance, bids)
    payments = [Q(0)] * instance.n
    audit: dict[int, PaymentBreakdown] = {}
    for w in greedy.winners:
        payments[w], audit[w] = cal_payment(instance, bids, w, greedy)
    outcome = Outcome(
        greedy.schedules,
        tuple(payments),
        greedy.winners,
        {"branch": Branch.A.value, "revenue": greedy.revenue},
    )
    return outcome, audit


def best_user_branch(instance: Instance, bids: Sequence[Bid]) -> Outcome:
    """Highest-value user among those bidding at most G, paid G for one slot."""
    n = instance.n
    schedules: list[tuple[int, ...]] = [() for _ in range(n)]
    payments = [Q(0)] * n
    affordable = [i for i in range(n) if bids[i].cost <= instance.budget]
    if not affordable:
        return Outcome(tuple(schedules), tuple(payments), (), {"branch": Branch.B.value, "revenue": Q(0)})
    # max by value; ties -> smallest index
    j = min(affordable, key=lambda i: (-instance.value_of(i), i))
    schedules[j] = (bids[j].start,)
    payments[j] = instance.budget
    return Outcome(
        tuple(schedules), tuple(payments), (j,), {"branch": Branch.B.value, "revenue": instance.value_of(j)}
    )


def offline_mechanism(instance: Instance, bids: Sequence[Bid], selector: BranchSelector) -> Outcome:
    if selector.branch is Branch.A:
        return greedy_branch(instance, bids)[0]
    return best_user_branch(instance, bids)


def settle(
    outcome: Outcome,
    completed: Mapping[int, bool],
    profiles: Sequence[UserProfile],
    bids: Sequence[Bid],
) -> tuple[Q, ...]:
    """Release payments after sensing: a winner is paid only if it finished
    every scheduled slot and its claimed window end lies in its true window."""
    final = []
    for i, pay in enumerate(outcome.payments):
        slots = outcome.schedules[i]
        if slots and (not completed.get(i, False) or payment_voided(profiles[i], bids[i], slots)):
            final.append(Q(0))
        else:
            final.append(pay)
    return tuple(final)
