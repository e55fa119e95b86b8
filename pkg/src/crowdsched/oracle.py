"""Ground-truth computations used to check the mechanisms.

Nothing here calls :func:`crowdsched.offline.cal_payment`; the payment
oracle recovers the same integral by re-running the greedy scheduler at
substituted costs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from typing import Callable, Iterable, Sequence

from .greedy import approx_mcs
from .model import Q, Bid, Instance, Task, UserProfile, truthful_bids, utility
from .offline import NotAWinner, best_user_branch, cal_payment
from .online import E_LOWER, sampling_mechanism, secretary_mechanism, SamplingStream

__all__ = [
    "SearchSpaceTooLarge",
    "OptResult",
    "brute_force_opt",
    "payment_integral_oracle",
    "scheduled_length",
    "SweepReport",
    "truthfulness_sweep",
    "MECHANISMS",
    "partition_instance",
    "has_perfect_partition",
    "AnalysisReport",
    "analyze",
    "expected_offline_revenue",
    "offline_revenue_floor",
    "budget_exhausting_greedy",
]

DEFAULT_SPACE_LIMIT = 24


class SearchSpaceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OptResult:
    value: Q
    schedule: tuple[tuple[int, ...], ...]
    cost: Q


def brute_force_opt(
    instance: Instance,
    bids: Sequence[Bid] | None = None,
    budget: Q | None = None,
    limit: int | None = DEFAULT_SPACE_LIMIT,
) -> OptResult:
    """Exact optimum of the budgeted coverage problem, paying costs at bid.

    A covered (task, slot) pair is always best served by the cheapest user
    whose window holds it, so the search runs over those pairs only: a
    0/1 knapsack solved by depth-first branch and bound with the
    fractional-knapsack relaxation as the bound.
    """
    bids = truthful_bids(instance) if bids is None else bids
    G = instance.budget if budget is None else budget
    space = sum(len(b.window) for b in bids)
    if limit is not None and space > limit:
        raise SearchSpaceTooLarge(f"sum of window lengths {space} exceeds {limit}")

    cheapest: dict[tuple[int, int], int] = {}
    for i, bid in enumerate(bids):
        task = instance.users[i].task
        for t in bid.window:
            k = (task, t)
            if k not in cheapest or bids[i].cost < bids[cheapest[k]].cost:
                cheapest[k] = i
    items = [(instance.tasks[k[0]].unit_value, bids[i].cost, k[1], i) for k, i in cheapest.items()]
    items.sort(key=lambda it: it[0] / it[1], reverse=True)
    values = [it[0] for it in items]
    costs = [it[1] for it in items]
    total = len(items)

    def bound(pos: int, room: Q) -> Q:
        extra = Q(0)
        for k in range(pos, total):
            if costs[k] <= room:
                room -= costs[k]
                extra += values[k]
            else:
                return extra + values[k] * room / costs[k]
        return extra

    best_value = Q(-1)
    best_pick: list[bool] = []
    pick = [False] * total

    def search(pos: int, room: Q, got: Q):
        nonlocal best_value, best_pick
        if got > best_value:
            best_value, best_pick = got, pick[:]
        if pos == total or got + bound(pos, room) <= best_value:
            return
        if costs[pos] <= room:
            pick[pos] = True
            search(pos + 1, room - costs[pos], got + values[pos])
            pick[pos] = False
        search(pos + 1, room, got)

    search(0, G, Q(0))
    slots: list[list[int]] = [[] for _ in range(instance.n)]
    spent = Q(0)
    for k, chosen in enumerate(best_pick):
        if chosen:
            slots[items[k][3]].append(items[k][2])
            spent += costs[k]
    return OptResult(max(best_value, Q(0)), tuple(tuple(sorted(s)) for s in slots), spent)


# -- payment integral ---------------------------------------------------------


def scheduled_length(instance: Instance, bids: Sequence[Bid], user: int, cost: Q) -> int:
    probe = list(bids)
    probe[user] = bids[user].with_cost(cost)
    return len(approx_mcs(instance, probe).schedules[user])


def payment_integral_oracle(instance: Instance, bids: Sequence[Bid], user: int) -> Q:
    """``d |y| + integral_d^inf |y(v)| dv`` by piecewise-constant reconstruction.

    Candidate breakpoints are every order tie with another user and every
    cap transition for each partial revenue seen in a trace. Each piece is
    probed at three interior points, which must agree.
    """
    G = instance.budget
    i = user
    mu = instance.value_of(i)
    d = bids[i].cost
    top = G / 2
    base = d * scheduled_length(instance, bids, i, d)
    assert scheduled_length(instance, bids, i, top * Q(1001, 1000)) == 0
    if d >= top:
        return base

    ties = {mu * bids[j].cost / instance.value_of(j) for j in range(instance.n) if j != i}
    cuts = sorted({d, top} | {v for v in ties if d < v < top})
    total = Q(0)
    for lo, hi in zip(cuts, cuts[1:]):
        probe = list(bids)
        probe[i] = bids[i].with_cost((lo + hi) / 2)
        seen = {Q(0)} | {s.revenue_before for s in approx_mcs(instance, probe).trace}
        inner = {lo, hi}
        for R in seen:
            for k in range(1, instance.lam + 1):
                v = G * mu / (2 * (k * mu + R))
                if lo < v < hi:
                    inner.add(v)
        pts = sorted(inner)
        for a, b in zip(pts, pts[1:]):
            w = b - a
            heights = {scheduled_length(instance, bids, i, a + w * f) for f in (Q(1, 4), Q(1, 2), Q(3, 4))}
            if len(heights) != 1:
                raise AssertionError(f"integrand not constant on ({a}, {b}]: {heights}")
            total += w * heights.pop()
    return base + total


# -- truthfulness sweeps ------------------------------------------------------

# A mechanism view returns (slots, payment) of one user for a bid vector.
UserView = Callable[[Sequence[Bid], int], tuple[tuple[int, ...], Q]]


def _offline_a(instance: Instance) -> UserView:
    def run(bids, i):
        greedy = approx_mcs(instance, bids)
        if i not in greedy.winners:
            return (), Q(0)
        return greedy.schedules[i], cal_payment(instance, bids, i, greedy)[0]

    return run


def _offline_b(instance: Instance) -> UserView:
    def run(bids, i):
        out = best_user_branch(instance, bids)
        return out.schedules[i], out.payments[i]

    return run


def _secretary(instance: Instance, order: Sequence[int]) -> UserView:
    def run(bids, i):
        out = secretary_mechanism(instance, bids, order)
        return out.schedules[i], out.payments[i]

    return run


def _sampling(instance: Instance, order: Sequence[int], xi: int) -> UserView:
    def run(bids, i):
        out = sampling_mechanism(instance, bids, order, xi)
        return out.schedules[i], out.payments[i]

    return run


MECHANISMS = {
    "offline-a": _offline_a,
    "offline-b": _offline_b,
    "secretary": _secretary,
    "sampling": _sampling,
}

COST_MULTIPLIERS = tuple(Q(k, 10) for k in range(1, 31))
WINDOW_COST_MULTIPLIERS = (Q(1, 2), Q(1), Q(3, 2), Q(2))
NUDGE = Q(1, 10_000)


@dataclass
class SweepReport:
    user: int
    mechanism: str
    truthful_utility: Q
    max_gain: Q = Q(0)
    worst_bid: Bid | None = None
    checked: int = 0
    violations: list[tuple[Bid, Q]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.max_gain <= 0

    def to_dict(self) -> dict:
        return {
            "user": self.user,
            "mechanism": self.mechanism,
            "truthful_utility": str(self.truthful_utility),
            "max_gain": str(self.max_gain),
            "worst_bid": None
            if self.worst_bid is None
            else {"cost": str(self.worst_bid.cost), "start": self.worst_bid.start, "end": self.worst_bid.end},
            "checked": self.checked,
        }


def _around(points: Iterable[Q]) -> set[Q]:
    out = set()
    for p in points:
        if p > 0:
            out.update((p, p * (1 - NUDGE), p * (1 + NUDGE)))
    return out


def _critical_costs(instance: Instance, bids: Sequence[Bid], user: int, mechanism: str, context: dict) -> set[Q]:
    G = instance.budget
    mu = instance.value_of(user)
    if mechanism == "offline-a":
        pts = {mu * bids[j].cost / instance.value_of(j) for j in range(instance.n) if j != user}
        pts.add(G / 2)
        for step in approx_mcs(instance, bids).trace:
            R = step.revenue_before
            pts.update(G * mu / (2 * (k * mu + R)) for k in range(1, instance.lam + 1))
        return _around(pts)
    if mechanism == "sampling":
        order, xi = context["order"], context["xi"]
        stream = SamplingStream(instance.n, G, xi, instance.tasks, instance.lam)
        for j in order[:xi]:
            stream.feed(j, instance.users[j].task, bids[j])
        eta = stream.price(mu)
        return _around({G} | ({eta} if eta is not None else set()))
    return _around({G})


def _windows(profile: UserProfile, lam: int, reach: int = 2) -> list[tuple[int, int]]:
    out = []
    for s in range(profile.start - reach, profile.start + reach + 1):
        for e in range(profile.end - reach, profile.end + reach + 1):
            if s < e and e - s <= lam and (s, e) != (profile.start, profile.end):
                out.append((s, e))
    return out


def truthfulness_sweep(
    instance: Instance,
    user: int,
    mechanism: str,
    bids: Sequence[Bid] | None = None,
    windows: bool | None = None,
    **context,
) -> SweepReport:
    """Compare the user's truthful utility with every grid deviation.

    Other users keep ``bids`` (default: truthful). Cost deviations cover a
    multiplicative grid of the true cost plus points at and around the
    mechanism's critical costs; window deviations (offline only) move each
    endpoint by up to two slots.
    """
    bids = truthful_bids(instance) if bids is None else list(bids)
    profile = instance.users[user]
    view = MECHANISMS[mechanism](instance, **context)
    truth = Bid(profile.true_cost, profile.start, profile.end)
    bids = list(bids)
    bids[user] = truth
    slots, pay = view(bids, user)
    report = SweepReport(user, mechanism, utility(profile, truth, slots, pay))

    devs: set[Bid] = set()
    costs = {profile.true_cost * k for k in COST_MULTIPLIERS}
    costs |= _critical_costs(instance, bids, user, mechanism, context)
    devs.update(truth.with_cost(c) for c in costs if c > 0)
    if windows is None:
        windows = mechanism.startswith("offline")
    if windows:
        for s, e in _windows(profile, instance.lam):
            devs.update(Bid(profile.true_cost * k, s, e) for k in WINDOW_COST_MULTIPLIERS)
    devs.discard(truth)

    for dev in sorted(devs, key=lambda b: (b.cost, b.start, b.end)):
        trial = list(bids)
        trial[user] = dev
        slots, pay = view(trial, user)
        gain = utility(profile, dev, slots, pay) - report.truthful_utility
        report.checked += 1
        if gain > report.max_gain:
            report.max_gain, report.worst_bid = gain, dev
        if gain > 0:
            report.violations.append((dev, gain))
    return report


# -- hardness reduction -------------------------------------------------------


def partition_instance(numbers: Sequence[int]) -> Instance:
    """One task and one single-slot user per integer, cost = value = the integer,
    budget half the total. A revenue of G is reachable iff the multiset splits evenly."""
    if not numbers or any(int(a) != a or a <= 0 for a in numbers):
        raise ValueError("partition_instance() needs positive integers")
    tasks = tuple(Task(k, Q(a)) for k, a in enumerate(numbers))
    users = tuple(UserProfile(k, k, Q(a), 0, 1) for k, a in enumerate(numbers))
    return Instance(Q(sum(numbers), 2), 1, tasks, users)


def has_perfect_partition(numbers: Sequence[int]) -> bool:
    total = sum(numbers)
    if total % 2:
        return False
    reach = 1
    for a in numbers:
        reach |= reach << a
    return bool(reach >> (total // 2) & 1)


# -- analysis ------------------------------------------------------------------


def offline_revenue_floor(lam: int) -> Q:
    """(1 - 1/e) / (7 lambda), rounded down through a lower bound on e."""
    return (1 - 1 / E_LOWER) / (7 * lam)


def expected_offline_revenue(instance: Instance, bids: Sequence[Bid] | None = None) -> Q:
    """Exact mean revenue of the fair-coin offline mechanism."""
    bids = truthful_bids(instance) if bids is None else bids
    greedy = approx_mcs(instance, bids).revenue
    best = best_user_branch(instance, bids).meta["revenue"]
    return (greedy + best) / 2


def budget_exhausting_greedy(instance: Instance, bids: Sequence[Bid] | None = None) -> Q:
    """Greedy with the cap ``(G - spent) / d_j`` in place of the potential cap.

    Used only as an analysis reference; it is not a mechanism.
    """
    bids = truthful_bids(instance) if bids is None else bids
    G = instance.budget
    order = sorted(range(instance.n), key=lambda i: (instance.value_of(i) / bids[i].cost, i), reverse=True)
    covered: dict[int, set[int]] = {}
    spent = Q(0)
    value = Q(0)
    for j in order:
        cov = covered.setdefault(instance.users[j].task, set())
        zone = [t for t in bids[j].window if t not in cov]
        if not zone:
            continue
        q = min(len(zone), math.floor((G - spent) / bids[j].cost))
        if q > 0:
            cov.update(zone[:q])
            spent += bids[j].cost * q
            value += instance.value_of(j) * q
        if q < len(zone):
            break
    return value


@dataclass(frozen=True)
class AnalysisReport:
    opt_value: Q
    opt_schedule: tuple[tuple[int, ...], ...]
    big_user_value: Q  # max mu_i |T_i| over users with d_i <= G
    lam: int
    epsilon: Q
    approx_condition: bool  # big_user_value <= ((e-1)/(4e) - eps) OPT
    small_users_condition: bool  # big_user_value <= OPT / 150
    delta1: Q | None = None
    delta2: Q | None = None

    def to_dict(self) -> dict:
        return {
            "opt_value": str(self.opt_value),
            "opt_schedule": [list(s) for s in self.opt_schedule],
            "Lambda": str(self.big_user_value),
            "lambda": self.lam,
            "epsilon": str(self.epsilon),
            "approx_condition": self.approx_condition,
            "small_users_condition": self.small_users_condition,
            "delta1": None if self.delta1 is None else str(self.delta1),
            "delta2": None if self.delta2 is None else str(self.delta2),
        }


def split_values(instance: Instance, opt_schedule: Sequence[Sequence[int]], order: Sequence[int], xi: int):
    """Optimal revenue credited to the first ``xi`` arrivals and to the rest."""
    first = set(order[:xi])
    d1 = d2 = Q(0)
    for i, slots in enumerate(opt_schedule):
        v = instance.value_of(i) * len(slots)
        if i in first:
            d1 += v
        else:
            d2 += v
    return d1, d2


def analyze(
    instance: Instance,
    bids: Sequence[Bid] | None = None,
    order: Sequence[int] | None = None,
    xi: int | None = None,
    epsilon: Q | None = None,
    limit: int | None = DEFAULT_SPACE_LIMIT,
) -> AnalysisReport:
    bids = truthful_bids(instance) if bids is None else bids
    opt = brute_force_opt(instance, bids, limit=limit)
    G = instance.budget
    big = max(
        (instance.value_of(i) * len(bids[i].window) for i in range(instance.n) if bids[i].cost <= G),
        default=Q(0),
    )
    if epsilon is None:
        epsilon = Q(3, 28) * (1 - 1 / E_LOWER)
    approx = big <= ((E_LOWER - 1) / (4 * E_LOWER) - epsilon) * opt.value
    d1 = d2 = None
    if order is not None and xi is not None:
        d1, d2 = split_values(instance, opt.schedule, order, xi)
    return AnalysisReport(opt.value, opt.schedule, big, instance.lam, epsilon, approx, big * 150 <= opt.value, d1, d2)
