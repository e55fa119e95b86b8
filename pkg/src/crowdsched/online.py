"""Online mechanisms over a random arrival order.

Both mechanisms are exposed as streams: open a session knowing ``n`` and
``G``, then :meth:`feed` one arrival at a time and receive an irrevocable
decision. The batch helpers replay an instance through a stream.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from typing import Sequence

from .greedy import approx_mcs
from .model import Q, Bid, Instance, Outcome, Task, UserProfile

__all__ = [
    "E_LOWER",
    "E_UPPER",
    "floor_n_over_e",
    "Decision",
    "SecretaryStream",
    "SamplingStream",
    "secretary_mechanism",
    "sampling_mechanism",
    "randomized_online",
    "OnlineDraw",
    "draw_online",
    "random_order",
    "binomial_half",
]

# e = 2.71828182845904523536028747135266249775724709369995...
E_LOWER = Q("2.71828182845904523536028747135266249775724709369995")
E_UPPER = E_LOWER + Q(1, 10**50)


def floor_n_over_e(n: int) -> int:
    lo, hi = math.floor(n / E_UPPER), math.floor(n / E_LOWER)
    if lo != hi:
        raise OverflowError(f"n={n} too large for the stored digits of e")
    return lo


@dataclass(frozen=True)
class Decision:
    user: int
    slots: tuple[int, ...]
    payment: Q


@dataclass
class SecretaryStream:
    """Reject the first floor(n/e) arrivals, remember the best affordable
    value among them, then hire the first later arrival whose value reaches
    it. The hire gets one slot and the whole budget."""

    n: int
    budget: Q
    alpha: Q = Q(0)
    seen: int = 0
    remaining: Q = field(init=False)
    decisions: list[Decision] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.remaining = self.budget
        self.cutoff = floor_n_over_e(self.n)

    def feed(self, user: int, value: Q, bid: Bid) -> Decision:
        if self.seen >= self.n:
            raise RuntimeError("more arrivals than announced")
        self.seen += 1
        if self.seen <= self.cutoff:
            if bid.cost <= self.budget:
                self.alpha = max(self.alpha, value)
            decision = Decision(user, (), Q(0))
        elif value >= self.alpha and bid.cost <= self.budget and self.remaining > 0:
            decision = Decision(user, (bid.start,), self.remaining)
            self.remaining = Q(0)
        else:
            decision = Decision(user, (), Q(0))
        self.decisions.append(decision)
        return decision


@dataclass
class SamplingStream:
    """Use the first ``xi`` arrivals as a sample, schedule them greedily with
    the full budget, and post a per-slot price ``5 G mu / R(sample)`` to
    every later arrival.

    A sample worth nothing leaves the price undefined; every later arrival
    is then turned away.
    """

    n: int
    budget: Q
    xi: int
    tasks: Sequence[Task]
    lam: int
    seen: int = 0
    sample_revenue: Q | None = None
    remaining: Q = field(init=False)
    decisions: list[Decision] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not 0 <= self.xi <= self.n:
            raise ValueError(f"sample size {self.xi} outside [0, {self.n}]")
        self.remaining = self.budget
        self._sample: list[tuple[UserProfile, Bid]] = []
        self._covered: dict[int, set[int]] = {}
        if self.xi == 0:
            self.sample_revenue = Q(0)

    def _close_sample(self):
        # re-index by original id so that order ties break as they would offline
        sample = sorted(self._sample, key=lambda pb: pb[0].id)
        users = tuple(UserProfile(k, p.task, bid.cost, bid.start, bid.end) for k, (p, bid) in enumerate(sample))
        sub = Instance(self.budget, self.lam, tuple(self.tasks), users)
        self.sample_revenue = approx_mcs(sub, [b for _, b in sample]).revenue

    def price(self, value: Q) -> Q | None:
        if not self.sample_revenue:
            return None
        return 5 * self.budget * value / self.sample_revenue

    def feed(self, user: int, task: int, bid: Bid) -> Decision:
        if self.seen >= self.n:
            raise RuntimeError("more arrivals than announced")
        self.seen += 1
        if self.seen <= self.xi:
            self._sample.append((UserProfile(user, task, bid.cost, bid.start, bid.end), bid))
            if self.seen == self.xi:
                self._close_sample()
            decision = Decision(user, (), Q(0))
        else:
            eta = self.price(self.tasks[task].unit_value)
            cov = self._covered.setdefault(task, set())
            free = tuple(t for t in bid.window if t not in cov)
            if eta is not None and free and bid.cost <= eta and eta * len(free) <= self.remaining:
                pay = eta * len(free)
                self.remaining -= pay
                cov.update(free)
                decision = Decision(user, free, pay)
            else:
                decision = Decision(user, (), Q(0))
        self.decisions.append(decision)
        return decision


def _collect(instance: Instance, decisions: Sequence[Decision], meta: dict) -> Outcome:
    schedules: list[tuple[int, ...]] = [() for _ in range(instance.n)]
    payments = [Q(0)] * instance.n
    winners = []
    for dec in decisions:
        schedules[dec.user] = dec.slots
        payments[dec.user] = dec.payment
        if dec.slots:
            winners.append(dec.user)
    return Outcome(tuple(schedules), tuple(payments), tuple(winners), meta)


def _check_order(instance: Instance, order: Sequence[int]):
    if sorted(order) != list(range(instance.n)):
        raise ValueError("arrival order must be a permutation of the users")


def secretary_mechanism(instance: Instance, bids: Sequence[Bid], order: Sequence[int]) -> Outcome:
    _check_order(instance, order)
    stream = SecretaryStream(instance.n, instance.budget)
    for i in order:
        stream.feed(i, instance.value_of(i), bids[i])
    return _collect(instance, stream.decisions, {"mechanism": "secretary", "alpha": stream.alpha})


def sampling_mechanism(instance: Instance, bids: Sequence[Bid], order: Sequence[int], xi: int) -> Outcome:
    _check_order(instance, order)
    stream = SamplingStream(instance.n, instance.budget, xi, instance.tasks, instance.lam)
    for i in order:
        stream.feed(i, instance.users[i].task, bids[i])
    meta = {"mechanism": "sampling", "xi": xi, "sample_revenue": stream.sample_revenue}
    if not stream.sample_revenue:
        meta["degenerate"] = "sample revenue is zero; all later arrivals rejected"
    return _collect(instance, stream.decisions, meta)


@dataclass(frozen=True)
class OnlineDraw:
    """The randomness consumed by one run of the randomized online mechanism."""

    sampling: bool
    xi: int


def binomial_half(rng: random.Random, n: int) -> int:
    """Binomial(n, 1/2) as the popcount of n random bits."""
    return bin(rng.getrandbits(n)).count("1") if n > 0 else 0


def random_order(rng: random.Random, n: int) -> list[int]:
    order = list(range(n))
    rng.shuffle(order)
    return order


def draw_online(rng: random.Random, n: int) -> OnlineDraw:
    return OnlineDraw(rng.getrandbits(1) == 0, binomial_half(rng, n))


def randomized_online(instance: Instance, bids: Sequence[Bid], order: Sequence[int], draw: OnlineDraw) -> Outcome:
    if draw.sampling:
        return sampling_mechanism(instance, bids, order, draw.xi)
    return secretary_mechanism(instance, bids, order)
