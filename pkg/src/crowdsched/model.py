"""Domain types, validation, slot algebra and accounting for the scheduling problem.

All money and value quantities are exact rationals (:data:`Q`, GMP-backed). Time is
discrete: a window ``[start, end)`` holds the integer slots
``start, start + 1, ..., end - 1`` and slot ``t`` stands for the real
interval ``[t, t + 1)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
import numbers

import gmpy2
from typing import Iterable, Mapping, Sequence

__all__ = [
    "Q",
    "Task",
    "UserProfile",
    "Bid",
    "Instance",
    "Outcome",
    "InstanceError",
    "to_rational",
    "validate_instance",
    "validate_bids",
    "truthful_bids",
    "revenue",
    "utility",
    "payment_voided",
    "ratio",
    "suppresses",
    "max_by_order",
    "uncovered",
    "empty_schedules",
    "instance_from_dict",
    "instance_to_dict",
    "load_instance",
    "dump_instance",
    "outcome_to_dict",
    "bids_from_dict",
    "bids_to_dict",
]


Q = gmpy2.mpq


class InstanceError(ValueError):
    """Raised when an instance or bid vector breaks a model invariant.

    ``errors`` holds one diagnostic string per violated field.
    """

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def to_rational(value) -> Q:
    """Parse an exact rational from a decimal/fraction string or an int.

    Floats are refused: every value entering the mechanisms must be exact.
    """
    if isinstance(value, (bool, float)):
        raise TypeError(f"refusing inexact value {value!r}; pass a decimal string")
    if isinstance(value, (numbers.Rational, str)):
        try:
            return Q(value)
        except ValueError:
            raise ValueError(f"not a rational number: {value!r}") from None
    raise TypeError(f"cannot read a rational from {type(value).__name__}")


@dataclass(frozen=True)
class Task:
    id: int
    unit_value: Q


@dataclass(frozen=True)
class UserProfile:
    """A user's private type: task, true per-slot cost and true window."""

    id: int
    task: int
    true_cost: Q
    start: int
    end: int

    @property
    def window(self) -> range:
        return range(self.start, self.end)


@dataclass(frozen=True)
class Bid:
    cost: Q
    start: int
    end: int

    @property
    def window(self) -> range:
        return range(self.start, self.end)

    def with_cost(self, cost: Q) -> "Bid":
        return Bid(cost, self.start, self.end)


@dataclass(frozen=True)
class Instance:
    budget: Q
    lam: int
    tasks: tuple[Task, ...]
    users: tuple[UserProfile, ...]

    @property
    def n(self) -> int:
        return len(self.users)

    @property
    def m(self) -> int:
        return len(self.tasks)

    def value_of(self, user: int) -> Q:
        """Per-slot value to the owner of ``user``'s work (mu_i)."""
        return self.tasks[self.users[user].task].unit_value


@dataclass(frozen=True)
class Outcome:
    """Schedules and payments of one mechanism run, winners in selection order.

    ``schedules[i]`` is a sorted tuple of slots.
    """

    schedules: tuple[tuple[int, ...], ...]
    payments: tuple[Q, ...]
    winners: tuple[int, ...]
    meta: Mapping[str, object] = field(default_factory=dict, compare=False)

    @property
    def total_payment(self) -> Q:
        return sum(self.payments, Q(0))


def empty_schedules(n: int) -> list[tuple[int, ...]]:
    return [() for _ in range(n)]


# -- validation --------------------------------------------------------------


def _window_errors(label: str, cost: Q, start: int, end: int, lam: int) -> list[str]:
    errors = []
    if cost <= 0:
        errors.append(f"{label}: non-positive cost {cost}")
    if not (isinstance(start, int) and isinstance(end, int)):
        errors.append(f"{label}: window endpoints must be integers")
    elif start >= end:
        errors.append(f"{label}: empty window [{start},{end})")
    elif end - start > lam:
        errors.append(f"{label}: window length {end - start} exceeds lambda={lam}")
    return errors


def validate_instance(instance: Instance) -> list[str]:
    """Return a list of diagnostics; an empty list means the instance is valid."""
    errors: list[str] = []
    if instance.budget <= 0:
        errors.append(f"budget: non-positive budget {instance.budget}")
    if not isinstance(instance.lam, int) or instance.lam < 1:
        errors.append(f"lambda: must be a positive integer, got {instance.lam!r}")
    if instance.n < 1:
        errors.append("users: at least one user is required")
    for pos, task in enumerate(instance.tasks):
        if task.id != pos:
            errors.append(f"task {task.id}: id must equal its position {pos}")
        if task.unit_value <= 0:
            errors.append(f"task {task.id}: non-positive unit value {task.unit_value}")
    for pos, user in enumerate(instance.users):
        label = f"user {user.id}"
        if user.id != pos:
            errors.append(f"{label}: id must equal its position {pos}")
        if not 0 <= user.task < instance.m:
            errors.append(f"{label}: unknown task {user.task}")
        errors.extend(_window_errors(label, user.true_cost, user.start, user.end, instance.lam))
    return errors


def validate_bids(instance: Instance, bids: Sequence[Bid]) -> list[str]:
    if len(bids) != instance.n:
        return [f"bids: expected {instance.n} bids, got {len(bids)}"]
    errors: list[str] = []
    for i, bid in enumerate(bids):
        errors.extend(_window_errors(f"bid {i}", bid.cost, bid.start, bid.end, instance.lam))
    return errors


def truthful_bids(instance: Instance) -> tuple[Bid, ...]:
    return tuple(Bid(u.true_cost, u.start, u.end) for u in instance.users)


# -- accounting --------------------------------------------------------------


def revenue(instance: Instance, schedules: Sequence[Iterable[int]]) -> Q:
    """Owner revenue: per task, unit value times the number of distinct covered slots."""
    covered: dict[int, set[int]] = {}
    for i, slots in enumerate(schedules):
        if slots:
            covered.setdefault(instance.users[i].task, set()).update(slots)
    return sum(
        (instance.tasks[t].unit_value * len(slots) for t, slots in covered.items()),
        Q(0),
    )


def payment_voided(profile: UserProfile, bid: Bid, slots: Iterable[int]) -> bool:
    """Post-paid rule: no payment if the schedule leaves the true window or
    the declared end is a time at which the user is not actually available."""
    if not profile.start <= bid.end <= profile.end:
        return True
    return any(not profile.start <= t < profile.end for t in slots)


def utility(profile: UserProfile, bid: Bid, slots: Sequence[int], payment: Q) -> Q:
    """Payment minus true cost of the scheduled slots.

    A voided payment means the user does not perform the work, so the
    utility is exactly zero in that case.
    """
    if not slots:
        return Q(payment)
    if payment_voided(profile, bid, slots):
        return Q(0)
    return payment - profile.true_cost * len(slots)


# -- the suppression order ---------------------------------------------------


def ratio(value: Q, cost: Q) -> Q:
    return value / cost


def suppresses(a: tuple[Q, Q, int], b: tuple[Q, Q, int]) -> bool:
    """True when user ``a`` is below ``b`` in the greedy order (``a`` ≺ ``b``).

    Each argument is ``(value, cost, index)``. Lower value-per-cost loses;
    on an exact tie the larger index wins.
    """
    va, da, ia = a
    vb, db, ib = b
    lhs, rhs = va * db, vb * da
    return lhs < rhs or (lhs == rhs and ib > ia)


def order_key(value: Q, cost: Q, index: int) -> tuple[Q, int]:
    """Sort key that is increasing along ≺."""
    return (value / cost, index)


def max_by_order(entries: Iterable[tuple[Q, Q, int]]) -> tuple[Q, Q, int]:
    """The unique maximal element of a set of ``(value, cost, index)`` under ≺."""
    best = None
    for entry in entries:
        if best is None or suppresses(best, entry):
            best = entry
    if best is None:
        raise ValueError("max_by_order() of an empty set")
    return best


def uncovered(window: range, task: int, instance: Instance, schedules: Sequence[Iterable[int]]) -> list[int]:
    """Slots of ``window`` not yet allocated to any user of the same task."""
    taken: set[int] = set()
    for i, slots in enumerate(schedules):
        if slots and instance.users[i].task == task:
            taken.update(slots)
    return [t for t in window if t not in taken]


# -- JSON --------------------------------------------------------------------


def instance_from_dict(data: Mapping) -> Instance:
    tasks = tuple(Task(int(t["id"]), to_rational(t["unit_value"])) for t in data["tasks"])
    users = tuple(
        UserProfile(
            id=int(u["id"]),
            task=int(u["task"]),
            true_cost=to_rational(u["cost"]),
            start=int(u["start"]),
            end=int(u["end"]),
        )
        for u in data["users"]
    )
    return Instance(to_rational(data["budget"]), int(data["lambda"]), tasks, users)


def _fmt(x: Q) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def instance_to_dict(instance: Instance) -> dict:
    return {
        "budget": _fmt(instance.budget),
        "lambda": instance.lam,
        "tasks": [{"id": t.id, "unit_value": _fmt(t.unit_value)} for t in instance.tasks],
        "users": [
            {"id": u.id, "task": u.task, "cost": _fmt(u.true_cost), "start": u.start, "end": u.end}
            for u in instance.users
        ],
    }


def bids_from_dict(data: Sequence[Mapping]) -> tuple[Bid, ...]:
    return tuple(Bid(to_rational(b["cost"]), int(b["start"]), int(b["end"])) for b in data)


def bids_to_dict(bids: Sequence[Bid]) -> list[dict]:
    return [{"cost": _fmt(b.cost), "start": b.start, "end": b.end} for b in bids]


def outcome_to_dict(outcome: Outcome) -> dict:
    return {
        "schedules": [sorted(s) for s in outcome.schedules],
        "payments": [_fmt(p) for p in outcome.payments],
        "winners": list(outcome.winners),
        "total_payment": _fmt(outcome.total_payment),
        **{k: (_fmt(v) if isinstance(v, Q) else v) for k, v in outcome.meta.items()},
    }


def load_instance(path) -> Instance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def dump_instance(instance: Instance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance), fh, indent=2)
        fh.write("\n")
