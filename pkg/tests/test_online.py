import math
import random

import mpmath
import pytest

from _instances import e1, tiny
from crowdsched.model import Bid, Instance, Q, Task, UserProfile, revenue, truthful_bids, utility
from crowdsched.online import (
    E_LOWER,
    E_UPPER,
    OnlineDraw,
    SamplingStream,
    SecretaryStream,
    binomial_half,
    draw_online,
    floor_n_over_e,
    random_order,
    randomized_online,
    sampling_mechanism,
    secretary_mechanism,
)

ORDER = [2, 0, 1]


def test_e_bounds_bracket_e():
    mpmath.mp.dps = 80
    e = mpmath.e
    assert mpmath.mpf(int(E_LOWER.numerator)) / int(E_LOWER.denominator) < e
    assert mpmath.mpf(int(E_UPPER.numerator)) / int(E_UPPER.denominator) > e


@pytest.mark.parametrize("n", [0, 1, 2, 3, 8, 100, 10**6, 10**9 + 7, 10**30])
def test_floor_n_over_e(n):
    mpmath.mp.dps = 80
    assert floor_n_over_e(n) == int(mpmath.floor(n / mpmath.e))


def test_secretary_e1():
    inst = e1()
    out = secretary_mechanism(inst, truthful_bids(inst), ORDER)
    assert out.schedules == ((0,), (), ())
    assert out.payments == (10, 0, 0)
    assert out.meta["alpha"] == 1
    assert revenue(inst, out.schedules) == 2


def test_secretary_two_users_first_affordable_wins():
    tasks = (Task(0, Q(1)), Task(1, Q(5)))
    users = (UserProfile(0, 0, Q(1), 0, 1), UserProfile(1, 1, Q(1), 0, 1))
    inst = Instance(Q(3), 1, tasks, users)
    assert secretary_mechanism(inst, truthful_bids(inst), [0, 1]).winners == (0,)


def test_secretary_nobody_affordable():
    inst = Instance(Q(1), 1, (Task(0, Q(1)),), tuple(UserProfile(i, 0, Q(2), i, i + 1) for i in range(4)))
    out = secretary_mechanism(inst, truthful_bids(inst), [3, 2, 1, 0])
    assert out.winners == () and out.total_payment == 0


def test_sampling_e1():
    inst = e1()
    out = sampling_mechanism(inst, truthful_bids(inst), ORDER, 1)
    assert out.meta["sample_revenue"] == 4
    assert revenue(inst, out.schedules) == 0 and out.total_payment == 0


def test_sampling_price_formula():
    stream = SamplingStream(2, Q(10), 1, (Task(0, Q(1)),), 1)
    stream.sample_revenue = Q(100)
    stream.seen = 1
    dec = stream.feed(1, 0, Bid(Q("0.4"), 0, 1))
    assert stream.price(Q(1)) == Q(1, 2)
    assert dec.payment == Q(1, 2) and stream.remaining == Q(19, 2)


def test_sampling_full_sample_and_empty_sample():
    inst = e1()
    bids = truthful_bids(inst)
    assert sampling_mechanism(inst, bids, ORDER, 3).winners == ()
    out = sampling_mechanism(inst, bids, ORDER, 0)
    assert out.winners == () and "degenerate" in out.meta
    with pytest.raises(ValueError):
        sampling_mechanism(inst, bids, ORDER, 4)


def test_streams_refuse_extra_arrivals():
    s = SecretaryStream(1, Q(1))
    s.feed(0, Q(1), Bid(Q(1), 0, 1))
    with pytest.raises(RuntimeError):
        s.feed(1, Q(1), Bid(Q(1), 0, 1))


def test_order_must_be_permutation():
    inst = e1()
    with pytest.raises(ValueError):
        secretary_mechanism(inst, truthful_bids(inst), [0, 0, 1])


def test_randomized_online_routes_by_draw():
    inst = e1()
    bids = truthful_bids(inst)
    assert randomized_online(inst, bids, ORDER, OnlineDraw(False, 1)).payments == (10, 0, 0)
    assert randomized_online(inst, bids, ORDER, OnlineDraw(True, 1)).meta["sample_revenue"] == 4


def test_binomial_half_and_draws_are_seeded():
    rng = random.Random(0)
    xs = [binomial_half(rng, 100) for _ in range(2000)]
    assert abs(sum(xs) / len(xs) - 50) < 1
    assert binomial_half(rng, 0) == 0
    assert draw_online(random.Random(5), 10) == draw_online(random.Random(5), 10)
    assert sorted(random_order(random.Random(1), 7)) == list(range(7))


def test_online_budget_and_ir_on_random_instances():
    rng = random.Random(21)
    for _ in range(300):
        inst = tiny(rng)
        bids = truthful_bids(inst)
        order = random_order(rng, inst.n)
        for out in (
            secretary_mechanism(inst, bids, order),
            sampling_mechanism(inst, bids, order, binomial_half(rng, inst.n)),
        ):
            assert out.total_payment <= inst.budget
            for i, u in enumerate(inst.users):
                assert utility(u, bids[i], out.schedules[i], out.payments[i]) >= 0
