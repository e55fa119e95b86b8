import random

import pytest

from _instances import e1, scaled, tiny
from crowdsched.greedy import approx_mcs
from crowdsched.model import Bid, Instance, Q, Task, UserProfile, truthful_bids, utility
from crowdsched.offline import (
    Branch,
    BranchSelector,
    NotAWinner,
    best_user_branch,
    cal_payment,
    cap_breakpoint,
    greedy_branch,
    offline_mechanism,
    settle,
    step_integral,
)
from crowdsched.oracle import expected_offline_revenue, payment_integral_oracle


def test_e1_payments():
    inst = e1()
    bids = truthful_bids(inst)
    pay, breakdown = cal_payment(inst, bids, 0)
    assert pay == 4 and breakdown.base == 2 and breakdown.integral == 2
    assert cal_payment(inst, bids, 2)[0] == 1
    assert breakdown.to_dict()["payment"] == "4"
    with pytest.raises(NotAWinner):
        cal_payment(inst, bids, 1)


def test_e1_branches():
    inst = e1()
    bids = truthful_bids(inst)
    a = offline_mechanism(inst, bids, BranchSelector(Branch.A))
    assert a.payments == (4, 0, 1) and a.total_payment == 5
    b = offline_mechanism(inst, bids, BranchSelector(Branch.B))
    assert b.schedules == ((0,), (), ()) and b.payments == (10, 0, 0)
    # exact mixture: (5 + 2) / 2
    assert expected_offline_revenue(inst) == Q(7, 2)


def test_e1_threshold_flatness():
    inst = e1()
    a1 = inst.users[0]
    for cost, expected in ((Q(3, 2), 2), (Q(5, 2), 0), (Q(1, 2), 2)):
        bids = list(truthful_bids(inst))
        bids[0] = Bid(cost, 0, 2)
        out, _ = greedy_branch(inst, bids)
        assert utility(a1, bids[0], out.schedules[0], out.payments[0]) == expected


def test_fair_coin_is_seeded():
    picks = {BranchSelector.fair_coin(random.Random(s)).branch for s in range(20)}
    assert picks == {Branch.A, Branch.B}
    assert BranchSelector.fair_coin(random.Random(3)) == BranchSelector.fair_coin(random.Random(3))


def test_best_user_ties_and_affordability():
    tasks = (Task(0, Q(2)), Task(1, Q(2)), Task(2, Q(5)))
    users = (
        UserProfile(0, 2, Q(20), 4, 6),  # best value but unaffordable
        UserProfile(1, 0, Q(1), 3, 5),
        UserProfile(2, 1, Q(1), 0, 1),
    )
    out = best_user_branch(Instance(Q(10), 2, tasks, users), truthful_bids(Instance(Q(10), 2, tasks, users)))
    assert out.winners == (1,) and out.schedules[1] == (3,)
    lone = Instance(Q(1), 1, (Task(0, Q(1)),), (UserProfile(0, 0, Q(2), 0, 1),))
    assert best_user_branch(lone, truthful_bids(lone)).total_payment == 0


def test_step_integral_single_band():
    # one user, R = 0: cap k holds on (G/(2(k+1)), G/(2k)], clipped at |Z| = 3
    steps = step_integral(Q(1), None, 3, Q(10), Q(1), Q(0))
    assert steps == ((Q(1), Q(5, 3), 3), (Q(5, 3), Q(5, 2), 2), (Q(5, 2), Q(5), 1))
    assert step_integral(Q(6), None, 3, Q(10), Q(1), Q(0)) == ()
    assert cap_breakpoint(Q(10), Q(1), Q(0), 2) == Q(5, 2)


def test_long_single_window_pays_half_budget_times_harmonic_number():
    # threshold payment (G/2) H_L exceeds G once L >= 4
    for length, total in ((3, Q(55, 6)), (4, Q(125, 12)), (10, Q(7381, 504))):
        inst = Instance(Q(10), length, (Task(0, Q(1)),), (UserProfile(0, 0, Q(1, 10), 0, length),))
        bids = truthful_bids(inst)
        assert cal_payment(inst, bids, 0)[0] == total
        assert payment_integral_oracle(inst, bids, 0) == total


def test_settle():
    inst = e1()
    bids = truthful_bids(inst)
    out, _ = greedy_branch(inst, bids)
    assert settle(out, {0: True, 2: True}, inst.users, bids) == (4, 0, 1)
    assert settle(out, {0: True, 2: False}, inst.users, bids) == (4, 0, 0)
    lying = list(bids)
    lying[0] = Bid(Q(1), 0, 3)
    assert settle(out, {0: True, 2: True}, inst.users, lying)[0] == 0


def test_payments_match_oracle_and_winner_bounds():
    rng = random.Random(11)
    for _ in range(200):
        inst = tiny(rng)
        bids = truthful_bids(inst)
        g = approx_mcs(inst, bids)
        out, _ = greedy_branch(inst, bids)
        for w in g.winners:
            assert out.payments[w] == payment_integral_oracle(inst, bids, w)
            assert out.payments[w] >= g.cost_payments[w]
            # a winner never bids above mu G / R
            assert bids[w].cost * g.revenue <= inst.value_of(w) * inst.budget


def test_branch_b_within_budget():
    rng = random.Random(12)
    for _ in range(200):
        inst = scaled(rng)
        assert best_user_branch(inst, truthful_bids(inst)).total_payment <= inst.budget
