import csv
import io
import random

import pytest

from crowdsched.harness import (
    COLUMNS,
    GeneratorConfig,
    generate,
    ir_scatter,
    offline_trial,
    online_trial,
    rows_to_csv,
    run_experiment,
    utility_sweep,
)
from crowdsched.model import Q, validate_instance


def test_generate_is_deterministic_and_in_range():
    cfg = GeneratorConfig(n=200, m=20, budget=Q(50), seed=7)
    a, bids = generate(cfg)
    b, _ = generate(cfg)
    assert a == b and validate_instance(a) == []
    assert all(Q(1, 10) <= u.true_cost <= Q(11, 10) for u in a.users)
    assert all(Q(1, 10) <= t.unit_value <= Q(11, 10) for t in a.tasks)
    assert all(1 <= len(u.window) <= 10 and 0 <= u.start <= 100 for u in a.users)
    assert bids[0].cost == a.users[0].true_cost


def test_defaults():
    cfg = GeneratorConfig()
    assert (cfg.n, cfg.m, cfg.budget) == (1000, 100, 1000)


@pytest.mark.parametrize("kw", [{"n": 0}, {"budget": Q(0)}, {"max_length": 0}, {"cost_range": (5, 1)}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        GeneratorConfig(**kw)


def test_trials_respect_budget_and_ir():
    inst, bids = generate(GeneratorConfig(n=60, m=6, budget=Q(60), seed=3))
    off = offline_trial(inst, bids)
    assert off["max_payment"] <= inst.budget and off["ir"]
    on = online_trial(inst, bids, random.Random(0))
    assert on["max_payment"] <= inst.budget and on["ir"]


def test_run_experiment_csv_is_reproducible():
    r1 = run_experiment("revenue-vs-tasks", [2, 5], trials=3, seed=4)
    r2 = run_experiment("revenue-vs-tasks", [2, 5], trials=3, seed=4)
    text = r1.to_csv()
    assert text == r2.to_csv()
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == COLUMNS
    assert [r[:2] for r in rows[1:]] == [["2", "offline"], ["2", "online"], ["5", "offline"], ["5", "online"]]
    assert len(r1.series("online")) == 2


def test_payment_vs_budget_rows_stay_within_budget():
    result = run_experiment("payment-vs-budget", [20, 60], trials=5, seed=1)
    assert all(r.max_payment <= r.budget and r.ir_ok for r in result.rows)


def test_unknown_experiment_and_bad_trials():
    with pytest.raises(ValueError):
        run_experiment("ir-scatter")
    with pytest.raises(ValueError):
        run_experiment("revenue-vs-users", trials=0)


def test_utility_sweep_peaks_at_truth():
    rows = utility_sweep(seed=2)
    best = max(r["utility"] for r in rows)
    truth = [r for r in rows if r["truthful"]]
    assert len(truth) == 1 and truth[0]["utility"] == best
    assert rows_to_csv(rows).splitlines()[0] == "user,true_cost,bid_cost,utility,truthful"


def test_ir_scatter_has_no_negative_utility():
    rows = ir_scatter(seed=1)
    assert rows and all(r["utility"] >= 0 for r in rows)
    assert rows_to_csv([]) == ""
