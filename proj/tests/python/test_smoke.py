import math

import pytest

import driftalloc as da


def test_front_loading_closed_form():
    d = da.DurationModel("exp(rate=1)")
    g = da.LossCurve.exp_decay(1.0, 1.0)
    budget = da.BudgetSpec(10.0, 1.0, 20.0)
    t_star = da.front_loading_switch(d, budget)
    assert t_star == pytest.approx(math.log(2.0), abs=1e-12)
    loss = da.time_average_loss(da.AllocationPolicy.front_loading(t_star, 20.0), g, d)
    assert loss == pytest.approx((1 - 2.0**-21) / 21 + 2.0**-21, abs=1e-10)


def test_exponential_chain_gaps():
    d = da.DurationModel.exponential(1.0)
    g = da.LossCurve.exp_decay(1.0, 1.0)
    gaps = da.solve_fixed_n(d, g, 3).gaps()
    assert gaps == pytest.approx([math.log(4 / 3), math.log(3 / 2), math.log(2)], abs=1e-10)
    assert max(abs(r) for r in da.kkt_residuals(da.solve_fixed_n(d, g, 3), g, d)) < 1e-8


def test_randomized_mixture_hits_target():
    d = da.DurationModel.exponential(1.0)
    g = da.LossCurve.exp_decay(1.0, 1.0)
    r = da.randomize_to_rate(d, g, 0.75)
    assert r.gamma == pytest.approx(0.5)
    assert r.mixture_count() == pytest.approx(0.75, abs=1e-12)


def test_simulate_and_verify_return_dicts():
    out = da.simulate(n_concepts=2000, seed=3, deploy="randomized:0.75")
    assert out["n_concepts"] == 2000
    assert out["client_loss_avg"]["se"] > 0
    rep = da.verify(dist="weibull(k=2,mean=1)", n_max=3)
    assert rep["pmp"] == "NEG_THEN_POS"


def test_experiment_csv_headers():
    csv = da.deploy_compare(rate_grid="0.5,1,2")
    assert csv.splitlines()[0].startswith("r_D,loss_periodic,loss_optimal")
    assert len(csv.strip().splitlines()) == 4


def test_errors_carry_codes():
    with pytest.raises(da.DriftallocError) as info:
        da.DurationModel("nope(x=1)")
    assert info.value.code == "parse"
    with pytest.raises(ValueError):
        da.BudgetSpec(-1.0)
