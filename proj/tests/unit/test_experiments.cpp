#include <doctest.h>

#include "driftalloc/error.hpp"
#include "driftalloc/experiments.hpp"

#include <json.hpp>

#include <cmath>
#include <string>

using namespace driftalloc;
using doctest::Approx;

TEST_CASE("config parsing and overrides") {
    const auto cfg = parse_config(
        "# deployment comparison\n"
        "kind = deploy-compare\n"
        "dist = weibull(k=2,mean=1); exp(rate=1)\n"
        "loss = expdecay(alpha=1,beta=7.5)\n"
        "rate_grid = log:0.5:4:8\n"
        "budget = 1,2,3\n"
        "seed = 17  # trailing comment\n");
    CHECK(cfg.kind == "deploy-compare");
    CHECK(cfg.dists.size() == 2);
    CHECK(cfg.rates.size() == 8);
    CHECK(cfg.budgets == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(cfg.seed == 17);

    auto copy = cfg;
    apply_setting(copy, "max-rate", "5");
    CHECK(copy.M == 5.0);

    try {
        parse_config("kind=verify\nbogus=1\n");
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Parse);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("dist=nope(x=1)\n"), Error);
    CHECK_THROWS_AS(parse_config("seed=-3\n"), Error);
    CHECK_THROWS_AS(parse_config("just text\n"), Error);
}

TEST_CASE("default grids") {
    const auto b = default_budget_grid(1.0, 20.0);
    CHECK(b.size() == 40);
    CHECK(b.front() == Approx(0.2));
    CHECK(b.back() == Approx(19.98));
    CHECK(default_delay_grid().size() == 11);
    CHECK(default_rate_grid().size() == 40);
}

TEST_CASE("alloc sweep: closed-form row and narrowing gap") {
    const auto d = DurationModel::exponential(1.0);
    const auto g = LossCurve::exp_decay(1.0, 1.0);
    const auto sweep = run_alloc_sweep(d, g, {10.0, 19.9}, 1.0, 20.0);
    CHECK(sweep.rows[0].loss_fixed == Approx(1.0 / 11.0).epsilon(1e-12));
    CHECK(sweep.rows[0].loss_opt == Approx((1.0 - std::pow(2.0, -21)) / 21.0 + std::pow(2.0, -21)).epsilon(1e-10));
    CHECK(sweep.rows[0].reduction_pct == Approx(47.6185).epsilon(1e-5));
    CHECK(sweep.rows[1].reduction_pct < 1.0);
    CHECK(sweep.warning.empty());
    CHECK(sweep.to_csv().rfind("B,t_star,loss_fixed,loss_opt,reduction_pct\n", 0) == 0);

    const auto imrl = run_alloc_sweep(DurationModel::weibull_with_mean(0.5, 1.0), g, {5.0}, 1.0, 20.0);
    CHECK_FALSE(imrl.warning.empty());
}

TEST_CASE("delay sweep argmins") {
    const auto sweep = run_delay_sweep({"weibull(k=2,mean=1)", "weibull(k=0.5,mean=1)", "exp(rate=1)"},
                                       LossCurve::exp_decay(1.0, 1.0), {0.1, 1.0, 20.0}, default_delay_grid());
    CHECK(sweep.rows.size() == 33);
    for (const auto& r : sweep.rows) {
        if (!r.is_argmin) continue;
        if (r.dist.rfind("weibull(k=2", 0) == 0 || r.dist.rfind("exp", 0) == 0) CHECK(r.z == 0.0);
        if (r.dist.rfind("weibull(k=0.5", 0) == 0) CHECK(r.z > 0.0);
    }
    CHECK_THROWS_AS(run_delay_sweep({"exp(rate=1)"}, LossCurve::exp_decay(1.0, 1.0), {30.0, 1.0, 20.0}, {0.0}),
                    Error);
}

TEST_CASE("deploy compare columns") {
    const auto d = DurationModel::exponential(1.0);
    const auto g = LossCurve::exp_decay(1.0, 1.0);
    const auto cmp = run_deploy_compare(d, g, {0.25, 0.5, 0.75, 1.0});
    REQUIRE(cmp.rows.size() == 4);
    CHECK(cmp.rows[0].n_low == 0);
    CHECK(std::isnan(cmp.rows[0].loss_optimal));
    // At β = λ the chain coincides with the periodic schedule of the same count.
    CHECK(std::abs(cmp.rows[1].reduction_pct) < 1e-8);
    CHECK(cmp.rows[1].gamma == 1.0);
    CHECK(cmp.rows[2].loss_randomized == Approx(0.5 * 0.75 + 0.5 * 2.0 / 3.0).epsilon(1e-12));
    CHECK(cmp.rows[3].loss_optimal == Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(cmp.survival_convex);
    CHECK(cmp.flag.empty());
    CHECK_FALSE(run_deploy_compare(DurationModel::erlang(2, 2.0), g, {1.0}).flag.empty());
    const auto csv = cmp.to_csv();
    CHECK(csv.rfind("r_D,loss_periodic,loss_optimal,loss_randomized,gamma,N_low,", 0) == 0);
    CHECK(csv == run_deploy_compare(d, g, {0.25, 0.5, 0.75, 1.0}).to_csv());
}

TEST_CASE("verify report") {
    ExperimentConfig cfg;
    cfg.n_max = 4;
    auto j = nlohmann::json::parse(run_verify(cfg));
    CHECK(j["aging"] == "CONSTANT");
    CHECK(j["pmp"] == "NEG_THEN_POS");
    CHECK(j["phi_at_tstar"].get<double>() < 1e-8);
    CHECK(j["chain_vs_solver_max_delta"].get<double>() < 1e-9);
    CHECK(j["kkt_max_residual"].get<double>() < 1e-8);

    cfg.dists = {"erlang(n=2,rate=2)"};
    j = nlohmann::json::parse(run_verify(cfg));
    CHECK(j["survival_convex"] == false);
    CHECK(j["constrained_kkt"] == "heuristic");
    CHECK(j["chain_vs_solver_max_delta"].is_null());
}

TEST_CASE("simulate runner") {
    ExperimentConfig cfg;
    cfg.n_concepts = 20000;
    cfg.seed = 8;
    cfg.policy = "unit";
    cfg.deploy = "fixed:2";
    const auto rep = run_simulate(cfg);
    REQUIRE(rep.analytic_client);
    CHECK(*rep.analytic_client == Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(std::abs(rep.outcome.client_loss_avg.mean - *rep.analytic_client) < 4.0 * rep.outcome.client_loss_avg.se);
    CHECK(rep.to_json() == run_simulate(cfg).to_json());

    cfg.deploy = "weekly";
    CHECK_THROWS_AS(run_simulate(cfg), Error);
    cfg.deploy = "none";
    cfg.policy = "sideways";
    CHECK_THROWS_AS(run_simulate(cfg), Error);
}
