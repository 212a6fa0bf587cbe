#include <doctest.h>

#include "driftalloc/alloc.hpp"
#include "driftalloc/deploy.hpp"
#include "driftalloc/error.hpp"
#include "driftalloc/sim.hpp"

#include <json.hpp>

#include <cmath>
#include <string>

using namespace driftalloc;
using doctest::Approx;

namespace {

const LossCurve kUnitExp = LossCurve::exp_decay(1.0, 1.0);

bool within(const Estimate& e, double truth, double k = 3.0) { return std::abs(e.mean - truth) < k * e.se; }

}  // namespace

TEST_CASE("zero allocation gives the initial loss exactly") {
    SimConfig cfg;
    cfg.n_concepts = 1000;
    cfg.duration = DurationModel::weibull_with_mean(2.0, 1.0);
    cfg.loss = LossCurve::exp_decay(0.7, 2.0);
    cfg.policy = AllocationPolicy::constant(0.0);
    const auto out = simulate(cfg);
    CHECK(out.server_loss_avg.mean == Approx(0.7).epsilon(1e-14));
    CHECK(out.server_loss_avg.se < 1e-14);
    CHECK(out.cost_rate_avg.mean == 0.0);
}

TEST_CASE("deterministic duration: single-cycle closed form") {
    SimConfig cfg;
    cfg.n_concepts = 50;
    cfg.duration = DurationModel::deterministic(2.0);
    cfg.policy = AllocationPolicy::constant(1.0);
    const auto out = simulate(cfg);
    CHECK(std::abs(out.server_loss_avg.mean - (1.0 - std::exp(-2.0)) / 2.0) < 1e-14);
    CHECK(out.server_loss_avg.se < 1e-14);
    CHECK(out.total_time == Approx(100.0).epsilon(1e-15));
    CHECK(out.cost_rate_avg.mean == Approx(1.0).epsilon(1e-15));

    // Staircase client loss with deployments at 0.5 and 1.5 inside [0, 2).
    cfg.schedule = DeploymentSchedule({0.0, 0.5, 1.5, 3.0});
    const auto staged = simulate(cfg);
    const double expect = (0.5 + std::exp(-0.5) * 1.0 + std::exp(-1.5) * 0.5) / 2.0;
    CHECK(std::abs(staged.client_loss_avg.mean - expect) < 1e-14);
    CHECK(staged.deployments_per_concept.mean == 2.0);
    CHECK(staged.deployment_rate_avg.mean == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("front-loading: Monte Carlo matches the renewal-reward value") {
    SimConfig cfg;
    cfg.n_concepts = 1000000;
    cfg.seed = 42;
    cfg.keep_records = false;
    const BudgetSpec budget{10.0, 1.0, 20.0};
    const auto d = DurationModel::exponential(1.0);
    cfg.policy = AllocationPolicy::front_loading(front_loading_switch(d, budget), 20.0);
    const auto out = simulate(cfg);
    CHECK(within(out.server_loss_avg, time_average_loss(cfg.policy, kUnitExp, d)));
    CHECK(within(out.server_loss_avg, 0.047619));
    CHECK(within(out.cost_rate_avg, cost_rate(cfg.policy, d, 1.0)));
    CHECK(out.cost_rate_avg.mean == Approx(10.0).epsilon(1e-2));
}

TEST_CASE("randomized deployment: count and client loss") {
    const auto d = DurationModel::exponential(1.0);
    const auto mix = randomize_to_rate(d, kUnitExp, 0.75);
    SimConfig cfg;
    cfg.n_concepts = 1000000;
    cfg.seed = 3;
    cfg.keep_records = false;
    cfg.randomized = mix;
    const auto out = simulate(cfg);
    CHECK(within(out.deployments_per_concept, 0.75));
    CHECK(within(out.deployment_rate_avg, 0.75));
    CHECK(within(out.client_loss_avg, 0.5 * 0.75 + 0.5 * 2.0 / 3.0));
    CHECK(within(out.client_loss_avg, mix.mixture_loss()));
}

TEST_CASE("γ = 1 reproduces the static schedule trace") {
    const auto d = DurationModel::erlang(2, 2.0);
    auto mix = randomize_to_rate(d, kUnitExp, 1.3);
    mix.gamma = 1.0;
    SimConfig a;
    a.n_concepts = 2000;
    a.seed = 9;
    a.duration = d;
    a.randomized = mix;
    SimConfig b = a;
    b.randomized.reset();
    b.schedule = mix.schedule_low;
    CHECK(simulate(a).records_csv() == simulate(b).records_csv());
}

TEST_CASE("seed determinism and per-cycle ordering") {
    SimConfig cfg;
    cfg.n_concepts = 5000;
    cfg.seed = 1234;
    cfg.duration = DurationModel::hyperexponential({0.5, 0.5}, {0.5, 2.0});
    cfg.policy = AllocationPolicy::block(0.3, 1.2, 4.0);
    cfg.schedule = DeploymentSchedule({0.0, 0.4, 0.9, 2.0});
    const auto a = simulate(cfg);
    const auto b = simulate(cfg);
    CHECK(a.records_csv() == b.records_csv());
    CHECK(a.summary_json() == b.summary_json());
    cfg.seed = 1235;
    CHECK(simulate(cfg).records_csv() != a.records_csv());

    double total = 0.0;
    for (const auto& r : a.records) {
        CHECK(r.client_loss >= r.server_loss - 1e-15);
        total += r.duration;
    }
    CHECK(a.total_time == total);
}

TEST_CASE("client loss under unit training matches the deployment formula") {
    const auto d = DurationModel::weibull_with_mean(2.0, 1.0);
    SimConfig cfg;
    cfg.n_concepts = 200000;
    cfg.seed = 5;
    cfg.keep_records = false;
    cfg.duration = d;
    cfg.schedule = solve_fixed_n(d, kUnitExp, 3);
    const auto out = simulate(cfg);
    CHECK(within(out.client_loss_avg, client_time_average_loss(*cfg.schedule, kUnitExp, d)));
    CHECK(within(out.deployment_rate_avg, effective_rate(*cfg.schedule, d)));
}

TEST_CASE("singular loss flags divergence") {
    SimConfig cfg;
    cfg.n_concepts = 100;
    cfg.loss = LossCurve::pure_power(0.5);
    cfg.policy = AllocationPolicy::back_loading(0.5, 1.0);
    const auto out = simulate(cfg);
    CHECK(out.server_infinite);
    const auto j = nlohmann::json::parse(out.summary_json());
    CHECK(j["server_loss_avg"]["mean"].is_null());
    CHECK(j["server_infinite"].get<bool>());

    cfg.policy = AllocationPolicy::constant(1.0);
    const auto ok = simulate(cfg);
    CHECK_FALSE(ok.server_infinite);
    CHECK(std::isfinite(ok.server_loss_avg.mean));
}

TEST_CASE("jackknife ratio") {
    CHECK(jackknife_ratio({1.0, 1.0}, {2.0, 2.0}).mean == 0.5);
    CHECK(jackknife_ratio({1.0, 1.0}, {2.0, 2.0}).se == 0.0);
    CHECK(jackknife_ratio({1.0, 3.0, 2.0}, {1.0, 1.0, 1.0}).se == Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-12));
    CHECK_THROWS_AS(jackknife_ratio({}, {}), Error);
    SimConfig bad;
    bad.n_concepts = 0;
    CHECK_THROWS_AS(simulate(bad), Error);
}
