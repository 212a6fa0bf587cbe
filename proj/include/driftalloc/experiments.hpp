#pragma once

#include "driftalloc/alloc.hpp"
#include "driftalloc/deploy.hpp"
#include "driftalloc/dist.hpp"
#include "driftalloc/loss.hpp"
#include "driftalloc/sim.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace driftalloc {

// Flat key=value experiment description shared by the CLI and config files.
struct ExperimentConfig {
    std::string kind;
    // Duration specs; several are separated by ';' in text form.
    std::vector<std::string> dists{"exp(rate=1)"};
    std::string loss = "expdecay(alpha=1,beta=1)";
    std::vector<double> budgets;  // empty: per-experiment default
    double sigma_e = 1.0;
    double M = 20.0;
    std::vector<double> rates;   // empty: default rate grid
    std::vector<double> delays;  // empty: default delay grid
    std::size_t n_min = 1;       // N_D bounds for verify / simulate
    std::size_t n_max = 8;
    std::uint64_t seed = 0;
    std::size_t n_concepts = 10000;
    std::string policy = "front";  // simulate: front | back | fixed | unit | block:z
    std::string deploy = "none";   // simulate: none | fixed:N | periodic:r | randomized:r
    std::string out;               // output path; empty writes to stdout

    void validate() const;
};

// Applies one key=value setting; unknown keys and bad values throw Parse.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

// key=value lines, '#' comments, blank lines ignored. Errors name the line.
ExperimentConfig parse_config(std::string_view text);

// 40 log-spaced budgets in (0.01·Mσ_e, 0.999·Mσ_e).
std::vector<double> default_budget_grid(double sigma_e, double M);
// 11 evenly spaced delays on [0, 1].
std::vector<double> default_delay_grid();
// 40 log-spaced deployment rates on [0.1, 10].
std::vector<double> default_rate_grid();

struct AllocSweepRow {
    double B = 0.0;
    double t_star = 0.0;
    double loss_fixed = 0.0;
    double loss_opt = 0.0;
    double reduction_pct = 0.0;
};

struct AllocSweep {
    std::vector<AllocSweepRow> rows;
    std::size_t argmax = 0;  // row with the largest reduction
    AgingTag aging = AgingTag::MIXED;
    std::string warning;     // set when the front-loading certificate does not apply
    std::string to_csv() const;
};

// Fixed allocation (level B/σ_e) against budget-binding front-loading.
AllocSweep run_alloc_sweep(const DurationModel& d, const LossCurve& g, const std::vector<double>& budgets,
                           double sigma_e, double M);

struct DelaySweepRow {
    std::string dist;
    double z = 0.0;
    double T_z = 0.0;
    double loss = 0.0;
    bool budget_slack = false;
    bool is_argmin = false;
};

struct DelaySweep {
    std::vector<DelaySweepRow> rows;
    std::string to_csv() const;
};

// Delayed full-rate blocks; per distribution the argmin is the smallest
// delay whose loss is within a relative 1e-9 of the minimum.
DelaySweep run_delay_sweep(const std::vector<std::string>& dists, const LossCurve& g, const BudgetSpec& budget,
                           const std::vector<double>& delays);

struct DeployCompareRow {
    double r_D = 0.0;
    // Fixed-N optimum with the largest N whose effective count fits r_D·E[Y];
    // NaN (blank in CSV) when not even one deployment fits.
    std::size_t n_low = 0;
    double rate_optimal = 0.0;
    double loss_optimal = 0.0;
    // Periodic schedule at the optimal schedule's effective rate.
    double loss_periodic = 0.0;
    double reduction_pct = 0.0;
    // Randomized mixture at r_D itself.
    double loss_randomized = 0.0;
    double gamma = 0.0;
    // (loss_optimal − loss_randomized)/loss_optimal in percent.
    double randomized_gap_pct = 0.0;
};

struct DeployCompare {
    std::vector<DeployCompareRow> rows;
    bool survival_convex = true;
    std::string flag;  // non-convex survival warning
    double max_reduction_pct() const;
    double max_abs_gap_pct() const;
    std::string to_csv() const;
};

DeployCompare run_deploy_compare(const DurationModel& d, const LossCurve& g, const std::vector<double>& rates);

// Builds the allocation policy named by cfg.policy for one duration model.
AllocationPolicy make_policy(std::string_view spec, const DurationModel& d, const BudgetSpec& budget);

struct SimulateReport {
    SimOutcome outcome;
    // Renewal-reward values the simulation estimates, where available.
    std::optional<double> analytic_server;
    std::optional<double> analytic_client;
    std::optional<double> analytic_cost;
    std::optional<double> analytic_deployment_rate;
    std::string to_json() const;
};

SimulateReport run_simulate(const ExperimentConfig& cfg);

// Aging class, PMP certificate, KKT residual norms and chain-vs-solver deltas.
std::string run_verify(const ExperimentConfig& cfg);

// Budget used by single-budget experiments: the first configured value or
// the experiment's default.
BudgetSpec single_budget(const ExperimentConfig& cfg, double fallback_B);

}  // namespace driftalloc
