#pragma once

#include "driftalloc/alloc.hpp"
#include "driftalloc/deploy.hpp"
#include "driftalloc/dist.hpp"
#include "driftalloc/loss.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace driftalloc {

struct SimConfig {
    std::size_t n_concepts = 10000;
    std::uint64_t seed = 0;
    DurationModel duration = DurationModel::exponential(1.0);
    LossCurve loss = LossCurve::exp_decay(1.0, 1.0);
    AllocationPolicy policy = AllocationPolicy::constant(1.0);
    double sigma_e = 1.0;
    // Deployment: none (clients see the server model continuously), a static
    // schedule, or a randomized pair.
    std::optional<DeploymentSchedule> schedule;
    std::optional<RandomizedSchedule> randomized;
    // Keep per-cycle records (needed for the CSV export).
    bool keep_records = true;

    void validate() const;
};

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
};

struct CycleRecord {
    double duration = 0.0;
    double server_loss = 0.0;  // ∫_0^Y ḡ(x(t)) dt
    double client_loss = 0.0;  // ∫_0^Y ḡ(x(δ_{J(t)})) dt, staircase
    double cost = 0.0;         // σ_e ∫_0^Y e(t) dt
    std::size_t deployments = 0;
};

struct SimOutcome {
    std::size_t n_concepts = 0;
    double total_time = 0.0;
    // Renewal-reward ratio estimates Σ reward / Σ Y with jackknife standard errors.
    Estimate server_loss_avg;
    Estimate client_loss_avg;
    Estimate cost_rate_avg;
    Estimate deployment_rate_avg;
    // Plain per-concept mean of N_i with its standard error.
    Estimate deployments_per_concept;
    // Set when a cycle integral diverged (loss curve singular at the origin).
    bool server_infinite = false;
    bool client_infinite = false;
    std::vector<CycleRecord> records;

    std::string summary_json() const;
    // Columns: cycle, duration, server_cycle_loss, client_cycle_loss, cost, deployments.
    std::string records_csv() const;
};

// Cycle integrals for one concept of length y (closed forms, no time stepping).
CycleRecord simulate_cycle(const SimConfig& cfg, double y, const DeploymentSchedule* schedule);

// Concept i draws its duration from substream (seed, i, Duration) and, for
// randomized deployment, its schedule from (seed, i, ScheduleChoice).
SimOutcome simulate(const SimConfig& cfg);

// Ratio estimate Σ num / Σ den with a leave-one-cycle-out jackknife error.
Estimate jackknife_ratio(const std::vector<double>& num, const std::vector<double>& den);

}  // namespace driftalloc
