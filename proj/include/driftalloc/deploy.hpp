#pragma once

#include "driftalloc/dist.hpp"
#include "driftalloc/loss.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace driftalloc {

// Deployment offsets δ_0 = 0 < δ_1 < … < δ_N relative to the concept start.
// δ_0 is the initial deployment and does not count against the rate.
class DeploymentSchedule {
public:
    DeploymentSchedule() : offsets_{0.0} {}
    explicit DeploymentSchedule(std::vector<double> offsets);

    // Cumulative offsets from gaps Δ_1..Δ_N.
    static DeploymentSchedule from_gaps(const std::vector<double>& gaps);
    // Offsets jp for j ≥ 1 while F̄(jp) ≥ 1e-12.
    static DeploymentSchedule periodic(const DurationModel& d, double period);

    const std::vector<double>& offsets() const noexcept { return offsets_; }
    std::size_t count() const noexcept { return offsets_.size() - 1; }
    std::vector<double> gaps() const;

    // One offset per line, first line 0.
    std::string to_text() const;

private:
    std::vector<double> offsets_;
};

DeploymentSchedule parse_schedule(std::string_view text);

// Survival mass below which periodic schedules are truncated.
inline constexpr double kScheduleTruncationMass = 1e-12;

// (1/E[Y])·Σ_j ḡ(δ_j)·∫_{δ_j}^{δ_{j+1}} F̄, δ_{N+1} = ∞ (unit training rate).
double client_time_average_loss(const DeploymentSchedule& s, const LossCurve& g, const DurationModel& d);

// Σ_{j≥1} F̄(δ_j): expected deployments per concept.
double effective_count(const DeploymentSchedule& s, const DurationModel& d);

// effective_count / E[Y].
double effective_rate(const DeploymentSchedule& s, const DurationModel& d);

// Stationarity residuals in time units, one per k = 1..N:
//   (ḡ(δ_{k−1}) − ḡ(δ_k) − ν·h(δ_k)) / (−ḡ'(δ_k)) − ∫_{δ_k}^{δ_{k+1}} F̄ / F̄(δ_k)
// with δ_{N+1} = ∞ (the last ratio is the mean residual life). ν = 0 gives
// the fixed-count conditions; ν > 0 the rate-constrained ones.
struct KktResiduals {
    std::vector<double> residuals;
    double max_abs = 0.0;
};

KktResiduals kkt_residuals(const DeploymentSchedule& s, const LossCurve& g, const DurationModel& d, double nu = 0.0);

// Loss-minimizing schedule with exactly N deployments, by shooting on δ_N
// with a closed-form backward recursion. Requires ḡ strictly decreasing and
// finite at the origin, and an absolutely continuous duration.
DeploymentSchedule solve_fixed_n(const DurationModel& d, const LossCurve& g, std::size_t n);

// Closed-form optimal gaps for ExpDecay(·, β) with Exponential(λ) durations.
DeploymentSchedule chain_exponential(double beta, double lambda, std::size_t n);

// Lazily solved fixed-N optima for one (d, g) pair, N = 0, 1, 2, …
class FixedNFrontier {
public:
    struct Entry {
        DeploymentSchedule schedule;
        double count = 0.0;
        double loss = 0.0;
    };

    FixedNFrontier(DurationModel d, LossCurve g);

    const Entry& at(std::size_t n);
    const DurationModel& duration() const noexcept { return d_; }
    const LossCurve& loss_curve() const noexcept { return g_; }

    // Cap on N when searching for a target count.
    static constexpr std::size_t kMaxDeployments = 4096;

private:
    DurationModel d_;
    LossCurve g_;
    std::vector<Entry> entries_;
};

// Per concept: schedule_low with probability γ, otherwise schedule_high.
struct RandomizedSchedule {
    DeploymentSchedule schedule_low;
    DeploymentSchedule schedule_high;
    double gamma = 1.0;
    std::size_t n_low = 0;
    double target_count = 0.0;
    double count_low = 0.0;
    double count_high = 0.0;
    double loss_low = 0.0;
    double loss_high = 0.0;

    double mixture_count() const { return gamma * count_low + (1.0 - gamma) * count_high; }
    double mixture_loss() const { return gamma * loss_low + (1.0 - gamma) * loss_high; }
};

// Mixes the fixed-N optima bracketing B₂ = r_D·E[Y] so that the expected
// effective count equals B₂.
RandomizedSchedule randomize_to_rate(FixedNFrontier& frontier, double r_D);
RandomizedSchedule randomize_to_rate(const DurationModel& d, const LossCurve& g, double r_D);

// Periodic schedule with Σ_{j≥1} F̄(jp) = c (truncated at 1e-12 survival).
DeploymentSchedule periodic_for_count(const DurationModel& d, double c);
DeploymentSchedule periodic_for_rate(const DurationModel& d, double r_D);

}  // namespace driftalloc
