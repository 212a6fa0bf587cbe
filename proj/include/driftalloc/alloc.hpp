#pragma once

#include "driftalloc/dist.hpp"
#include "driftalloc/loss.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace driftalloc {

// Cost-rate budget B, price per unit resource-time σ_e and maximum level M.
struct BudgetSpec {
    double B = 0.0;
    double sigma_e = 1.0;
    double M = 1.0;

    void validate() const;
    bool binding() const { return B < M * sigma_e; }
    // B₁ = B·E[Y]/σ_e: budget expressed in resource-time per concept.
    double per_concept(const DurationModel& d) const { return B * d.mean() / sigma_e; }
    // E[Y]·B/(M·σ_e): survival mass the full-rate block may cover.
    double block_mass(const DurationModel& d) const { return d.mean() * B / (M * sigma_e); }
};

// Piecewise-constant resource level e(t): level[i] on [breakpoints[i],
// breakpoints[i+1]), the last level extends to infinity. breakpoints[0] = 0.
class AllocationPolicy {
public:
    AllocationPolicy(std::vector<double> breakpoints, std::vector<double> levels);

    static AllocationPolicy constant(double level) { return AllocationPolicy({0.0}, {level}); }
    // e = M on [0, t*), 0 afterwards (t* may be infinite).
    static AllocationPolicy front_loading(double t_star, double M);
    // e = 0 on [0, t*), M afterwards.
    static AllocationPolicy back_loading(double t_star, double M);
    // e = M on [z, T), 0 elsewhere (T may be infinite).
    static AllocationPolicy block(double z, double T, double M);

    const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
    const std::vector<double>& levels() const noexcept { return levels_; }
    std::size_t segments() const noexcept { return levels_.size(); }
    // End of segment i (infinity for the last one).
    double segment_end(std::size_t i) const;
    // Cumulative progress x(t_i) at the start of segment i.
    double progress_at_segment(std::size_t i) const { return progress_[i]; }

    double level(double t) const;
    double progress(double t) const;
    double max_level() const;

    // Set when the budget could not be spent (delayed block past the tail mass).
    bool budget_slack = false;
    // Set when a zero budget means the policy never allocates.
    bool never_allocates = false;

private:
    std::vector<double> breakpoints_;
    std::vector<double> levels_;
    std::vector<double> progress_;
};

// Pointwise λ·e₁ + (1−λ)·e₂ on the merged breakpoints.
AllocationPolicy blend(const AllocationPolicy& a, const AllocationPolicy& b, double lambda);

// Switch time of the front-loading policy that exactly spends a binding
// budget; +∞ when B ≥ M·σ_e.
double front_loading_switch(const DurationModel& d, const BudgetSpec& budget);

struct BackLoadingSwitch {
    double t_star = 0.0;
    bool never_allocates = false;
};

// Idle-then-full switch time: ∫_{t*}^∞ F̄ = E[Y]·B/(M·σ_e); 0 when the
// budget is non-binding, +∞ with `never_allocates` when B = 0.
BackLoadingSwitch back_loading_switch(const DurationModel& d, const BudgetSpec& budget);

// Full-rate block starting at delay z and ending where the budget is spent;
// runs to infinity with `budget_slack` when the tail mass beyond z is too small.
AllocationPolicy delayed_block(const DurationModel& d, const BudgetSpec& budget, double z);

struct LossEvalOptions {
    double abs_tol = 1e-10;
    // Use per-segment closed forms where available (ExpDecay with exponential
    // or hyperexponential durations). Disable to force quadrature.
    bool closed_forms = true;
};

// (1/E[Y])·∫_0^∞ ḡ(x(t)) F̄(t) dt; +∞ when ḡ is singular at the origin and
// the policy idles at x = 0 on a set of positive survival mass.
double time_average_loss(const AllocationPolicy& policy, const LossCurve& g, const DurationModel& d,
                         const LossEvalOptions& opts = {});

// σ_e·∫_0^∞ e(t) F̄(t) dt / E[Y].
double cost_rate(const AllocationPolicy& policy, const DurationModel& d, double sigma_e);

enum class SignPattern { NEG_THEN_POS, POS_THEN_NEG, ALL_NEG, ALL_POS, INCONSISTENT };

std::string_view to_string(SignPattern p);

enum class SwitchKind { FrontLoading, BackLoading };

struct PmpReport {
    SwitchKind kind = SwitchKind::FrontLoading;
    double t_star = 0.0;
    double nu = 0.0;
    std::vector<double> grid;
    std::vector<double> phi;
    // Sign pattern of φ on the grid; a point counts as zero when |φ(t)| is
    // within 1e-9 of max(|p(t)|, ν·F̄(t)), the two terms that cancel in φ.
    SignPattern observed = SignPattern::INCONSISTENT;
    // `observed` when φ agrees with the policy's bang-bang control everywhere
    // on the grid (e = M where φ < 0, e = 0 where φ > 0), INCONSISTENT otherwise.
    SignPattern sign_pattern = SignPattern::INCONSISTENT;
    double phi_at_switch = 0.0;
    // max(|p(t*)|, ν·F̄(t*)); the certificate threshold is 1e-8·scale.
    double scale = 1.0;
    double tolerance = 0.0;  // 1e-9·scale, the zero band at the switch
    // Optimality certificate: expected pattern and |φ(t*)| < 1e-8·scale.
    bool certified = false;
};

// 512 geometric points on (0, 0.999 quantile).
std::vector<double> default_pmp_grid(const DurationModel& d);

// Switching function φ(t) = ∫_t^∞ ḡ'(x(s)) F̄(s) ds + ν F̄(t) for a
// single-switch policy under a binding budget.
PmpReport pmp_verify(const AllocationPolicy& policy, const LossCurve& g, const DurationModel& d,
                     const BudgetSpec& budget, std::span<const double> grid = {});

}  // namespace driftalloc
