#pragma once

#include "driftalloc/rng.hpp"

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace driftalloc {

struct Exponential {
    double rate;
};

struct Weibull {
    double shape;
    double scale;
};

struct Erlang {
    int stages;
    double rate;
};

struct HyperExponential {
    std::vector<double> weights;
    std::vector<double> rates;
};

// Point mass; only used for simulator sanity checks.
struct Deterministic {
    double value;
};

// Distribution of a concept duration Y. Immutable value type; every accessor
// is a pure function of the parameters.
class DurationModel {
public:
    using Family = std::variant<Exponential, Weibull, Erlang, HyperExponential, Deterministic>;

    explicit DurationModel(Family family);

    static DurationModel exponential(double rate) { return DurationModel(Exponential{rate}); }
    static DurationModel weibull(double shape, double scale) { return DurationModel(Weibull{shape, scale}); }
    static DurationModel weibull_with_mean(double shape, double mean);
    static DurationModel erlang(int stages, double rate) { return DurationModel(Erlang{stages, rate}); }
    static DurationModel hyperexponential(std::vector<double> weights, std::vector<double> rates) {
        return DurationModel(HyperExponential{std::move(weights), std::move(rates)});
    }
    static DurationModel deterministic(double value) { return DurationModel(Deterministic{value}); }

    const Family& family() const noexcept { return family_; }
    bool absolutely_continuous() const noexcept { return !std::holds_alternative<Deterministic>(family_); }
    // Text form accepted by parse_duration.
    std::string to_string() const;

    double mean() const noexcept { return mean_; }

    // P(Y > t). Negative t is a domain error.
    double survival(double t) const;
    double log_survival(double t) const;
    double density(double t) const;
    // f/F̄. Returns +infinity where the hazard is unbounded (Weibull k<1 at 0).
    double hazard(double t) const;
    // E[Y - t | Y > t]; throws SurvivalUnderflow once F̄(t) <= 1e-300.
    double mrl(double t) const;
    // ∫_t^∞ F̄(u) du.
    double tail_integral(double t) const;
    // ∫_a^b F̄(u) du, b may be +infinity.
    double integrated_survival(double a, double b) const;
    // Smallest t with F̄(t) <= q, for q in (0, 1).
    double survival_quantile(double q) const;
    // Horizon beyond which improper integrals are handled analytically.
    double truncation_point() const { return survival_quantile(kTruncationMass); }

    double sample(RngStream& rng) const;
    // Inverse-CDF map u -> −ln(1−u)/λ style; only for single-uniform families.
    double sample_from_uniform(double u) const;

    static constexpr double kSurvivalFloor = 1e-300;
    static constexpr double kTruncationMass = 1e-12;

private:
    Family family_;
    double mean_ = 0.0;
};

DurationModel parse_duration(std::string_view text);

enum class AgingTag { DMRL, IMRL, CONSTANT, MIXED };

std::string_view to_string(AgingTag tag);

struct AgingClass {
    AgingTag tag = AgingTag::MIXED;
    std::vector<std::pair<double, double>> evidence;  // (t, m_Y(t))
};

// 64 geometric points from E[Y]/100 to the 0.999 quantile.
std::vector<double> default_aging_grid(const DurationModel& d);

AgingClass classify_aging(const DurationModel& d, std::span<const double> grid, double rel_tol = 1e-9);
AgingClass classify_aging(const DurationModel& d);

// Whether F̄ is convex, judged by a non-increasing density on a fine grid
// over [0, 0.999 quantile].
bool survival_is_convex(const DurationModel& d);

}  // namespace driftalloc
