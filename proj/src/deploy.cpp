#include "driftalloc/deploy.hpp"

#include "driftalloc/error.hpp"
#include "internal/roots.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace driftalloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ∫_a^b F̄ / F̄(a), b may be infinite. Exponential mixtures use expm1 so that
// short gaps keep full relative accuracy; other families use the difference
// of mean residual lives, m(a) − m(b)·F̄(b)/F̄(a), whose absolute error
// (≈ ε·m(a)) is what the stationarity relations are sensitive to.
double survival_ratio_integral(const DurationModel& d, double a, double b) {
    if (std::isinf(b)) return d.mrl(a);
    const double gap = b - a;
    if (const auto* e = std::get_if<Exponential>(&d.family())) return -std::expm1(-e->rate * gap) / e->rate;
    const double log_sa = d.log_survival(a);
    if (const auto* h = std::get_if<HyperExponential>(&d.family())) {
        double sum = 0.0;
        for (std::size_t i = 0; i < h->weights.size(); ++i) {
            const double lambda = h->rates[i];
            sum += h->weights[i] * std::exp(-lambda * a - log_sa) * -std::expm1(-lambda * gap) / lambda;
        }
        return sum;
    }
    const double m_a = d.mrl(a);
    const double log_sb = d.log_survival(b);
    if (!(log_sb > std::log(DurationModel::kSurvivalFloor))) return m_a;
    return m_a - d.mrl(b) * std::exp(log_sb - log_sa);
}

void require_solvable(const DurationModel& d, const LossCurve& g) {
    if (!d.absolutely_continuous()) {
        fail(ErrorCode::NotAbsolutelyContinuous, "deployment stationarity needs an absolutely continuous duration");
    }
    if (g.singular_at_origin()) {
        fail(ErrorCode::Unsupported, "deployment solver needs a loss curve finite at the origin");
    }
    if (!g.strictly_decreasing()) {
        fail(ErrorCode::Unsupported, "deployment solver needs a strictly decreasing loss curve");
    }
}

// Backward recursion from a guess u = δ_N. Each stationarity relation fixes
// ḡ(δ_{k−1}) = ḡ(δ_k) − ḡ'(δ_k)·∫_{δ_k}^{δ_{k+1}}F̄/F̄(δ_k), and δ_{k−1}
// follows from the closed-form inverse of ḡ.
struct Shot {
    bool feasible = false;
    double residual = kInf;  // ḡ(δ_0) − ḡ(0): > 0 means δ_0 < 0 (u too small)
    std::vector<double> offsets;
};

Shot shoot(const DurationModel& d, const LossCurve& g, std::size_t n, double u) {
    const double g0 = g.value(0.0);
    Shot shot;
    shot.offsets.assign(n + 1, 0.0);
    shot.offsets[n] = u;
    double next = kInf;
    for (std::size_t k = n; k >= 1; --k) {
        const double dk = shot.offsets[k];
        const double v = g.value(dk) - g.derivative(dk) * survival_ratio_integral(d, dk, next);
        // ḡ has underflowed: δ_{k−1} is far beyond any feasible position.
        if (!(v > 0.0)) {
            shot.residual = -g0;
            shot.feasible = true;
            return shot;
        }
        if (k == 1) {
            shot.residual = v - g0;
            shot.feasible = true;
            return shot;
        }
        if (!(v < g0)) return shot;  // δ_{k−1} would be ≤ 0
        const double prev = g.inverse(v);
        if (!(prev > 0.0 && prev < dk)) return shot;
        shot.offsets[k - 1] = prev;
        next = dk;
    }
    return shot;
}

}  // namespace

DeploymentSchedule::DeploymentSchedule(std::vector<double> offsets) : offsets_(std::move(offsets)) {
    require(!offsets_.empty(), "schedule needs the initial deployment δ_0 = 0");
    require(offsets_.front() == 0.0, "schedule must start at δ_0 = 0");
    for (std::size_t i = 1; i < offsets_.size(); ++i) {
        require(std::isfinite(offsets_[i]), "schedule offsets must be finite");
        require(offsets_[i] > offsets_[i - 1], "schedule offsets must be strictly increasing");
    }
}

DeploymentSchedule DeploymentSchedule::from_gaps(const std::vector<double>& gaps) {
    std::vector<double> offsets{0.0};
    for (double gap : gaps) {
        require(gap > 0.0, "inter-deployment gaps must be positive");
        offsets.push_back(offsets.back() + gap);
    }
    return DeploymentSchedule(std::move(offsets));
}

DeploymentSchedule DeploymentSchedule::periodic(const DurationModel& d, double period) {
    require(period > 0.0 && std::isfinite(period), "period must be positive and finite");
    std::vector<double> offsets{0.0};
    for (std::size_t j = 1;; ++j) {
        const double t = static_cast<double>(j) * period;
        if (d.survival(t) < kScheduleTruncationMass) break;
        offsets.push_back(t);
    }
    return DeploymentSchedule(std::move(offsets));
}

std::vector<double> DeploymentSchedule::gaps() const {
    std::vector<double> out;
    for (std::size_t i = 1; i < offsets_.size(); ++i) out.push_back(offsets_[i] - offsets_[i - 1]);
    return out;
}

std::string DeploymentSchedule::to_text() const {
    std::ostringstream os;
    os.precision(17);
    for (double t : offsets_) os << t << '\n';
    return os.str();
}

DeploymentSchedule parse_schedule(std::string_view text) {
    std::vector<double> offsets;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
        if (line.empty()) continue;
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
        if (ec != std::errc{} || ptr != line.data() + line.size()) {
            fail(ErrorCode::Parse, "schedule line " + std::to_string(line_no) + ": not a number: '" +
                                       std::string(line) + "'");
        }
        offsets.push_back(v);
    }
    try {
        return DeploymentSchedule(std::move(offsets));
    } catch (const Error& e) {
        fail(ErrorCode::Parse, std::string("schedule: ") + e.what());
    }
}

double client_time_average_loss(const DeploymentSchedule& s, const LossCurve& g, const DurationModel& d) {
    const auto& t = s.offsets();
    double total = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) {
        const double end = j + 1 < t.size() ? t[j + 1] : kInf;
        const double mass = d.integrated_survival(t[j], end);
        if (mass > 0.0) total += g.value(t[j]) * mass;
    }
    return total / d.mean();
}

double effective_count(const DeploymentSchedule& s, const DurationModel& d) {
    double total = 0.0;
    for (std::size_t j = 1; j < s.offsets().size(); ++j) total += d.survival(s.offsets()[j]);
    return total;
}

double effective_rate(const DeploymentSchedule& s, const DurationModel& d) { return effective_count(s, d) / d.mean(); }

KktResiduals kkt_residuals(const DeploymentSchedule& s, const LossCurve& g, const DurationModel& d, double nu) {
    require(nu >= 0.0, "multiplier ν must be non-negative");
    KktResiduals out;
    const auto& t = s.offsets();
    for (std::size_t k = 1; k < t.size(); ++k) {
        const double next = k + 1 < t.size() ? t[k + 1] : kInf;
        const double drop = g.value(t[k - 1]) - g.value(t[k]) - (nu > 0.0 ? nu * d.hazard(t[k]) : 0.0);
        const double r = drop / -g.derivative(t[k]) - survival_ratio_integral(d, t[k], next);
        out.residuals.push_back(r);
        out.max_abs = std::max(out.max_abs, std::abs(r));
    }
    return out;
}

DeploymentSchedule solve_fixed_n(const DurationModel& d, const LossCurve& g, std::size_t n) {
    require(n >= 1, "solve_fixed_n needs at least one deployment");
    require_solvable(d, g);

    const auto residual = [&](double u) {
        const Shot s = shoot(d, g, n, u);
        return s.feasible ? s.residual : kInf;
    };

    // Lower end: a final deployment very early forces δ_0 < 0.
    double lo = 1e-9 * d.mean();
    for (int i = 0; residual(lo) <= 0.0; ++i) {
        if (i == 60) fail(ErrorCode::InfeasibleShot, "solve_fixed_n: no lower bracket for the final deployment");
        lo *= 0.5;
    }
    // Upper end: doubling from the mean until δ_0 > 0.
    double hi = std::max(d.mean(), 2.0 * lo);
    for (int i = 0;; ++i) {
        double r = kInf;
        try {
            r = residual(hi);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SurvivalUnderflow) throw;
            fail(ErrorCode::InfeasibleShot, "solve_fixed_n: survival underflow before bracketing δ_N");
        }
        if (r < 0.0) break;
        if (i == internal::kBisectionCap) fail(ErrorCode::InfeasibleShot, "solve_fixed_n: no upper bracket");
        lo = hi;
        hi *= 2.0;
    }

    double u = internal::bisect(residual, lo, hi, "solve_fixed_n");
    // Step onto the feasible side (δ_0 ≥ 0) of the adjacent-double bracket.
    Shot s = shoot(d, g, n, u);
    for (int i = 0; !(s.feasible && s.residual <= 0.0); ++i) {
        if (i == 8) fail(ErrorCode::InfeasibleShot, "solve_fixed_n: root is not on a feasible shot");
        u = std::nextafter(u, kInf);
        s = shoot(d, g, n, u);
    }
    s.offsets[0] = 0.0;
    return DeploymentSchedule(std::move(s.offsets));
}

DeploymentSchedule chain_exponential(double beta, double lambda, std::size_t n) {
    require(beta > 0.0 && lambda > 0.0, "chain_exponential needs β, λ > 0");
    require(n >= 1, "chain_exponential needs at least one deployment");
    std::vector<double> gaps(n);
    gaps[n - 1] = std::log1p(beta / lambda) / beta;
    for (std::size_t k = n - 1; k >= 1; --k) {
        gaps[k - 1] = std::log1p((beta / lambda) * -std::expm1(-lambda * gaps[k])) / beta;
    }
    return DeploymentSchedule::from_gaps(gaps);
}

FixedNFrontier::FixedNFrontier(DurationModel d, LossCurve g) : d_(std::move(d)), g_(std::move(g)) {
    entries_.push_back({DeploymentSchedule(), 0.0, g_.value(0.0)});
}

const FixedNFrontier::Entry& FixedNFrontier::at(std::size_t n) {
    require(n <= kMaxDeployments, "deployment count beyond the frontier cap");
    while (entries_.size() <= n) {
        DeploymentSchedule s = solve_fixed_n(d_, g_, entries_.size());
        const double count = effective_count(s, d_);
        const double loss = client_time_average_loss(s, g_, d_);
        entries_.push_back({std::move(s), count, loss});
    }
    return entries_[n];
}

RandomizedSchedule randomize_to_rate(FixedNFrontier& frontier, double r_D) {
    require(r_D > 0.0 && std::isfinite(r_D), "deployment rate must be positive and finite");
    const double target = r_D * frontier.duration().mean();
    std::size_t n = 0;
    while (frontier.at(n + 1).count <= target) {
        ++n;
        if (n + 1 > FixedNFrontier::kMaxDeployments) {
            fail(ErrorCode::NoConvergence, "randomize_to_rate: target count not reached by the frontier");
        }
    }
    const auto& low = frontier.at(n);
    const auto& high = frontier.at(n + 1);
    RandomizedSchedule r;
    r.schedule_low = low.schedule;
    r.schedule_high = high.schedule;
    r.n_low = n;
    r.target_count = target;
    r.count_low = low.count;
    r.count_high = high.count;
    r.loss_low = low.loss;
    r.loss_high = high.loss;
    r.gamma = (high.count - target) / (high.count - low.count);
    return r;
}

RandomizedSchedule randomize_to_rate(const DurationModel& d, const LossCurve& g, double r_D) {
    FixedNFrontier frontier(d, g);
    return randomize_to_rate(frontier, r_D);
}

DeploymentSchedule periodic_for_count(const DurationModel& d, double c) {
    require(c > 0.0 && std::isfinite(c), "target count must be positive and finite");
    const auto excess = [&](double p) { return c - effective_count(DeploymentSchedule::periodic(d, p), d); };
    double lo = d.mean();
    double hi = d.mean();
    for (int i = 0; excess(lo) >= 0.0; ++i) {
        if (i == 60) fail(ErrorCode::NoConvergence, "periodic_for_count: target count too large");
        lo *= 0.5;
    }
    for (int i = 0; excess(hi) < 0.0; ++i) {
        if (i == 60) fail(ErrorCode::NoConvergence, "periodic_for_count: target count too small");
        hi *= 2.0;
    }
    return DeploymentSchedule::periodic(d, internal::bisect(excess, lo, hi, "periodic_for_count"));
}

DeploymentSchedule periodic_for_rate(const DurationModel& d, double r_D) {
    require(r_D > 0.0, "deployment rate must be positive");
    return periodic_for_count(d, r_D * d.mean());
}

}  // namespace driftalloc
