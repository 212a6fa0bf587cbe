#include "driftalloc/alloc.hpp"

#include "driftalloc/error.hpp"
#include "driftalloc/quadrature.hpp"
#include "internal/roots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace driftalloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Upper end of the bracket for a root of an increasing function that is
// negative at `lo`: starts at `start` and doubles until the sign flips.
template <class F>
double expand_bracket(F&& f, double lo, double start, const char* what) {
    double hi = std::max(start, lo + 1e-300);
    for (int i = 0; i < internal::kBisectionCap; ++i) {
        if (f(hi) >= 0.0) return hi;
        hi = lo + 2.0 * (hi - lo) + 1e-300;
    }
    fail(ErrorCode::NoConvergence, std::string(what) + ": could not bracket the switch time");
}

// ḡ' with the kink of the clamped linear curve resolved to its right derivative.
double slope(const LossCurve& g, double x) {
    if (const auto* lin = std::get_if<Linear>(&g.family())) return x < g.clamp_point() ? -lin->beta : 0.0;
    return g.derivative(x);
}

// Exponential mixtures as (weight, rate) pairs; empty for other families.
std::vector<std::pair<double, double>> exponential_mixture(const DurationModel& d) {
    if (const auto* e = std::get_if<Exponential>(&d.family())) return {{1.0, e->rate}};
    if (const auto* h = std::get_if<HyperExponential>(&d.family())) {
        std::vector<std::pair<double, double>> out;
        for (std::size_t i = 0; i < h->weights.size(); ++i) out.emplace_back(h->weights[i], h->rates[i]);
        return out;
    }
    return {};
}

// ∫_a^b α e^{−β(x0 + e(t−a))} F̄(t) dt for an exponential-mixture F̄.
double expdecay_segment(const ExpDecay& g, const std::vector<std::pair<double, double>>& mix, double a, double b,
                        double x0, double e) {
    double sum = 0.0;
    for (const auto& [w, lambda] : mix) {
        const double k = g.beta * e + lambda;
        const double span = std::isinf(b) ? 1.0 : -std::expm1(-k * (b - a));
        sum += w * std::exp(-g.beta * x0 - lambda * a) * span / k;
    }
    return g.alpha * sum;
}

// Survival quantile levels used to split long quadrature ranges so that the
// adaptive rule sees the bulk and the tail of F̄ separately.
constexpr double kSplitLevels[] = {0.5, 1e-1, 1e-2, 1e-4, 1e-6, 1e-9};

// ∫_a^b f(t) dt over a range inside [0, truncation point], split at survival quantiles.
double integrate_split(const quadrature::Integrand& f, const DurationModel& d, double a, double b, double abs_tol,
                       bool singular_left) {
    std::vector<double> nodes{a};
    for (double q : kSplitLevels) {
        const double t = d.survival_quantile(q);
        if (t > a && t < b) nodes.push_back(t);
    }
    nodes.push_back(b);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        const bool use_ts = singular_left && i == 0;
        const auto r = use_ts ? quadrature::tanh_sinh(f, nodes[i], nodes[i + 1], abs_tol)
                              : quadrature::gauss_kronrod(f, nodes[i], nodes[i + 1], abs_tol);
        total += r.value;
    }
    return total;
}

}  // namespace

void BudgetSpec::validate() const {
    if (!(B >= 0.0) || std::isnan(B)) fail(ErrorCode::Domain, "budget B must be >= 0");
    require(sigma_e > 0.0 && std::isfinite(sigma_e), "price sigma_e must be > 0");
    require(M > 0.0 && std::isfinite(M), "max level M must be > 0");
}

AllocationPolicy::AllocationPolicy(std::vector<double> breakpoints, std::vector<double> levels)
    : breakpoints_(std::move(breakpoints)), levels_(std::move(levels)) {
    require(!breakpoints_.empty() && breakpoints_.size() == levels_.size(),
            "policy needs one level per breakpoint");
    require(breakpoints_.front() == 0.0, "policy breakpoints must start at 0");
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
        require(std::isfinite(breakpoints_[i]) && breakpoints_[i] > breakpoints_[i - 1],
                "policy breakpoints must be finite and strictly increasing");
    }
    for (double e : levels_) require(e >= 0.0 && std::isfinite(e), "policy levels must be finite and >= 0");
    progress_.resize(levels_.size());
    progress_[0] = 0.0;
    for (std::size_t i = 1; i < levels_.size(); ++i) {
        progress_[i] = progress_[i - 1] + levels_[i - 1] * (breakpoints_[i] - breakpoints_[i - 1]);
    }
}

AllocationPolicy AllocationPolicy::front_loading(double t_star, double M) {
    require(t_star >= 0.0, "switch time must be >= 0");
    if (t_star == 0.0) return constant(0.0);
    if (std::isinf(t_star)) return constant(M);
    return AllocationPolicy({0.0, t_star}, {M, 0.0});
}

AllocationPolicy AllocationPolicy::back_loading(double t_star, double M) {
    require(t_star >= 0.0, "switch time must be >= 0");
    if (t_star == 0.0) return constant(M);
    if (std::isinf(t_star)) {
        auto p = constant(0.0);
        p.never_allocates = true;
        return p;
    }
    return AllocationPolicy({0.0, t_star}, {0.0, M});
}

AllocationPolicy AllocationPolicy::block(double z, double T, double M) {
    require(z >= 0.0 && std::isfinite(z), "block start must be finite and >= 0");
    require(T >= z, "block end must not precede its start");
    if (T == z) return constant(0.0);
    if (z == 0.0) return front_loading(T, M);
    if (std::isinf(T)) return AllocationPolicy({0.0, z}, {0.0, M});
    return AllocationPolicy({0.0, z, T}, {0.0, M, 0.0});
}

double AllocationPolicy::segment_end(std::size_t i) const {
    return i + 1 < breakpoints_.size() ? breakpoints_[i + 1] : kInf;
}

double AllocationPolicy::level(double t) const {
    require(t >= 0.0, "policy evaluated at negative time");
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    return levels_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

double AllocationPolicy::progress(double t) const {
    require(t >= 0.0, "policy evaluated at negative time");
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    const auto i = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
    return progress_[i] + levels_[i] * (t - breakpoints_[i]);
}

double AllocationPolicy::max_level() const { return *std::max_element(levels_.begin(), levels_.end()); }

AllocationPolicy blend(const AllocationPolicy& a, const AllocationPolicy& b, double lambda) {
    require(lambda >= 0.0 && lambda <= 1.0, "blend weight must lie in [0, 1]");
    std::vector<double> bp;
    std::merge(a.breakpoints().begin(), a.breakpoints().end(), b.breakpoints().begin(), b.breakpoints().end(),
               std::back_inserter(bp));
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    std::vector<double> lv;
    lv.reserve(bp.size());
    for (double t : bp) lv.push_back(lambda * a.level(t) + (1.0 - lambda) * b.level(t));
    return AllocationPolicy(std::move(bp), std::move(lv));
}

double front_loading_switch(const DurationModel& d, const BudgetSpec& budget) {
    budget.validate();
    if (!budget.binding()) return kInf;
    if (budget.B == 0.0) return 0.0;
    const double target = budget.block_mass(d);
    const auto f = [&](double t) { return d.integrated_survival(0.0, t) - target; };
    const double hi = expand_bracket(f, 0.0, d.truncation_point(), "front_loading_switch");
    return internal::bisect(f, 0.0, hi, "front_loading_switch");
}

BackLoadingSwitch back_loading_switch(const DurationModel& d, const BudgetSpec& budget) {
    budget.validate();
    if (!budget.binding()) return {0.0, false};
    if (budget.B == 0.0) return {kInf, true};
    const double target = budget.block_mass(d);
    // increasing in t: target − ∫_t^∞ F̄
    const auto f = [&](double t) { return target - d.tail_integral(t); };
    const double hi = expand_bracket(f, 0.0, d.truncation_point(), "back_loading_switch");
    return {internal::bisect(f, 0.0, hi, "back_loading_switch"), false};
}

AllocationPolicy delayed_block(const DurationModel& d, const BudgetSpec& budget, double z) {
    budget.validate();
    require(z >= 0.0 && std::isfinite(z), "delay z must be finite and >= 0");
    if (budget.B == 0.0) {
        auto p = AllocationPolicy::constant(0.0);
        p.never_allocates = true;
        return p;
    }
    if (!budget.binding()) {
        auto p = AllocationPolicy::block(z, kInf, budget.M);
        p.budget_slack = cost_rate(p, d, budget.sigma_e) < budget.B;
        return p;
    }
    const double target = budget.block_mass(d);
    const double tail = d.tail_integral(z);
    if (tail <= target) {
        auto p = AllocationPolicy::block(z, kInf, budget.M);
        p.budget_slack = tail < target;
        return p;
    }
    const auto f = [&](double T) { return d.integrated_survival(z, T) - target; };
    const double hi = expand_bracket(f, z, std::max(d.truncation_point(), z + d.mean()), "delayed_block");
    return AllocationPolicy::block(z, internal::bisect(f, z, hi, "delayed_block"), budget.M);
}

double time_average_loss(const AllocationPolicy& policy, const LossCurve& g, const DurationModel& d,
                         const LossEvalOptions& opts) {
    const double horizon = d.truncation_point();
    const auto mix = opts.closed_forms ? exponential_mixture(d) : std::vector<std::pair<double, double>>{};
    const auto* expdecay = std::get_if<ExpDecay>(&g.family());
    double total = 0.0;
    for (std::size_t i = 0; i < policy.segments(); ++i) {
        const double a = policy.breakpoints()[i];
        double b = policy.segment_end(i);
        const double e = policy.levels()[i];
        const double x0 = policy.progress_at_segment(i);
        if (e == 0.0) {
            const double mass = d.integrated_survival(a, b);
            if (mass == 0.0) continue;
            const double gx = g.value(x0);
            if (std::isinf(gx)) return kInf;
            total += gx * mass;
            continue;
        }
        // The clamped linear curve is identically zero beyond its kink.
        if (std::isfinite(g.clamp_point())) {
            const double kink = a + (g.clamp_point() - x0) / e;
            if (kink <= a) continue;
            b = std::min(b, kink);
        }
        if (expdecay != nullptr && !mix.empty()) {
            total += expdecay_segment(*expdecay, mix, a, b, x0, e);
            continue;
        }
        const double hi = std::min(b, horizon);
        if (hi > a) {
            const auto f = [&](double t) { return g.value(x0 + e * (t - a)) * d.survival(t); };
            total += integrate_split(f, d, a, hi, opts.abs_tol, g.singular_at_origin() && x0 == 0.0);
        }
        // Beyond the truncation quantile ḡ(x(t)) ≤ ḡ(x(horizon)) on negligible mass.
        if (b > horizon) total += g.value(x0 + e * (std::max(horizon, a) - a)) * d.integrated_survival(std::max(horizon, a), b);
    }
    return total / d.mean();
}

double cost_rate(const AllocationPolicy& policy, const DurationModel& d, double sigma_e) {
    require(sigma_e > 0.0, "price sigma_e must be > 0");
    double spent = 0.0;
    for (std::size_t i = 0; i < policy.segments(); ++i) {
        const double e = policy.levels()[i];
        if (e > 0.0) spent += e * d.integrated_survival(policy.breakpoints()[i], policy.segment_end(i));
    }
    return sigma_e * spent / d.mean();
}

std::string_view to_string(SignPattern p) {
    switch (p) {
        case SignPattern::NEG_THEN_POS: return "NEG_THEN_POS";
        case SignPattern::POS_THEN_NEG: return "POS_THEN_NEG";
        case SignPattern::ALL_NEG: return "ALL_NEG";
        case SignPattern::ALL_POS: return "ALL_POS";
        case SignPattern::INCONSISTENT: return "INCONSISTENT";
    }
    return "INCONSISTENT";
}

std::vector<double> default_pmp_grid(const DurationModel& d) {
    constexpr int n = 512;
    const double hi = d.survival_quantile(1e-3);
    const double lo = hi * 1e-4;
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i) grid[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    return grid;
}

namespace {

// Weak classification: values within ±tol count as zero. Zeros are skipped
// when counting sign changes; a strictly signed run followed only by zeros
// counts as a (weak) switch, as happens for a constant-MRL tail.
SignPattern classify_signs(const std::vector<double>& phi, const std::vector<double>& tol) {
    std::vector<int> signs;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        if (phi[i] < -tol[i]) signs.push_back(-1);
        else if (phi[i] > tol[i]) signs.push_back(1);
    }
    if (signs.empty()) return SignPattern::INCONSISTENT;
    int changes = 0;
    for (std::size_t i = 1; i < signs.size(); ++i) changes += signs[i] != signs[i - 1];
    if (changes > 1) return SignPattern::INCONSISTENT;
    const bool starts_neg = signs.front() < 0;
    if (changes == 1) return starts_neg ? SignPattern::NEG_THEN_POS : SignPattern::POS_THEN_NEG;
    const bool trailing_zero = std::abs(phi.back()) <= tol.back();
    if (starts_neg) return trailing_zero ? SignPattern::NEG_THEN_POS : SignPattern::ALL_NEG;
    return trailing_zero ? SignPattern::POS_THEN_NEG : SignPattern::ALL_POS;
}

}  // namespace

PmpReport pmp_verify(const AllocationPolicy& policy, const LossCurve& g, const DurationModel& d,
                     const BudgetSpec& budget, std::span<const double> grid_in) {
    budget.validate();
    if (!budget.binding()) fail(ErrorCode::Domain, "pmp_verify requires a binding budget");
    if (!d.absolutely_continuous()) fail(ErrorCode::NotAbsolutelyContinuous, "pmp_verify needs a density");
    if (policy.segments() != 2) fail(ErrorCode::Unsupported, "pmp_verify supports single-switch policies only");
    const auto& lv = policy.levels();
    PmpReport rep;
    double M = 0.0;
    if (lv[0] > 0.0 && lv[1] == 0.0) {
        rep.kind = SwitchKind::FrontLoading;
        M = lv[0];
    } else if (lv[0] == 0.0 && lv[1] > 0.0) {
        rep.kind = SwitchKind::BackLoading;
        M = lv[1];
    } else {
        fail(ErrorCode::Unsupported, "pmp_verify supports single-switch bang-bang policies only");
    }
    const double ts = policy.breakpoints()[1];
    rep.t_star = ts;

    std::vector<double> grid(grid_in.begin(), grid_in.end());
    if (grid.empty()) grid = default_pmp_grid(d);
    for (double t : grid) require(t > 0.0 && std::isfinite(t), "pmp grid points must be finite and > 0");
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    const double horizon = std::max(d.truncation_point(), ts);
    const auto integrand = [&](double s) { return slope(g, policy.progress(s)) * d.survival(s); };
    const double quad_tol = 1e-14;

    // p(t) = ∫_t^∞ ḡ'(x(s)) F̄(s) ds on the "active" side of the switch.
    // Front-loading: x is frozen at M·t* beyond the switch, so p is closed-form
    // there and needs quadrature only on (0, t*). Back-loading: x = 0 before
    // the switch (closed form) and quadrature on (t*, ∞).
    std::vector<double> nodes = grid;
    nodes.push_back(ts);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

    std::vector<double> p(nodes.size());
    double p_switch = 0.0;
    if (rep.kind == SwitchKind::FrontLoading) {
        const double slope_after = slope(g, M * ts);
        p_switch = slope_after * d.tail_integral(ts);
        double acc = p_switch;
        double prev = ts;
        for (std::size_t k = nodes.size(); k-- > 0;) {
            const double t = nodes[k];
            if (t >= ts) {
                p[k] = slope_after * d.tail_integral(t);
                continue;
            }
            acc += quadrature::gauss_kronrod(integrand, t, prev, quad_tol).value;
            prev = t;
            p[k] = acc;
        }
        rep.nu = -slope_after * d.mrl(ts);
    } else {
        if (g.singular_at_origin()) {
            fail(ErrorCode::SingularAtOrigin, "switching function diverges: loss slope is not integrable at x = 0");
        }
        // tail beyond the horizon with the slope frozen at its horizon value
        double acc = slope(g, policy.progress(horizon)) * d.tail_integral(horizon);
        double prev = horizon;
        std::vector<double> active;
        for (double t : nodes) {
            if (t >= ts && t < horizon) active.push_back(t);
        }
        std::vector<double> p_active(active.size());
        for (std::size_t k = active.size(); k-- > 0;) {
            acc += integrate_split(integrand, d, active[k], prev, quad_tol, false);
            prev = active[k];
            p_active[k] = acc;
        }
        p_switch = active.empty() ? acc : p_active.front();
        const double slope_before = slope(g, 0.0);
        std::size_t j = 0;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            const double t = nodes[k];
            if (t < ts) {
                p[k] = p_switch + slope_before * d.integrated_survival(t, ts);
            } else if (t < horizon) {
                p[k] = p_active[j++];
            } else {
                p[k] = slope(g, policy.progress(t)) * d.tail_integral(t);
            }
        }
        rep.nu = -p_switch / d.survival(ts);
    }

    // φ = p + νF̄ is a difference of two terms of opposite sign; values within
    // 1e-9 of the larger term's magnitude are treated as zero.
    rep.grid = grid;
    rep.phi.reserve(grid.size());
    std::vector<double> tol;
    tol.reserve(grid.size());
    for (double t : grid) {
        const auto k = static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), t) - nodes.begin());
        const double barrier = rep.nu * d.survival(t);
        rep.phi.push_back(p[k] + barrier);
        tol.push_back(1e-9 * std::max(std::abs(p[k]), barrier) + std::numeric_limits<double>::min());
    }
    rep.phi_at_switch = p_switch + rep.nu * d.survival(ts);
    const double switch_scale = std::max(std::abs(p_switch), rep.nu * d.survival(ts));
    rep.scale = switch_scale > 0.0 ? switch_scale : 1.0;
    rep.tolerance = 1e-9 * rep.scale;

    rep.observed = classify_signs(rep.phi, tol);
    bool consistent = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const bool full = policy.level(grid[i]) > 0.0;
        if (full && rep.phi[i] > tol[i]) consistent = false;
        if (!full && rep.phi[i] < -tol[i]) consistent = false;
    }
    rep.sign_pattern = consistent ? rep.observed : SignPattern::INCONSISTENT;
    const SignPattern expected =
        rep.kind == SwitchKind::FrontLoading ? SignPattern::NEG_THEN_POS : SignPattern::POS_THEN_NEG;
    rep.certified = rep.sign_pattern == expected && std::abs(rep.phi_at_switch) < 1e-8 * rep.scale;
    return rep;
}

}  // namespace driftalloc
