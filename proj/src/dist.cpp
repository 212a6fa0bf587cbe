#include "driftalloc/dist.hpp"

#include "driftalloc/error.hpp"
#include "driftalloc/textspec.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace driftalloc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

bool positive_finite(double v) { return v > 0.0 && std::isfinite(v); }

// Γ(a, x) · e^x · x^(-a) by the Legendre continued fraction (modified Lentz).
// Converges quickly for x > a + 1.
double upper_gamma_cf(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h;
}

// Γ(a, x) · e^x, finite even when Γ(a, x) underflows.
double upper_gamma_times_exp(double a, double x) {
    if (x > a + 1.0) return std::pow(x, a) * upper_gamma_cf(a, x);
    return boost::math::tgamma(a) * boost::math::gamma_q(a, x) * std::exp(x);
}

// P(z) = Σ_{i<n} z^i/i! and Q(z) = Σ_{i<n} (n−i) z^i/i!, stored as
// e^{log_scale}·p and e^{log_scale}·q so that large z cannot overflow.
struct ErlangSums {
    double log_scale = 0.0;
    double p = 0.0;
    double q = 0.0;
    bool scaled = false;
};

ErlangSums erlang_sums(int n, double z) {
    ErlangSums r;
    if (z <= std::max(1.0, static_cast<double>(n))) {
        double term = 1.0;
        r.p = 1.0;
        r.q = n;
        for (int i = 1; i < n; ++i) {
            term *= z / i;
            r.p += term;
            r.q += (n - i) * term;
        }
        return r;
    }
    // Factor out the top term z^{n−1}/(n−1)! and sum downwards.
    r.scaled = true;
    r.log_scale = (n - 1) * std::log(z) - std::lgamma(static_cast<double>(n));
    double term = 1.0;
    r.p = 1.0;
    r.q = 1.0;
    for (int i = n - 2; i >= 0; --i) {
        term *= (i + 1) / z;
        r.p += term;
        r.q += (n - i) * term;
    }
    return r;
}

void check_time(double t, const char* what) {
    if (!(t >= 0.0)) fail(ErrorCode::Domain, std::string(what) + ": time must be >= 0");
}

[[noreturn]] void point_mass(const char* what) {
    fail(ErrorCode::NotAbsolutelyContinuous, std::string(what) + " is undefined for a deterministic duration");
}

}  // namespace

DurationModel::DurationModel(Family family) : family_(std::move(family)) {
    mean_ = std::visit(
        overloaded{
            [](const Exponential& e) {
                require(positive_finite(e.rate), "exponential rate must be > 0");
                return 1.0 / e.rate;
            },
            [](const Weibull& w) {
                require(positive_finite(w.shape), "weibull shape must be > 0");
                require(positive_finite(w.scale), "weibull scale must be > 0");
                return w.scale * boost::math::tgamma(1.0 + 1.0 / w.shape);
            },
            [](const Erlang& e) {
                require(e.stages >= 1, "erlang stages must be >= 1");
                require(positive_finite(e.rate), "erlang rate must be > 0");
                return e.stages / e.rate;
            },
            [](const HyperExponential& h) {
                require(!h.weights.empty() && h.weights.size() == h.rates.size(),
                        "hyperexp needs equally many weights and rates");
                double wsum = 0.0, m = 0.0;
                for (std::size_t i = 0; i < h.weights.size(); ++i) {
                    require(positive_finite(h.weights[i]), "hyperexp weights must be > 0");
                    require(positive_finite(h.rates[i]), "hyperexp rates must be > 0");
                    wsum += h.weights[i];
                    m += h.weights[i] / h.rates[i];
                }
                require(std::abs(wsum - 1.0) < 1e-9, "hyperexp weights must sum to 1");
                return m;
            },
            [](const Deterministic& d) {
                require(positive_finite(d.value), "deterministic value must be > 0");
                return d.value;
            },
        },
        family_);
    require(positive_finite(mean_), "duration mean must be finite and > 0");
}

DurationModel DurationModel::weibull_with_mean(double shape, double mean) {
    require(positive_finite(shape) && positive_finite(mean), "weibull shape and mean must be > 0");
    return weibull(shape, mean / boost::math::tgamma(1.0 + 1.0 / shape));
}

std::string DurationModel::to_string() const {
    using textspec::format_double;
    return std::visit(
        overloaded{
            [](const Exponential& e) { return "exp(rate=" + format_double(e.rate) + ")"; },
            [](const Weibull& w) {
                return "weibull(k=" + format_double(w.shape) + ",scale=" + format_double(w.scale) + ")";
            },
            [](const Erlang& e) {
                return "erlang(n=" + std::to_string(e.stages) + ",rate=" + format_double(e.rate) + ")";
            },
            [](const HyperExponential& h) {
                std::string w, r;
                for (std::size_t i = 0; i < h.weights.size(); ++i) {
                    w += (i ? ":" : "") + format_double(h.weights[i]);
                    r += (i ? ":" : "") + format_double(h.rates[i]);
                }
                return "hyperexp(w=" + w + ",rates=" + r + ")";
            },
            [](const Deterministic& d) { return "det(y=" + format_double(d.value) + ")"; },
        },
        family_);
}

double DurationModel::survival(double t) const {
    check_time(t, "survival");
    return std::visit(
        overloaded{
            [t](const Exponential& e) { return std::exp(-e.rate * t); },
            [t](const Weibull& w) { return std::exp(-std::pow(t / w.scale, w.shape)); },
            [t](const Erlang& e) {
                const double z = e.rate * t;
                if (std::isinf(z)) return 0.0;
                const auto es = erlang_sums(e.stages, z);
                return std::exp(es.log_scale - z) * es.p;
            },
            [t](const HyperExponential& h) {
                double s = 0.0;
                for (std::size_t i = 0; i < h.weights.size(); ++i) s += h.weights[i] * std::exp(-h.rates[i] * t);
                return s;
            },
            [t](const Deterministic& d) { return t < d.value ? 1.0 : 0.0; },
        },
        family_);
}

double DurationModel::log_survival(double t) const {
    check_time(t, "log_survival");
    return std::visit(
        overloaded{
            [t](const Exponential& e) { return -e.rate * t; },
            [t](const Weibull& w) { return -std::pow(t / w.scale, w.shape); },
            [t](const Erlang& e) {
                const double z = e.rate * t;
                if (std::isinf(z)) return -kInf;
                const auto es = erlang_sums(e.stages, z);
                return es.log_scale - z + std::log(es.p);
            },
            [t](const HyperExponential& h) {
                const double lmin = *std::min_element(h.rates.begin(), h.rates.end());
                double s = 0.0;
                for (std::size_t i = 0; i < h.weights.size(); ++i) {
                    s += h.weights[i] * std::exp(-(h.rates[i] - lmin) * t);
                }
                return -lmin * t + std::log(s);
            },
            [t](const Deterministic& d) { return t < d.value ? 0.0 : -kInf; },
        },
        family_);
}

double DurationModel::density(double t) const {
    check_time(t, "density");
    return std::visit(
        overloaded{
            [t](const Exponential& e) { return e.rate * std::exp(-e.rate * t); },
            [t](const Weibull& w) {
                if (t == 0.0) return w.shape < 1.0 ? kInf : (w.shape == 1.0 ? 1.0 / w.scale : 0.0);
                const double z = t / w.scale;
                return (w.shape / w.scale) * std::pow(z, w.shape - 1.0) * std::exp(-std::pow(z, w.shape));
            },
            [t](const Erlang& e) {
                const double z = e.rate * t;
                const double lg = (e.stages - 1) * std::log(z) - z - std::lgamma(static_cast<double>(e.stages));
                return e.stages == 1 ? e.rate * std::exp(-z) : e.rate * std::exp(lg);
            },
            [t](const HyperExponential& h) {
                double s = 0.0;
                for (std::size_t i = 0; i < h.weights.size(); ++i) {
                    s += h.weights[i] * h.rates[i] * std::exp(-h.rates[i] * t);
                }
                return s;
            },
            [](const Deterministic&) -> double { point_mass("density"); },
        },
        family_);
}

double DurationModel::hazard(double t) const {
    check_time(t, "hazard");
    return std::visit(
        overloaded{
            [](const Exponential& e) { return e.rate; },
            [t](const Weibull& w) {
                if (t == 0.0) return w.shape < 1.0 ? kInf : (w.shape == 1.0 ? 1.0 / w.scale : 0.0);
                return (w.shape / w.scale) * std::pow(t / w.scale, w.shape - 1.0);
            },
            [t](const Erlang& e) {
                const double z = e.rate * t;
                const auto es = erlang_sums(e.stages, z);
                // top term / P, with the top term equal to e^{log_scale} when scaled
                double top = 1.0;
                if (!es.scaled) {
                    for (int i = 1; i < e.stages; ++i) top *= z / i;
                }
                return e.rate * top / es.p;
            },
            [t](const HyperExponential& h) {
                const double lmin = *std::min_element(h.rates.begin(), h.rates.end());
                double num = 0.0, den = 0.0;
                for (std::size_t i = 0; i < h.weights.size(); ++i) {
                    const double x = h.weights[i] * std::exp(-(h.rates[i] - lmin) * t);
                    num += x * h.rates[i];
                    den += x;
                }
                return num / den;
            },
            [](const Deterministic&) -> double { point_mass("hazard"); },
        },
        family_);
}

double DurationModel::mrl(double t) const {
    check_time(t, "mrl");
    if (t == 0.0) return mean_;
    if (!(log_survival(t) > std::log(kSurvivalFloor))) {
        fail(ErrorCode::SurvivalUnderflow, "mrl: survival underflow at t=" + textspec::format_double(t));
    }
    return std::visit(
        overloaded{
            [](const Exponential& e) { return 1.0 / e.rate; },
            [t](const Weibull& w) {
                const double a = 1.0 / w.shape;
                const double x = std::pow(t / w.scale, w.shape);
                return (w.scale / w.shape) * upper_gamma_times_exp(a, x);
            },
            [t](const Erlang& e) {
                const double z = e.rate * t;
                const auto es = erlang_sums(e.stages, z);
                return es.q / (e.rate * es.p);
            },
            [t](const HyperExponential& h) {
                const double lmin = *std::min_element(h.rates.begin(), h.rates.end());
                double num = 0.0, den = 0.0;
                for (std::size_t i = 0; i < h.weights.size(); ++i) {
                    const double x = h.weights[i] * std::exp(-(h.rates[i] - lmin) * t);
                    num += x / h.rates[i];
                    den += x;
                }
                return num / den;
            },
            [t](const Deterministic& d) { return d.value - t; },
        },
        family_);
}

double DurationModel::tail_integral(double t) const {
    check_time(t, "tail_integral");
    if (t == 0.0) return mean_;
    if (std::isinf(t)) return 0.0;
    return std::visit(
        overloaded{
            [t](const Exponential& e) { return std::exp(-e.rate * t) / e.rate; },
            [t](const Weibull& w) {
                const double a = 1.0 / w.shape;
                const double x = std::pow(t / w.scale, w.shape);
                if (std::isinf(x)) return 0.0;
                if (x > a + 1.0) return (w.scale / w.shape) * std::exp(a * std::log(x) - x) * upper_gamma_cf(a, x);
                return (w.scale / w.shape) * boost::math::tgamma(a) * boost::math::gamma_q(a, x);
            },
            [t](const Erlang& e) {
                const double z = e.rate * t;
                if (std::isinf(z)) return 0.0;
                const auto es = erlang_sums(e.stages, z);
                return std::exp(es.log_scale - z) * es.q / e.rate;
            },
            [t](const HyperExponential& h) {
                double s = 0.0;
                for (std::size_t i = 0; i < h.weights.size(); ++i) {
                    s += h.weights[i] * std::exp(-h.rates[i] * t) / h.rates[i];
                }
                return s;
            },
            [t](const Deterministic& d) { return std::max(0.0, d.value - t); },
        },
        family_);
}

double DurationModel::integrated_survival(double a, double b) const {
    check_time(a, "integrated_survival");
    if (std::isnan(b) || a > b) fail(ErrorCode::Domain, "integrated_survival: requires a <= b");
    if (a == b) return 0.0;
    if (const auto* e = std::get_if<Exponential>(&family_)) {
        if (std::isinf(b)) return std::exp(-e->rate * a) / e->rate;
        return std::exp(-e->rate * a) * -std::expm1(-e->rate * (b - a)) / e->rate;
    }
    if (const auto* d = std::get_if<Deterministic>(&family_)) {
        return std::max(0.0, std::min(b, d->value) - std::min(a, d->value));
    }
    return std::max(0.0, tail_integral(a) - tail_integral(b));
}

double DurationModel::survival_quantile(double q) const {
    if (!(q > 0.0 && q < 1.0)) fail(ErrorCode::Domain, "survival_quantile: q must lie in (0, 1)");
    return std::visit(
        overloaded{
            [q](const Exponential& e) { return -std::log(q) / e.rate; },
            [q](const Weibull& w) { return w.scale * std::pow(-std::log(q), 1.0 / w.shape); },
            [q](const Erlang& e) { return boost::math::gamma_q_inv(static_cast<double>(e.stages), q) / e.rate; },
            [this, q](const HyperExponential& h) {
                // log-survival is strictly decreasing; bracket between the
                // slowest and fastest component quantiles.
                const double lmin = *std::min_element(h.rates.begin(), h.rates.end());
                double lo = 0.0, hi = -std::log(q) / lmin;
                const double target = std::log(q);
                for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
                    const double mid = 0.5 * (lo + hi);
                    (log_survival(mid) > target ? lo : hi) = mid;
                }
                return hi;
            },
            [](const Deterministic& d) { return d.value; },
        },
        family_);
}

double DurationModel::sample_from_uniform(double u) const {
    if (!(u > 0.0 && u < 1.0)) fail(ErrorCode::Domain, "sample_from_uniform: u must lie in (0, 1)");
    return std::visit(
        overloaded{
            [u](const Exponential& e) { return -std::log1p(-u) / e.rate; },
            [u](const Weibull& w) { return w.scale * std::pow(-std::log1p(-u), 1.0 / w.shape); },
            [](const Erlang&) -> double {
                fail(ErrorCode::Unsupported, "erlang sampling needs one uniform per stage");
            },
            [](const HyperExponential&) -> double {
                fail(ErrorCode::Unsupported, "hyperexp sampling needs two uniforms");
            },
            [](const Deterministic& d) { return d.value; },
        },
        family_);
}

double DurationModel::sample(RngStream& rng) const {
    return std::visit(
        overloaded{
            [this, &rng](const Exponential&) { return sample_from_uniform(rng.uniform()); },
            [this, &rng](const Weibull&) { return sample_from_uniform(rng.uniform()); },
            [&rng](const Erlang& e) {
                double s = 0.0;
                for (int i = 0; i < e.stages; ++i) s += -std::log1p(-rng.uniform());
                return s / e.rate;
            },
            [&rng](const HyperExponential& h) {
                const double pick = rng.uniform();
                const double u = rng.uniform();
                double acc = 0.0;
                std::size_t i = 0;
                for (; i + 1 < h.weights.size(); ++i) {
                    acc += h.weights[i];
                    if (pick < acc) break;
                }
                return -std::log1p(-u) / h.rates[i];
            },
            [](const Deterministic& d) { return d.value; },
        },
        family_);
}

DurationModel parse_duration(std::string_view text) {
    const auto call = textspec::parse_call(text);
    if (call.name == "exp" || call.name == "exponential") {
        call.expect_only({"rate", "mean"});
        return DurationModel::exponential(call.has("mean") ? 1.0 / call.number("mean") : call.number("rate"));
    }
    if (call.name == "weibull") {
        call.expect_only({"k", "scale", "mean"});
        if (call.has("mean")) return DurationModel::weibull_with_mean(call.number("k"), call.number("mean"));
        return DurationModel::weibull(call.number("k"), call.number("scale"));
    }
    if (call.name == "erlang") {
        call.expect_only({"n", "rate"});
        const auto n = call.integer("n");
        if (n < 1 || n > 10000) fail(ErrorCode::Parse, "erlang.n must lie in [1, 10000]");
        return DurationModel::erlang(static_cast<int>(n), call.number("rate"));
    }
    if (call.name == "hyperexp") {
        call.expect_only({"w", "rates"});
        return DurationModel::hyperexponential(call.numbers("w"), call.numbers("rates"));
    }
    if (call.name == "det" || call.name == "deterministic") {
        call.expect_only({"y"});
        return DurationModel::deterministic(call.number("y"));
    }
    fail(ErrorCode::Parse, "unknown duration family '" + call.name + "'");
}

std::string_view to_string(AgingTag tag) {
    switch (tag) {
        case AgingTag::DMRL: return "DMRL";
        case AgingTag::IMRL: return "IMRL";
        case AgingTag::CONSTANT: return "CONSTANT";
        case AgingTag::MIXED: return "MIXED";
    }
    return "MIXED";
}

std::vector<double> default_aging_grid(const DurationModel& d) {
    constexpr int n = 64;
    const double lo = d.mean() / 100.0;
    const double hi = std::max(d.survival_quantile(1e-3), 2.0 * lo);
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i) grid[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    return grid;
}

AgingClass classify_aging(const DurationModel& d, std::span<const double> grid, double rel_tol) {
    require(!grid.empty(), "classify_aging: grid must be non-empty");
    AgingClass out;
    out.evidence.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i > 0) require(grid[i] > grid[i - 1], "classify_aging: grid must be strictly increasing");
        out.evidence.emplace_back(grid[i], d.mrl(grid[i]));
    }
    const double first = out.evidence.front().second;
    bool constant = true, non_increasing = true, non_decreasing = true;
    for (std::size_t i = 0; i < out.evidence.size(); ++i) {
        const double m = out.evidence[i].second;
        if (std::abs(m - first) > rel_tol * std::abs(first)) constant = false;
        if (i == 0) continue;
        const double prev = out.evidence[i - 1].second;
        const double slack = rel_tol * std::max(std::abs(m), std::abs(prev));
        if (m > prev + slack) non_increasing = false;
        if (m < prev - slack) non_decreasing = false;
    }
    if (constant) out.tag = AgingTag::CONSTANT;
    else if (non_increasing) out.tag = AgingTag::DMRL;
    else if (non_decreasing) out.tag = AgingTag::IMRL;
    else out.tag = AgingTag::MIXED;
    return out;
}

AgingClass classify_aging(const DurationModel& d) {
    const auto grid = default_aging_grid(d);
    return classify_aging(d, grid);
}

bool survival_is_convex(const DurationModel& d) {
    if (!d.absolutely_continuous()) return false;
    constexpr int n = 2000;
    const double hi = d.survival_quantile(1e-3);
    double prev = d.density(0.0);
    for (int i = 1; i <= n; ++i) {
        const double f = d.density(hi * i / n);
        if (f > prev * (1.0 + 1e-12) + 1e-300) return false;
        prev = f;
    }
    return true;
}

}  // namespace driftalloc
