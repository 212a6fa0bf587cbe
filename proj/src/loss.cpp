#include "driftalloc/loss.hpp"

#include "driftalloc/error.hpp"
#include "driftalloc/textspec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

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

void check_progress(double x, const char* what) {
    if (!(x >= 0.0)) fail(ErrorCode::Domain, std::string(what) + ": training progress must be >= 0");
}

}  // namespace

LossCurve::LossCurve(Family family) : family_(std::move(family)) {
    std::visit(overloaded{
                   [](const ExpDecay& g) {
                       require(positive_finite(g.alpha) && positive_finite(g.beta), "expdecay needs alpha, beta > 0");
                   },
                   [](const ShiftedPower& g) { require(positive_finite(g.a), "shiftedpower needs a > 0"); },
                   [](const PurePower& g) { require(g.a > 0.0 && g.a < 1.0, "purepower needs a in (0, 1)"); },
                   [](const Linear& g) {
                       require(positive_finite(g.beta) && positive_finite(g.g0), "linear needs beta, g0 > 0");
                   },
               },
               family_);
}

std::string LossCurve::to_string() const {
    using textspec::format_double;
    return std::visit(
        overloaded{
            [](const ExpDecay& g) {
                return "expdecay(alpha=" + format_double(g.alpha) + ",beta=" + format_double(g.beta) + ")";
            },
            [](const ShiftedPower& g) { return "shiftedpower(a=" + format_double(g.a) + ")"; },
            [](const PurePower& g) {
                return "purepower(a=" + format_double(g.a) + (g.integrable_singularity ? "" : ",mode=strict") + ")";
            },
            [](const Linear& g) {
                return "linear(beta=" + format_double(g.beta) + ",g0=" + format_double(g.g0) + ")";
            },
        },
        family_);
}

double LossCurve::clamp_point() const noexcept {
    if (const auto* g = std::get_if<Linear>(&family_)) return g->g0 / g->beta;
    return kInf;
}

double LossCurve::value(double x) const {
    check_progress(x, "loss value");
    return std::visit(overloaded{
                          [x](const ExpDecay& g) { return g.alpha * std::exp(-g.beta * x); },
                          [x](const ShiftedPower& g) { return std::pow(1.0 + x, -g.a); },
                          [x](const PurePower& g) {
                              if (x == 0.0) {
                                  if (!g.integrable_singularity) {
                                      fail(ErrorCode::SingularAtOrigin, "purepower loss is singular at the origin");
                                  }
                                  return kInf;
                              }
                              return std::pow(x, -g.a);
                          },
                          [x](const Linear& g) { return std::max(g.g0 - g.beta * x, 0.0); },
                      },
                      family_);
}

double LossCurve::derivative(double x) const {
    check_progress(x, "loss derivative");
    return std::visit(overloaded{
                          [x](const ExpDecay& g) { return -g.alpha * g.beta * std::exp(-g.beta * x); },
                          [x](const ShiftedPower& g) { return -g.a * std::pow(1.0 + x, -g.a - 1.0); },
                          [x](const PurePower& g) {
                              if (x == 0.0) fail(ErrorCode::SingularAtOrigin, "purepower derivative is singular at 0");
                              return -g.a * std::pow(x, -g.a - 1.0);
                          },
                          [x](const Linear& g) {
                              const double kink = g.g0 / g.beta;
                              if (x == kink) fail(ErrorCode::Kink, "linear loss has a kink at its clamp point");
                              return x < kink ? -g.beta : 0.0;
                          },
                      },
                      family_);
}

double LossCurve::integral(double x0, double x1) const {
    check_progress(x0, "loss integral");
    if (std::isnan(x1) || x1 < x0) fail(ErrorCode::Domain, "loss integral: requires x0 <= x1");
    if (x1 == x0) return 0.0;
    return std::visit(
        overloaded{
            [&](const ExpDecay& g) {
                if (std::isinf(x1)) return g.alpha * std::exp(-g.beta * x0) / g.beta;
                return g.alpha * std::exp(-g.beta * x0) * -std::expm1(-g.beta * (x1 - x0)) / g.beta;
            },
            [&](const ShiftedPower& g) {
                if (g.a == 1.0) {
                    if (std::isinf(x1)) return kInf;
                    return std::log1p((x1 - x0) / (1.0 + x0));
                }
                if (std::isinf(x1)) return g.a > 1.0 ? std::pow(1.0 + x0, 1.0 - g.a) / (g.a - 1.0) : kInf;
                return (std::pow(1.0 + x1, 1.0 - g.a) - std::pow(1.0 + x0, 1.0 - g.a)) / (1.0 - g.a);
            },
            [&](const PurePower& g) {
                if (std::isinf(x1)) return kInf;
                return (std::pow(x1, 1.0 - g.a) - std::pow(x0, 1.0 - g.a)) / (1.0 - g.a);
            },
            [&](const Linear& g) {
                const double kink = g.g0 / g.beta;
                const auto antideriv = [&](double x) {
                    x = std::min(x, kink);
                    return g.g0 * x - 0.5 * g.beta * x * x;
                };
                return antideriv(x1) - antideriv(x0);
            },
        },
        family_);
}

double LossCurve::inverse(double v) const {
    return std::visit(
        overloaded{
            [v](const ExpDecay& g) {
                require(v > 0.0 && v <= g.alpha, "expdecay inverse: value outside (0, alpha]");
                return std::log(g.alpha / v) / g.beta;
            },
            [v](const ShiftedPower& g) {
                require(v > 0.0 && v <= 1.0, "shiftedpower inverse: value outside (0, 1]");
                return std::pow(v, -1.0 / g.a) - 1.0;
            },
            [v](const PurePower& g) {
                require(v > 0.0, "purepower inverse: value must be > 0");
                return std::pow(v, -1.0 / g.a);
            },
            [v](const Linear& g) {
                require(v >= 0.0 && v <= g.g0, "linear inverse: value outside [0, g0]");
                return (g.g0 - v) / g.beta;
            },
        },
        family_);
}

LossCurve parse_loss(std::string_view text) {
    const auto call = textspec::parse_call(text);
    if (call.name == "expdecay" || call.name == "exp") {
        call.expect_only({"alpha", "beta"});
        return LossCurve::exp_decay(call.number_or("alpha", 1.0), call.number("beta"));
    }
    if (call.name == "shiftedpower") {
        call.expect_only({"a"});
        return LossCurve::shifted_power(call.number("a"));
    }
    if (call.name == "purepower") {
        call.expect_only({"a", "mode"});
        bool integrable = true;
        if (call.has("mode")) {
            const auto& mode = call.args.at("mode");
            if (mode != "integrable" && mode != "strict") {
                fail(ErrorCode::Parse, "purepower.mode must be 'integrable' or 'strict'");
            }
            integrable = mode == "integrable";
        }
        return LossCurve::pure_power(call.number("a"), integrable);
    }
    if (call.name == "linear") {
        call.expect_only({"beta", "g0"});
        return LossCurve::linear(call.number("beta"), call.number_or("g0", 1.0));
    }
    fail(ErrorCode::Parse, "unknown loss family '" + call.name + "'");
}

}  // namespace driftalloc
