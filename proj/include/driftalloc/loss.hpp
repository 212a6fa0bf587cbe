#pragma once

#include <string>
#include <string_view>
#include <variant>

namespace driftalloc {

// ḡ(x) = α e^{−βx}
struct ExpDecay {
    double alpha;
    double beta;
};

// ḡ(x) = (1 + x)^{−a}
struct ShiftedPower {
    double a;
};

// ḡ(x) = x^{−a}, a in (0, 1). Singular at the origin; when
// `integrable_singularity` is set the value at 0 is +∞ rather than an error,
// so that integrals starting at x = 0 can still be formed.
struct PurePower {
    double a;
    bool integrable_singularity = true;
};

// ḡ(x) = max(g0 − βx, 0), clamped at x_max = g0/β.
struct Linear {
    double beta;
    double g0;
};

// Expected loss as a function of accumulated training progress: non-negative,
// convex and non-increasing on its evaluation domain.
class LossCurve {
public:
    using Family = std::variant<ExpDecay, ShiftedPower, PurePower, Linear>;

    explicit LossCurve(Family family);

    static LossCurve exp_decay(double alpha, double beta) { return LossCurve(ExpDecay{alpha, beta}); }
    static LossCurve shifted_power(double a) { return LossCurve(ShiftedPower{a}); }
    static LossCurve pure_power(double a, bool integrable = true) { return LossCurve(PurePower{a, integrable}); }
    static LossCurve linear(double beta, double g0) { return LossCurve(Linear{beta, g0}); }

    const Family& family() const noexcept { return family_; }
    std::string to_string() const;

    double value(double x) const;
    double derivative(double x) const;
    // ∫_{x0}^{x1} ḡ(x) dx, closed form per family (finite for PurePower from 0).
    double integral(double x0, double x1) const;
    // Smallest x with ḡ(x) <= v, for v in (0, ḡ(0)].
    double inverse(double v) const;

    bool singular_at_origin() const noexcept { return std::holds_alternative<PurePower>(family_); }
    // Strictly decreasing and differentiable on all of [0, ∞).
    bool strictly_decreasing() const noexcept { return !std::holds_alternative<Linear>(family_); }
    // End of the region where ḡ' is constant/strictly negative for Linear; +∞ otherwise.
    double clamp_point() const noexcept;

private:
    Family family_;
};

LossCurve parse_loss(std::string_view text);

}  // namespace driftalloc
