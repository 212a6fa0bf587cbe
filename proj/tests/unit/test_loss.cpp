#include <doctest.h>

#include "driftalloc/error.hpp"
#include "driftalloc/loss.hpp"
#include "driftalloc/rng.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <vector>

using namespace driftalloc;
using doctest::Approx;

namespace {

std::vector<LossCurve> smooth_curves() {
    return {
        LossCurve::exp_decay(1.0, 1.0),
        LossCurve::exp_decay(2.0, 0.3),
        LossCurve::shifted_power(0.5),
        LossCurve::shifted_power(1.0),
        LossCurve::shifted_power(2.5),
        LossCurve::pure_power(0.5),
        LossCurve::pure_power(0.2),
    };
}

}  // namespace

TEST_CASE("closed-form values") {
    CHECK(LossCurve::exp_decay(1.0, 1.0).value(std::log(2.0)) == Approx(0.5).epsilon(1e-15));
    CHECK(LossCurve::shifted_power(1.0).value(3.0) == Approx(0.25).epsilon(1e-15));
    CHECK(LossCurve::pure_power(0.5).value(4.0) == Approx(0.5).epsilon(1e-15));
    CHECK(LossCurve::linear(0.5, 1.0).value(1.0) == 0.5);
    CHECK(LossCurve::linear(0.5, 1.0).value(5.0) == 0.0);
    CHECK(LossCurve::exp_decay(1.0, 2.0).derivative(0.0) == -2.0);
}

TEST_CASE("derivative agrees with central differences") {
    for (const auto& g : smooth_curves()) {
        for (double x : {0.3, 1.0, 4.0}) {
            const double h = 1e-5 * x;
            const double fd = (g.value(x + h) - g.value(x - h)) / (2.0 * h);
            CHECK_MESSAGE(g.derivative(x) == Approx(fd).epsilon(1e-6), g.to_string());
        }
    }
    const auto lin = LossCurve::linear(0.5, 1.0);
    CHECK(lin.derivative(1.0) == -0.5);
    CHECK(lin.derivative(3.0) == 0.0);
}

TEST_CASE("non-negative, non-increasing and convex on random triples") {
    RngStream rng(7, 0);
    auto curves = smooth_curves();
    curves.push_back(LossCurve::linear(0.5, 1.0));
    for (const auto& g : curves) {
        for (int i = 0; i < 1000; ++i) {
            const double a = 1e-3 + 10.0 * rng.uniform();
            const double b = 1e-3 + 10.0 * rng.uniform();
            const double lam = rng.uniform();
            const double mid = lam * a + (1.0 - lam) * b;
            const double va = g.value(a), vb = g.value(b);
            REQUIRE(va >= 0.0);
            REQUIRE(g.value(std::max(a, b)) <= g.value(std::min(a, b)));
            const double chord = lam * va + (1.0 - lam) * vb;
            REQUIRE(g.value(mid) <= chord + 1e-12 * std::max(1.0, chord));
        }
    }
}

TEST_CASE("exponential self-similarity") {
    const auto g = LossCurve::exp_decay(1.7, 0.8);
    for (double x : {0.0, 0.5, 2.0}) {
        for (double d : {0.1, 1.0, 3.0}) {
            CHECK(g.value(x + d) == Approx(g.value(x) * std::exp(-0.8 * d)).epsilon(1e-14));
        }
    }
}

TEST_CASE("integral matches quadrature oracle") {
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto curves = smooth_curves();
    curves.push_back(LossCurve::linear(0.5, 1.0));
    for (const auto& g : curves) {
        for (auto [a, b] : {std::pair{0.2, 0.9}, std::pair{1.0, 5.0}, std::pair{0.5, 3.0}}) {
            const double oracle = GK::integrate([&](double x) { return g.value(x); }, a, b, 30, 1e-14);
            CHECK_MESSAGE(g.integral(a, b) == Approx(oracle).epsilon(1e-11), g.to_string());
        }
    }
    // ∫_0^1 x^{-1/2} dx = 2
    CHECK(LossCurve::pure_power(0.5).integral(0.0, 1.0) == Approx(2.0).epsilon(1e-15));
    CHECK(LossCurve::exp_decay(1.0, 2.0).integral(0.0, INFINITY) == 0.5);
    CHECK(std::isinf(LossCurve::shifted_power(1.0).integral(0.0, INFINITY)));
    CHECK(LossCurve::shifted_power(2.0).integral(0.0, INFINITY) == Approx(1.0));
    CHECK(LossCurve::linear(0.5, 1.0).integral(0.0, 10.0) == Approx(1.0));
    CHECK_THROWS_AS(LossCurve::exp_decay(1.0, 1.0).integral(2.0, 1.0), Error);
}

TEST_CASE("inverse is the closed-form left inverse") {
    for (const auto& g : smooth_curves()) {
        for (double x : {0.1, 1.0, 7.0}) {
            CHECK(g.inverse(g.value(x)) == Approx(x).epsilon(1e-12));
        }
    }
    CHECK(LossCurve::linear(0.5, 1.0).inverse(0.25) == Approx(1.5));
    CHECK_THROWS_AS(LossCurve::exp_decay(1.0, 1.0).inverse(2.0), Error);
}

TEST_CASE("singularities and kinks") {
    const auto soft = LossCurve::pure_power(0.5, true);
    CHECK(std::isinf(soft.value(0.0)));
    CHECK(soft.singular_at_origin());
    const auto strict = LossCurve::pure_power(0.5, false);
    try {
        strict.value(0.0);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SingularAtOrigin);
    }
    CHECK_THROWS_AS(soft.derivative(0.0), Error);

    const auto lin = LossCurve::linear(0.5, 1.0);
    CHECK_FALSE(lin.strictly_decreasing());
    CHECK(lin.clamp_point() == 2.0);
    try {
        lin.derivative(2.0);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Kink);
    }
    CHECK_THROWS_AS(lin.value(-1.0), Error);
}

TEST_CASE("parameter validation and parsing") {
    CHECK_THROWS_AS(LossCurve::exp_decay(0.0, 1.0), Error);
    CHECK_THROWS_AS(LossCurve::pure_power(1.0), Error);
    CHECK_THROWS_AS(LossCurve::shifted_power(-1.0), Error);

    for (const char* text : {"expdecay(alpha=1,beta=2)", "shiftedpower(a=0.5)", "purepower(a=0.5)",
                             "purepower(a=0.3,mode=strict)", "linear(beta=0.5,g0=1)"}) {
        const auto g = parse_loss(text);
        CHECK(parse_loss(g.to_string()).to_string() == g.to_string());
    }
    CHECK(parse_loss("expdecay(beta=3)").value(0.0) == 1.0);
    CHECK_THROWS_AS(parse_loss("purepower(a=0.5,mode=soft)"), Error);
    CHECK_THROWS_AS(parse_loss("cosine(a=1)"), Error);
}
