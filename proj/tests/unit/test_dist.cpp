#include <doctest.h>

#include "driftalloc/dist.hpp"
#include "driftalloc/error.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

using namespace driftalloc;
using doctest::Approx;

namespace {

std::vector<DurationModel> families() {
    return {
        DurationModel::exponential(1.0),
        DurationModel::exponential(2.5),
        DurationModel::weibull(2.0, 2.0 / std::sqrt(std::numbers::pi)),
        DurationModel::weibull_with_mean(0.5, 1.0),
        DurationModel::weibull(1.5, 0.7),
        DurationModel::erlang(2, 2.0),
        DurationModel::erlang(5, 3.0),
        DurationModel::hyperexponential({0.5, 0.5}, {0.5, 2.0}),
        DurationModel::hyperexponential({0.2, 0.3, 0.5}, {0.1, 1.0, 4.0}),
    };
}

// Independent oracle: adaptive quadrature of the survival function.
double quad_survival(const DurationModel& d, double a, double b) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    return GK::integrate([&](double t) { return d.survival(t); }, a, b, 25, 1e-14);
}

double quad_tail(const DurationModel& d, double t) {
    boost::math::quadrature::exp_sinh<double> es;
    return es.integrate([&](double u) { return d.survival(t + u); }, 0.0, INFINITY);
}

}  // namespace

TEST_CASE("survival closed forms") {
    const auto e = DurationModel::exponential(1.0);
    CHECK(e.survival(0.0) == 1.0);
    CHECK(e.survival(std::log(2.0)) == Approx(0.5).epsilon(1e-15));
    const auto erl = DurationModel::erlang(2, 2.0);
    CHECK(erl.survival(0.5) == Approx(2.0 * std::exp(-1.0)).epsilon(1e-15));
    CHECK(erl.survival(0.5) == Approx(0.735759).epsilon(1e-6));
    CHECK_THROWS_AS(e.survival(-1.0), Error);
}

TEST_CASE("mean residual life") {
    CHECK(DurationModel::exponential(2.0).mrl(3.7) == Approx(0.5).epsilon(1e-15));
    for (const auto& d : families()) CHECK(d.mrl(0.0) == Approx(d.mean()).epsilon(1e-14));
    // ∫_{0.5}^∞ e^{-2u}(1+2u) du = e^{-1}, divided by F̄(0.5) = 2 e^{-1}
    CHECK(DurationModel::erlang(2, 2.0).mrl(0.5) == Approx(0.75).epsilon(1e-14));

    SUBCASE("matches quadrature ratio") {
        for (const auto& d : families()) {
            for (double t : {0.1, 0.7, 2.0}) {
                const double oracle = quad_tail(d, t) / d.survival(t);
                CHECK(d.mrl(t) == Approx(oracle).epsilon(1e-9));
            }
        }
    }

    SUBCASE("survival underflow is reported") {
        const auto e = DurationModel::exponential(1.0);
        CHECK_NOTHROW(e.mrl(600.0));
        try {
            e.mrl(800.0);
            FAIL("expected underflow");
        } catch (const Error& err) {
            CHECK(err.code() == ErrorCode::SurvivalUnderflow);
        }
    }

    SUBCASE("weibull stays finite deep in the tail") {
        const auto w = DurationModel::weibull(2.0, 1.0);
        // m(t) ~ 1/(2t) for large t
        CHECK(w.mrl(20.0) == Approx(1.0 / 40.0).epsilon(2e-3));
        CHECK(std::isfinite(w.mrl(25.0)));
    }
}

TEST_CASE("integrated survival") {
    const auto e = DurationModel::exponential(1.0);
    CHECK(e.integrated_survival(0.0, INFINITY) == Approx(1.0).epsilon(1e-15));
    CHECK(e.integrated_survival(0.0, std::log(2.0)) == Approx(0.5).epsilon(1e-15));
    CHECK(DurationModel::deterministic(2.0).integrated_survival(1.0, 3.0) == 1.0);
    CHECK_THROWS_AS(e.integrated_survival(2.0, 1.0), Error);

    for (const auto& d : families()) {
        CHECK(d.integrated_survival(0.0, INFINITY) == Approx(d.mean()).epsilon(1e-9));
        CHECK(d.integrated_survival(0.2, 1.3) == Approx(quad_survival(d, 0.2, 1.3)).epsilon(1e-10));
    }
}

TEST_CASE("density integrates to one and hazard is f/S") {
    for (const auto& d : families()) {
        const double hi = d.survival_quantile(1e-14);
        using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
        // Weibull k<1 has an integrable density singularity at 0; split off [0, eps]
        const double eps = 1e-8;
        const double body = GK::integrate([&](double t) { return d.density(t); }, eps, hi, 30, 1e-13);
        const double head = 1.0 - d.survival(eps);
        CHECK(body + head == Approx(1.0).epsilon(1e-8));
        for (double t : {0.05, 0.5, 1.5}) {
            CHECK(d.hazard(t) == Approx(d.density(t) / d.survival(t)).epsilon(1e-12));
            CHECK(d.hazard(t) >= 0.0);
        }
    }
}

TEST_CASE("monotone survival, non-negative density on a grid") {
    for (const auto& d : families()) {
        double prev = 1.0;
        for (int i = 0; i <= 400; ++i) {
            const double t = 0.02 * i;
            const double s = d.survival(t);
            CHECK(s <= prev);
            CHECK(d.density(t) >= 0.0);
            prev = s;
        }
    }
}

TEST_CASE("MRL derivative identity m' = h m - 1") {
    for (const auto& d : families()) {
        for (double t : {0.1, 0.4, 1.0, 2.0}) {
            const double step = 1e-5 * std::max(t, 1.0);
            const double fd = (d.mrl(t + step) - d.mrl(t - step)) / (2.0 * step);
            const double rhs = d.hazard(t) * d.mrl(t) - 1.0;
            CHECK(fd == Approx(rhs).epsilon(1e-5).scale(std::max(1.0, d.mrl(t))));
        }
    }
}

TEST_CASE("point mass and singular hazards") {
    const auto det = DurationModel::deterministic(2.0);
    try {
        det.density(1.0);
        FAIL("expected error");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::NotAbsolutelyContinuous);
    }
    CHECK_THROWS_AS(det.hazard(1.0), Error);
    CHECK(det.mrl(0.5) == 1.5);

    const auto w = DurationModel::weibull_with_mean(0.5, 1.0);
    CHECK(std::isinf(w.hazard(0.0)));
    CHECK(w.mrl(0.0) == Approx(1.0));
}

TEST_CASE("construction rejects invalid parameters") {
    CHECK_THROWS_AS(DurationModel::exponential(0.0), Error);
    CHECK_THROWS_AS(DurationModel::weibull(-1.0, 1.0), Error);
    CHECK_THROWS_AS(DurationModel::erlang(0, 1.0), Error);
    CHECK_THROWS_AS(DurationModel::hyperexponential({0.5, 0.4}, {1.0, 2.0}), Error);
    CHECK_THROWS_AS(DurationModel::hyperexponential({1.0}, {1.0, 2.0}), Error);
    CHECK_THROWS_AS(DurationModel::deterministic(0.0), Error);
}

TEST_CASE("aging classification") {
    const std::vector<double> g1{0.0, 1.0, 2.0, 4.0};
    CHECK(classify_aging(DurationModel::exponential(1.0), g1).tag == AgingTag::CONSTANT);

    const std::vector<double> g2{0.0, 0.5, 1.0, 2.0};
    CHECK(classify_aging(DurationModel::weibull(2.0, 2.0 / std::sqrt(std::numbers::pi)), g2).tag == AgingTag::DMRL);
    CHECK(classify_aging(DurationModel::weibull_with_mean(0.5, 1.0), g2).tag == AgingTag::IMRL);

    CHECK(classify_aging(DurationModel::erlang(2, 2.0)).tag == AgingTag::DMRL);
    CHECK(classify_aging(DurationModel::hyperexponential({0.5, 0.5}, {0.5, 2.0})).tag == AgingTag::IMRL);
    CHECK(classify_aging(DurationModel::exponential(3.0)).tag == AgingTag::CONSTANT);

    const auto cls = classify_aging(DurationModel::exponential(1.0));
    CHECK(cls.evidence.size() == 64);

    const std::vector<double> bad{1.0, 0.5};
    CHECK_THROWS_AS(classify_aging(DurationModel::exponential(1.0), bad), Error);
}

TEST_CASE("sampling") {
    CHECK(DurationModel::deterministic(2.0).sample_from_uniform(0.3) == 2.0);
    CHECK(DurationModel::exponential(1.0).sample_from_uniform(0.5) == Approx(std::log(2.0)).epsilon(1e-15));

    SUBCASE("exponential empirical mean") {
        const auto e = DurationModel::exponential(1.0);
        double sum = 0.0;
        constexpr int n = 1000000;
        for (int i = 0; i < n; ++i) {
            RngStream rng(2024, static_cast<std::uint64_t>(i));
            sum += e.sample(rng);
        }
        CHECK(std::abs(sum / n - 1.0) < 3e-3);
    }

    SUBCASE("Kolmogorov-Smirnov distance below 0.01") {
        for (const auto& d : families()) {
            constexpr int n = 100000;
            std::vector<double> xs(n);
            RngStream rng(99, 0);
            for (auto& x : xs) x = d.sample(rng);
            std::sort(xs.begin(), xs.end());
            double ks = 0.0;
            for (int i = 0; i < n; ++i) {
                const double cdf = 1.0 - d.survival(xs[i]);
                ks = std::max({ks, std::abs(cdf - static_cast<double>(i) / n),
                               std::abs(cdf - static_cast<double>(i + 1) / n)});
            }
            CHECK_MESSAGE(ks < 0.01, d.to_string());
        }
    }

    SUBCASE("deterministic given seed") {
        const auto d = DurationModel::hyperexponential({0.5, 0.5}, {0.5, 2.0});
        RngStream a(5, 11), b(5, 11);
        for (int i = 0; i < 10; ++i) CHECK(d.sample(a) == d.sample(b));
    }
}

TEST_CASE("quantiles invert survival") {
    for (const auto& d : families()) {
        for (double q : {0.9, 0.5, 1e-3, 1e-12}) {
            CHECK(d.survival(d.survival_quantile(q)) == Approx(q).epsilon(1e-9));
        }
    }
}

TEST_CASE("text form round trip") {
    for (const char* text : {"exp(rate=1.0)", "weibull(k=2,scale=1.1284)", "erlang(n=2,rate=2)",
                             "hyperexp(w=0.5:0.5,rates=0.5:2)", "det(y=2)"}) {
        const auto d = parse_duration(text);
        const auto again = parse_duration(d.to_string());
        CHECK(again.to_string() == d.to_string());
        CHECK(again.mean() == d.mean());
    }
    CHECK(parse_duration("weibull(k=2,mean=1)").mean() == Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(parse_duration("gamma(k=2)"), Error);
    CHECK_THROWS_AS(parse_duration("exp(rate=1,shape=2)"), Error);
    CHECK_THROWS_AS(parse_duration("exp(rate=abc)"), Error);
    CHECK_THROWS_AS(parse_duration("exp rate=1"), Error);
}

TEST_CASE("survival convexity detection") {
    CHECK(survival_is_convex(DurationModel::exponential(1.0)));
    CHECK(survival_is_convex(DurationModel::hyperexponential({0.5, 0.5}, {0.5, 2.0})));
    CHECK(survival_is_convex(DurationModel::weibull_with_mean(0.5, 1.0)));
    CHECK_FALSE(survival_is_convex(DurationModel::erlang(2, 2.0)));
    CHECK_FALSE(survival_is_convex(DurationModel::weibull_with_mean(2.0, 1.0)));
}

TEST_CASE("weibull shape 1/2 residual life closed form") {
    // For k = 1/2 and scale s, m(t) = 2 sqrt(s t) + 2 s.
    const auto w = DurationModel::weibull(0.5, 0.5);
    for (double t : {0.0, 0.3, 2.0, 10.0}) CHECK(w.mrl(t) == Approx(2.0 * std::sqrt(0.5 * t) + 1.0).epsilon(1e-12));
}

TEST_CASE("far tail evaluates to clean zeros") {
    for (const auto& d : families()) {
        for (double t : {1e3, 1e10, 1e300, 1.7e308}) {
            const double s = d.survival(t);
            CHECK_MESSAGE((s >= 0.0 && s < 1e-15), d.to_string());
            CHECK_FALSE(std::isnan(d.log_survival(t)));
            CHECK_FALSE(std::isnan(d.tail_integral(t)));
        }
    }
}
