#pragma once

#include "driftalloc/error.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <string>

namespace driftalloc::internal {

constexpr int kBisectionCap = 200;

// Root of a monotone function on [lo, hi] by bisection, refined until the
// bracket collapses to adjacent doubles or `x_tol` is reached. A missing
// sign change or an exhausted iteration cap is reported, never silent.
template <class F>
double bisect(F&& f, double lo, double hi, const std::string& what, double x_tol = 0.0) {
    const double flo = f(lo);
    if (flo == 0.0) return lo;
    const double fhi = f(hi);
    if (fhi == 0.0) return hi;
    if (std::signbit(flo) == std::signbit(fhi)) {
        fail(ErrorCode::NoConvergence, what + ": root is not bracketed");
    }
    const auto done = [x_tol](double a, double b) {
        return b - a <= x_tol || std::nextafter(a, b) >= b;
    };
    std::uintmax_t iters = kBisectionCap;
    try {
        const auto [a, b] = boost::math::tools::bisect(f, lo, hi, done, iters);
        if (!done(a, b)) fail(ErrorCode::NoConvergence, what + ": bisection iteration cap reached");
        return 0.5 * (a + b);
    } catch (const boost::math::evaluation_error& e) {
        fail(ErrorCode::NoConvergence, what + ": " + e.what());
    }
}

}  // namespace driftalloc::internal
