#include "driftalloc/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>

namespace driftalloc::quadrature {

namespace {

// Caps the subdivision tree at 2^15 leaves; unattainable tolerances return the
// best estimate instead of recursing for minutes.
constexpr unsigned kMaxDepth = 15;

// Boost terminates on error <= tol * L1; convert the absolute tolerance using
// a cheap non-adaptive pass for the L1 scale.
double relative_tolerance(double abs_tol, double l1) {
    if (!(l1 > 0.0)) return 1e-14;
    return std::clamp(abs_tol / l1, 1e-15, 1e-3);
}

}  // namespace

Result gauss_kronrod(const Integrand& f, double a, double b, double abs_tol) {
    if (!(b > a)) return {};
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    double l1 = 0.0;
    GK::integrate(f, a, b, 0, 0.0, nullptr, &l1);
    Result r;
    double tail_l1 = 0.0;
    r.value = GK::integrate(f, a, b, kMaxDepth, relative_tolerance(abs_tol, l1), &r.error, &tail_l1);
    return r;
}

Result tanh_sinh(const Integrand& f, double a, double b, double abs_tol) {
    if (!(b > a)) return {};
    // Non-const: Boost 1.74 declares integrate() const but defines it without
    // the qualifier. thread_local because abscissa tables grow lazily.
    thread_local boost::math::quadrature::tanh_sinh<double> integrator(15);
    Result r;
    double l1 = 0.0;
    // Two passes: the first sizes the tolerance from the L1 norm.
    integrator.integrate(f, a, b, 1e-6, nullptr, &l1);
    r.value = integrator.integrate(f, a, b, relative_tolerance(abs_tol, l1), &r.error, &l1);
    return r;
}

}  // namespace driftalloc::quadrature
