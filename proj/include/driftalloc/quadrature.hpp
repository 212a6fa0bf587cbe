#pragma once

#include <functional>

namespace driftalloc::quadrature {

struct Result {
    double value = 0.0;
    double error = 0.0;
};

using Integrand = std::function<double(double)>;

// Adaptive Gauss-Kronrod (7/15) on a finite interval. The integrand is never
// evaluated at the endpoints.
Result gauss_kronrod(const Integrand& f, double a, double b, double abs_tol = 1e-10);

// Double-exponential rule for integrands with an integrable endpoint
// singularity (e.g. x^-a at the left end). Endpoints are never evaluated.
Result tanh_sinh(const Integrand& f, double a, double b, double abs_tol = 1e-10);

}  // namespace driftalloc::quadrature
