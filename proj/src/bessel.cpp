// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mimc/gaussian_field.hpp"

namespace mimc {

namespace {

// exp(z) * K_nu(z) = int_0^inf exp(-z (cosh t - 1)) cosh(nu t) dt.
// The integrand is even and analytic in a strip around the real axis, so the
// trapezoidal rule anchored at t = 0 converges geometrically in 1/h.
double scaled_integrand(double nu, double z, double t) {
    return std::exp(-z * (std::cosh(t) - 1.0)) * std::cosh(nu * t);
}

double scaled_bessel_k_integral(double nu, double z) {
    constexpr double kRelTol = 1e-12;
    constexpr double kTail = 1e-18;

    // Truncation point: past the integrand's peak and below kTail relative to
    // a coarse running sum.
    const double t_peak = std::asinh(nu / z);
    double coarse_sum = 0.5 * scaled_integrand(nu, z, 0.0);
    double t_end = 0.0;
    constexpr double kCoarse = 0.25;
    for (int k = 1;; ++k) {
        const double t = k * kCoarse;
        const double v = scaled_integrand(nu, z, t);
        coarse_sum += v;
        if (t > t_peak && v <= kTail * coarse_sum) {
            t_end = t;
            break;
        }
        if (k > 100000) {
            throw std::runtime_error("bessel_k: integrand did not decay");
        }
    }

    // Successive halving; each level only adds the odd nodes.
    double h = kCoarse;
    double sum = 0.5 * scaled_integrand(nu, z, 0.0);
    const int n0 = static_cast<int>(std::lround(t_end / h));
    for (int k = 1; k <= n0; ++k) sum += scaled_integrand(nu, z, k * h);
    double estimate = h * sum;
    for (int level = 0; level < 12; ++level) {
        const double h_half = 0.5 * h;
        const int n_half = static_cast<int>(std::lround(t_end / h_half));
        for (int k = 1; k <= n_half; k += 2) sum += scaled_integrand(nu, z, k * h_half);
        const double refined = h_half * sum;
        const bool converged = std::abs(refined - estimate) <= kRelTol * std::abs(refined);
        estimate = refined;
        h = h_half;
        if (converged && level >= 1) return estimate;
    }
    return estimate;
}

}  // namespace

double bessel_k(double nu, double z) {
    if (!(z > 0.0) || !std::isfinite(z)) {
        throw std::domain_error("bessel_k: z must be positive, got " + std::to_string(z));
    }
    if (!(nu >= 0.0)) {
        throw std::domain_error("bessel_k: order must be nonnegative");
    }
    if (nu == 0.5) {
        return std::sqrt(std::numbers::pi / (2.0 * z)) * std::exp(-z);
    }
    return std::exp(-z) * scaled_bessel_k_integral(nu, z);
}

}  // namespace mimc
