#pragma once

// Closed forms computed independently of the library.

#include <cmath>

namespace oracle {

/// Solution of u' = -u^{-p} vanishing at t = 0.
inline double ode(double p, double t) { return std::pow((p + 1.0) * (-t), 1.0 / (p + 1.0)); }

/// Radial steady profile c |x|^{2/(p+1)}: solves u'' + (n-1) u'/r = u^{-p}.
inline double radial_coefficient(double p, int n) {
    const double a = 2.0 / (p + 1.0);
    return std::pow(a * (n - 2 + a), -1.0 / (p + 1.0));
}

/// E(s) for the constant field c with the full heat-kernel weight.
inline double energy_of_constant(double p, double c, double s) {
    return -std::pow(s, (p - 1.0) / (p + 1.0)) * std::pow(c, 1.0 - p) / (p - 1.0) -
           std::pow(s, -2.0 / (p + 1.0)) * c * c / (2.0 * (p + 1.0));
}

/// Standard normal tail in n dimensions: P(|Z| > k).
inline double chi_tail(int n, double k) {
    if (n == 1) return std::erfc(k / std::sqrt(2.0));
    if (n == 2) return std::exp(-k * k / 2.0);
    return std::erfc(k / std::sqrt(2.0)) + std::sqrt(2.0 / M_PI) * k * std::exp(-k * k / 2.0);
}

}  // namespace oracle
