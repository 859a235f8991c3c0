#pragma once

#include <cmath>
#include <stdexcept>

namespace atbag {

namespace detail {

// Continued-fraction evaluation for the incomplete beta function
// (modified Lentz); valid for x < (a+1)/(a+b+2).
inline double beta_cont_frac(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double reg_inc_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("reg_inc_beta: a, b must be > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * detail::beta_cont_frac(a, b, x) / a;
    }
    return 1.0 - front * detail::beta_cont_frac(b, a, 1.0 - x) / b;
}

/// Inverse of I_x(a, b) in x, by bisection refined with Newton steps.
inline double inv_reg_inc_beta(double a, double b, double p) {
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    double lo = 0.0, hi = 1.0;
    double x = 0.5;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    for (int iter = 0; iter < 200; ++iter) {
        const double f = reg_inc_beta(a, b, x) - p;
        if (f > 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        // Newton step when the pdf is well behaved, bisection otherwise.
        double x_next;
        const double pdf = std::exp(ln_front + (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x));
        if (pdf > 1e-300 && std::isfinite(pdf)) {
            x_next = x - f / pdf;
        } else {
            x_next = 0.5 * (lo + hi);
        }
        if (!(x_next > lo && x_next < hi)) x_next = 0.5 * (lo + hi);
        if (std::abs(x_next - x) < 1e-15 * (1.0 + std::abs(x))) return x_next;
        x = x_next;
    }
    return x;
}

}  // namespace atbag
