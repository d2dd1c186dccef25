// Test-side reference implementations, independent of the library code they
// check. Kept header-only so each test binary compiles its own copy.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace oracles {

// Real-axis erfc: Maclaurin series of erf for |x| < 3, optimally truncated
// asymptotic expansion beyond. Returns the value and its own error bound.
struct RealErfc {
    double value = 0.0;
    double bound = 0.0;
};

inline RealErfc real_erfc(double x) {
    const double ax = std::abs(x);
    RealErfc out;
    if (ax < 3.0) {
        // erf(x) = 2/sqrt(pi) sum (-1)^n x^(2n+1) / (n! (2n+1))
        double term = ax;
        double sum = ax;
        for (int n = 1; n < 120; ++n) {
            term *= -ax * ax / n;
            const double add = term / (2 * n + 1);
            sum += add;
            if (std::abs(add) < 1e-18 * std::abs(sum) + 1e-300) break;
        }
        const double erf_ax = 2.0 / std::sqrt(M_PI) * sum;
        out.value = (x >= 0.0) ? 1.0 - erf_ax : 1.0 + erf_ax;
        out.bound = 5e-12;  // round-off of the alternating sum at |x| ~ 3
        return out;
    }
    // erfc(x) ~ exp(-x^2)/(x sqrt(pi)) [1 - 1/(2x^2) + 3/(4x^4) - ...]
    const double x2 = ax * ax;
    double term = 1.0;
    double sum = 1.0;
    double last = std::abs(term);
    for (int n = 1; n < 60; ++n) {
        term *= -(2.0 * n - 1.0) / (2.0 * x2);
        if (std::abs(term) > last) break;  // asymptotic: stop at smallest term
        last = std::abs(term);
        sum += term;
    }
    const double pre = std::exp(-x2) / (ax * std::sqrt(M_PI));
    out.value = (x >= 0.0) ? pre * sum : 2.0 - pre * sum;
    out.bound = pre * last;  // first omitted term magnitude
    return out;
}

// Crude two-term KL for frozen-value checks.
inline double kl_two_cell(double p1, double p2, double q1, double q2) {
    double d = 0.0;
    if (p1 > 0) d += p1 * std::log(p1 / q1);
    if (p2 > 0) d += p2 * std::log(p2 / q2);
    return d;
}

// Closed-form two-level echo: H = diag(1,-1) (sigma_z), perturbation
// eps * sigma_x, initial state |0>. F(t) = 1 - sin^2(Omega t) eps^2/(1+eps^2).
inline double two_level_echo(double eps, double t) {
    const double om = std::sqrt(1.0 + eps * eps);
    const double s = std::sin(om * t);
    return 1.0 - s * s * eps * eps / (1.0 + eps * eps);
}

// Dense brute-force |<f| P U |i>|^2-style helpers for the twotime tests.
template <typename MatrixT, typename VectorT>
double born_bruteforce(const VectorT& i, const MatrixT& proj, const MatrixT& u) {
    const VectorT v = proj * (u * i);
    double acc = 0.0;
    for (int r = 0; r < v.size(); ++r) acc += std::norm(v[r]);
    return acc;
}

// Mean adjacent-gap ratio <r> of a sorted spectrum's central bulk.
inline double gap_ratio(std::vector<double> evals) {
    std::sort(evals.begin(), evals.end());
    const std::size_t n = evals.size();
    const std::size_t lo = n / 6, hi = 5 * n / 6;
    std::vector<double> gaps;
    for (std::size_t i = lo; i + 1 < hi; ++i) {
        const double g = evals[i + 1] - evals[i];
        if (g > 1e-12) gaps.push_back(g);
    }
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i + 1 < gaps.size(); ++i) {
        acc += std::min(gaps[i], gaps[i + 1]) / std::max(gaps[i], gaps[i + 1]);
        ++cnt;
    }
    return cnt ? acc / cnt : 0.0;
}

// chi-square upper quantile via the Wilson-Hilferty cube approximation.
inline double chi2_quantile(double dof, double z_upper) {
    const double a = 2.0 / (9.0 * dof);
    const double c = 1.0 - a + z_upper * std::sqrt(a);
    return dof * c * c * c;
}

}  // namespace oracles
