#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tlalpan::numerics {

using Complex = std::complex<double>;

/**
 * Complementary error function of a complex argument.
 *
 * Reflection erfc(z) = 2 - erfc(-z) maps everything to Re z >= 0, where
 * erfc(z) = exp(-z^2) w(iz). The Faddeeva factor w is evaluated by a
 * midpoint trapezoid sum with an explicit pole-correction term for
 * |iz| < 7 and by the Laplace continued fraction beyond. Relative error
 * is ~1e-13 over |z| <= 30 wherever the value is representable.
 *
 * Deep in the underflow regime (Re z^2 > ~709) the result saturates to the
 * asymptotic limit (0, or 2 on the reflected side). Where the true value
 * would overflow, the magnitude is clamped at exp(709); no NaN or Inf is
 * returned for finite input.
 */
Complex cerfc(Complex z);

/// Faddeeva function w(z) = exp(-z^2) erfc(-iz) for Im z >= 0.
Complex faddeeva_w(Complex z);

// ---------------------------------------------------------------------------
// Histograms over a discrete record alphabet.

struct Histogram {
    // labels may be empty, in which case the alphabet is the index set.
    std::vector<std::string> labels;
    std::vector<double> counts;

    Histogram() = default;
    explicit Histogram(std::vector<double> c) : counts(std::move(c)) { validate(); }
    Histogram(std::vector<std::string> l, std::vector<double> c)
        : labels(std::move(l)), counts(std::move(c)) {
        validate();
    }

    double total() const;
    bool same_alphabet(const Histogram& other) const;
    bool has_zero_cell() const;
    void validate() const;  // throws on negative counts or label/count mismatch
};

/// Add-0.5 pseudo-count per cell (Jeffreys-style zero-count smoothing).
Histogram jeffreys_smooth(const Histogram& h);

/**
 * D_KL(p||q) in nats over normalized count vectors. Cells with p=0
 * contribute zero. Throws if the alphabets differ, a total is zero, or q
 * vanishes on the support of p (caller must smooth first in that case).
 */
double kl_divergence(const Histogram& p, const Histogram& q);

/// (D_KL(p||q) + D_KL(q||p)) / 2, same preconditions on both orders.
double symmetrized_kl(const Histogram& p, const Histogram& q);

// ---------------------------------------------------------------------------
// Nonlinear least squares.

enum class FitFamily {
    PowerLaw,            // y = A x^b              params: A, b
    StretchedExp,        // y = A exp(-(x/s)^p)    params: A, s, p
    PiecewiseCritical,   // y = A (x-c)^p for x>c else 0   params: A, c, p
};

struct FitResult {
    std::map<std::string, double> params;
    double residual_norm = 0.0;
    Eigen::MatrixXd covariance;
    bool converged = false;
    int iterations = 0;
};

/**
 * Least-squares fit of one of the named families. Initialization runs a
 * grid of 8 log-spaced starting exponents (both signs) before local
 * refinement, so decaying and growing data converge from the same call.
 * Deterministic for identical inputs.
 */
FitResult fit_nonlinear(FitFamily family, const std::vector<double>& xs,
                        const std::vector<double>& ys,
                        const std::map<std::string, double>& init = {});

// Generic Levenberg-Marquardt on a residual vector, numeric Jacobian.
// Exposed for the scaling fits in the collapse module.
struct LmOptions {
    int max_iterations = 200;
    double step_tol = 1e-12;
    double cost_tol = 1e-15;
};

struct LmOutcome {
    Eigen::VectorXd theta;
    double cost = 0.0;  // sum of squared residuals
    bool converged = false;
    int iterations = 0;
    Eigen::MatrixXd jtj;  // J^T J at the optimum
};

LmOutcome levenberg_marquardt(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
                              const Eigen::VectorXd& theta0, const LmOptions& opts = {});

}  // namespace tlalpan::numerics
