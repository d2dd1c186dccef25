#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tlalpan/numerics.hpp"

namespace tlalpan::collapse {

/// Event bookkeeping behind the amplification fraction chi.
struct AmplificationRecord {
    double n_measured = 0.0;
    double n_total = 0.0;
    // heralded mode (all three present together)
    std::optional<double> n_detections;
    std::optional<double> n_heralds;
    std::optional<double> efficiency;
};

struct AmplificationFraction {
    double chi = 0.0;
    bool clamped = false;  // raw heralded estimator exceeded 1
};

/// Direct mode n_measured/n_total; heralded mode n_detections/(eta n_heralds)
/// clamped to [0,1]. Throws on zero denominators or eta outside (0,1].
AmplificationFraction amplification_fraction(const AmplificationRecord& r);

/**
 * Symmetrized KL divergence between forward- and reversal-protocol record
 * histograms, in nats. Identical raw histograms give exactly 0. When either
 * histogram has an empty cell, both are Jeffreys-smoothed (add 0.5 per cell)
 * before the divergence; zero-free histograms are compared as-is.
 */
double record_asymmetry(const numerics::Histogram& p_fwd, const numerics::Histogram& p_bwd);

/// Fringe contrast (Imax - Imin) / (Imax + Imin) of an intensity pattern.
/// Throws on fewer than 2 samples, negative entries, or an all-zero pattern.
double visibility(const std::vector<double>& pattern);

/// One run of a future-boundary toggle experiment: intensity patterns taken
/// with and without the boundary at time tau_b.
struct BoundaryProbeRun {
    double tau_b = 0.0;
    std::vector<double> pattern_with;
    std::vector<double> pattern_without;
};

/// Largest tau_b whose with/without L1 pattern distance exceeds epsilon,
/// or 0 when none qualifies. Throws on an empty family.
double retro_coherence_time(const std::vector<BoundaryProbeRun>& probe, double epsilon);

/// V(chi) = v0 exp[-(chi/chi_c)^nu].
double predict_visibility(double chi, double v0, double chi_c, double nu);

struct OrderParameters {
    double chi = 0.0;
    double O = 0.0;
    double tau_rc = 0.0;
    double visibility = 0.0;
};

struct Interval {
    double lo = 0.0, hi = 0.0;
    bool contains(double v) const { return lo <= v && v <= hi; }
};

struct ScalingFit {
    double chi_c = 0.0;
    double beta = 0.0, nu = 0.0, gamma = 0.0;
    double v0 = 0.0;
    double amp_o = 1.0, amp_tau = 1.0;  // law amplitudes (nuisance)
    double cost = 0.0;                  // joint SSR in scaled residual space
    double residual_v = 0.0, residual_o = 0.0, residual_tau = 0.0;
    Interval ci_chi_c, ci_beta, ci_nu, ci_gamma, ci_v0;
    bool converged = false;
};

struct ScalingFitOptions {
    int bootstrap_resamples = 200;
    std::uint64_t bootstrap_seed = 0x746c616c70616eULL;
    double tau_cap = 1e6;  // model-side cap keeps optimizer iterates finite
};

/**
 * Joint fit of the three critical laws with a shared threshold:
 *
 *   V(chi)   = v0 exp[-(chi/chi_c)^nu]
 *   O(chi)   = a_o (chi - chi_c)^beta          for chi > chi_c, else 0
 *   tau(chi) = a_t (chi_c - chi)^(-gamma)      for chi < chi_c, else 0
 *
 * Residuals are asinh-scaled per law so the diverging tau branch cannot
 * dominate, chi_c is profiled on a grid and refined by golden section, the
 * remaining parameters are Levenberg-Marquardt. Confidence intervals are
 * pairs-bootstrap percentile/basic envelopes widened to contain the point
 * estimate.
 *
 * Requires >= 10 points and data on both sides of the fitted threshold.
 */
ScalingFit fit_scaling(const std::vector<OrderParameters>& sweep,
                       const ScalingFitOptions& opts = {});

/// Evaluates the three laws at one chi (shared helper for synthesis/tests).
OrderParameters scaling_laws(double chi, double chi_c, double beta, double nu, double gamma,
                             double v0, double amp_o = 1.0, double amp_tau = 1.0,
                             double tau_cap = 1e6);

/// Synthetic sweep from exact laws, optional multiplicative Gaussian noise.
std::vector<OrderParameters> synthesize_sweep(const std::vector<double>& chis, double chi_c,
                                              double beta, double nu, double gamma, double v0,
                                              double noise_frac = 0.0, std::uint64_t seed = 0);

}  // namespace tlalpan::collapse
