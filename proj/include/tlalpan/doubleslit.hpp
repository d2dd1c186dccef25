#pragma once

#include <cstdint>
#include <vector>

#include "tlalpan/numerics.hpp"

namespace tlalpan::doubleslit {

/// Far-field (Fraunhofer) double-slit geometry. Intensities depend on the
/// reduced screen coordinate u = y / L only through a/lambda and d/lambda.
struct SlitGeometry {
    double slit_separation = 5.0e-3;  // d
    double slit_width = 1.0e-3;       // a
    double wavelength = 1.0e-6;       // lambda
    double screen_distance = 10.0;    // L  (far field requires L > 10 d^2/lambda)
    double screen_half_extent = 0.0;  // in u = y/L; 0 selects lambda/a (central lobe)
    int n_bins = 512;

    double u_max() const {
        return screen_half_extent > 0.0 ? screen_half_extent : wavelength / slit_width;
    }
    bool far_field() const {
        return screen_distance > 10.0 * slit_separation * slit_separation / wavelength;
    }
    void validate() const;

    /// Normalized sinc^2 envelope (the tagged, no-cross-term distribution).
    double envelope(double u) const;
    /// Envelope times the two-slit fringe factor cos^2(pi d u / lambda).
    double two_slit(double u) const;
    std::vector<double> bin_centers() const;
};

struct TaggedEventBatch {
    std::uint64_t n_events = 0;
    double chi = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t n_tagged = 0;
    numerics::Histogram screen;        // counts per bin, total == n_events
    std::vector<double> bin_centers;   // u-coordinates of the bins
};

/// One-photon-at-a-time batch: each event is tagged with probability chi;
/// tagged events sample the envelope-only distribution, untagged the full
/// two-slit intensity. Deterministic for a fixed seed.
TaggedEventBatch simulate_batch(const SlitGeometry& g, double chi, std::uint64_t n_events,
                                std::uint64_t seed);

struct VisibilityEstimate {
    double v = 0.0;       // signed modulation depth of the fringe component
    double stderr_v = 0.0;  // Poisson bin errors propagated through the fit
};

/// Linear least-squares fit of counts to A*envelope + B*envelope*cos(2 pi d u
/// / lambda) over bin-integrated basis functions; returns v = B/A.
VisibilityEstimate fit_visibility(const SlitGeometry& g, const numerics::Histogram& screen);

/// The same estimator applied to exact expected counts at chi = 0; the
/// analytic reference V0 for the mixture law V(chi) = (1-chi) V0.
double analytic_visibility_v0(const SlitGeometry& g);

struct CurvePoint {
    double chi = 0.0;
    double visibility = 0.0;
    double stderr_v = 0.0;
};

/// One batch per chi with substream seeds derived from (seed, index), so the
/// curve is independent of evaluation order.
std::vector<CurvePoint> visibility_curve(const SlitGeometry& g, const std::vector<double>& chis,
                                         std::uint64_t n_events, std::uint64_t seed);

struct ModelComparison {
    double v0_linear = 0.0;
    double rss_linear = 0.0;      // stderr-weighted residual sum of squares
    double v0_qti = 0.0, chi_c = 0.0, nu = 0.0;
    double rss_qti = 0.0;
    double aic_linear = 0.0, aic_qti = 0.0;
    double delta_aic = 0.0;       // aic_linear - aic_qti (positive favors QTI)
    bool qti_wins = false;
    // events per point for the wrong model to be rejected at 3 sigma,
    // scaled from the observed separation
    double n_events_for_3sigma = 0.0;
};

/**
 * Fits the linear-mixture law V0 (1-chi) and the threshold law
 * V0 exp[-(chi/chi_c)^nu] to a visibility curve, weighted by the per-point
 * standard errors, and reports residuals, an AIC difference and the sample
 * size needed to separate the models at 3 sigma. Requires >= 10 points with
 * distinct visibilities; n_events_ref is the per-point size of the curve.
 */
ModelComparison compare_models(const std::vector<CurvePoint>& curve, std::uint64_t n_events_ref);

}  // namespace tlalpan::doubleslit
