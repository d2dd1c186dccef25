#include "tlalpan/collapse.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "tlalpan/io_util.hpp"

namespace tlalpan::collapse {

AmplificationFraction amplification_fraction(const AmplificationRecord& r) {
    AmplificationFraction out;
    const bool heralded = r.n_detections.has_value() || r.n_heralds.has_value() ||
                          r.efficiency.has_value();
    if (heralded) {
        if (!r.n_detections || !r.n_heralds || !r.efficiency)
            throw std::invalid_argument(
                "amplification_fraction: heralded mode needs detections, heralds and efficiency");
        const double eta = *r.efficiency;
        if (!(eta > 0.0) || eta > 1.0)
            throw std::invalid_argument("amplification_fraction: efficiency must be in (0,1]");
        if (!(*r.n_heralds > 0.0))
            throw std::invalid_argument("amplification_fraction: zero heralds");
        if (*r.n_detections > *r.n_heralds)
            throw std::invalid_argument("amplification_fraction: detections exceed heralds");
        const double raw = *r.n_detections / (eta * *r.n_heralds);
        out.chi = std::clamp(raw, 0.0, 1.0);
        out.clamped = raw > 1.0;
        return out;
    }
    if (!(r.n_total > 0.0))
        throw std::invalid_argument("amplification_fraction: zero total events");
    if (r.n_measured < 0.0 || r.n_measured > r.n_total)
        throw std::invalid_argument("amplification_fraction: n_measured outside [0, n_total]");
    out.chi = r.n_measured / r.n_total;
    return out;
}

double record_asymmetry(const numerics::Histogram& p_fwd, const numerics::Histogram& p_bwd) {
    if (!p_fwd.same_alphabet(p_bwd))
        throw std::invalid_argument("record_asymmetry: alphabets differ");
    if (p_fwd.counts == p_bwd.counts) return 0.0;
    if (p_fwd.has_zero_cell() || p_bwd.has_zero_cell())
        return numerics::symmetrized_kl(numerics::jeffreys_smooth(p_fwd),
                                        numerics::jeffreys_smooth(p_bwd));
    return numerics::symmetrized_kl(p_fwd, p_bwd);
}

double visibility(const std::vector<double>& pattern) {
    if (pattern.size() < 2)
        throw std::invalid_argument("visibility: need at least 2 samples");
    double mn = pattern[0], mx = pattern[0];
    for (double v : pattern) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("visibility: intensities must be finite and non-negative");
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    if (mx == 0.0) throw std::invalid_argument("visibility: all-zero pattern");
    return (mx - mn) / (mx + mn);
}

double retro_coherence_time(const std::vector<BoundaryProbeRun>& probe, double epsilon) {
    if (probe.empty()) throw std::invalid_argument("retro_coherence_time: empty probe family");
    double best = 0.0;
    for (const auto& run : probe) {
        if (run.pattern_with.size() != run.pattern_without.size())
            throw std::invalid_argument("retro_coherence_time: pattern length mismatch");
        double l1 = 0.0;
        for (std::size_t i = 0; i < run.pattern_with.size(); ++i)
            l1 += std::abs(run.pattern_with[i] - run.pattern_without[i]);
        if (l1 > epsilon) best = std::max(best, run.tau_b);
    }
    return best;
}

double predict_visibility(double chi, double v0, double chi_c, double nu) {
    if (!(chi >= 0.0) || !(chi_c > 0.0) || !(nu > 0.0))
        throw std::invalid_argument("predict_visibility: requires chi >= 0, chi_c > 0, nu > 0");
    return v0 * std::exp(-std::pow(chi / chi_c, nu));
}

OrderParameters scaling_laws(double chi, double chi_c, double beta, double nu, double gamma,
                             double v0, double amp_o, double amp_tau, double tau_cap) {
    OrderParameters p;
    p.chi = chi;
    p.visibility = v0 * std::exp(-std::pow(chi / chi_c, nu));
    p.O = (chi > chi_c) ? amp_o * std::pow(chi - chi_c, beta) : 0.0;
    p.tau_rc = (chi < chi_c) ? std::min(amp_tau * std::pow(chi_c - chi, -gamma), tau_cap) : 0.0;
    return p;
}

std::vector<OrderParameters> synthesize_sweep(const std::vector<double>& chis, double chi_c,
                                              double beta, double nu, double gamma, double v0,
                                              double noise_frac, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<OrderParameters> out;
    out.reserve(chis.size());
    for (double chi : chis) {
        OrderParameters p = scaling_laws(chi, chi_c, beta, nu, gamma, v0);
        if (noise_frac > 0.0) {
            p.visibility = std::max(p.visibility * (1.0 + noise_frac * gauss(rng)), 0.0);
            p.O = std::max(p.O * (1.0 + noise_frac * gauss(rng)), 0.0);
            p.tau_rc = std::max(p.tau_rc * (1.0 + noise_frac * gauss(rng)), 0.0);
        }
        out.push_back(p);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Joint scaling fit internals.

namespace {

struct SweepData {
    Eigen::VectorXd chi, V, O, tau;
};

struct Scales {
    double v = 1.0, o = 1.0, tau = 1.0;
};

double positive_median_scale(const Eigen::VectorXd& y) {
    std::vector<double> pos;
    for (int i = 0; i < y.size(); ++i)
        if (y[i] > 0.0) pos.push_back(y[i]);
    if (pos.empty()) return 1.0;
    std::sort(pos.begin(), pos.end());
    const double med = pos[pos.size() / 2];
    return std::max(0.05 * med, 1e-300);
}

Scales make_scales(const SweepData& d) {
    return {positive_median_scale(d.V), positive_median_scale(d.O),
            positive_median_scale(d.tau)};
}

// psm layout: [log beta, log nu, log gamma, log v0, log a_o, log a_t]
Eigen::VectorXd joint_residuals(double chi_c, const Eigen::VectorXd& psm, const SweepData& d,
                                const Scales& s, double tau_cap) {
    const double beta = std::exp(std::clamp(psm[0], -60.0, 60.0));
    const double nu = std::exp(std::clamp(psm[1], -60.0, 60.0));
    const double gamma = std::exp(std::clamp(psm[2], -60.0, 60.0));
    const double v0 = std::exp(std::clamp(psm[3], -60.0, 60.0));
    const double ao = std::exp(std::clamp(psm[4], -60.0, 60.0));
    const double at = std::exp(std::clamp(psm[5], -60.0, 60.0));
    const int n = static_cast<int>(d.chi.size());
    Eigen::VectorXd r(3 * n);
    for (int i = 0; i < n; ++i) {
        const OrderParameters m =
            scaling_laws(d.chi[i], chi_c, beta, nu, gamma, v0, ao, at, tau_cap);
        r[i] = std::asinh(m.visibility / s.v) - std::asinh(d.V[i] / s.v);
        r[n + i] = std::asinh(m.O / s.o) - std::asinh(d.O[i] / s.o);
        r[2 * n + i] = std::asinh(m.tau_rc / s.tau) - std::asinh(d.tau[i] / s.tau);
    }
    return r;
}

// Separable initialization at fixed chi_c: log-space regressions on each
// one-sided branch plus a 1-D scan in nu.
Eigen::VectorXd separable_init(double cc, const SweepData& d) {
    Eigen::VectorXd psm = Eigen::VectorXd::Zero(6);
    const int n = static_cast<int>(d.chi.size());

    auto line_fit = [](const std::vector<double>& x, const std::vector<double>& y,
                       double& slope, double& icpt) {
        const double nn = static_cast<double>(x.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sx += x[i];
            sy += y[i];
            sxx += x[i] * x[i];
            sxy += x[i] * y[i];
        }
        const double den = nn * sxx - sx * sx;
        slope = (den != 0.0) ? (nn * sxy - sx * sy) / den : 0.0;
        icpt = (sy - slope * sx) / nn;
    };

    std::vector<double> xo, yo, xt, yt;
    for (int i = 0; i < n; ++i) {
        if (d.chi[i] > cc && d.O[i] > 0.0) {
            xo.push_back(std::log(d.chi[i] - cc));
            yo.push_back(std::log(d.O[i]));
        }
        if (d.chi[i] < cc && d.tau[i] > 0.0) {
            xt.push_back(-std::log(cc - d.chi[i]));
            yt.push_back(std::log(d.tau[i]));
        }
    }
    double slope = 1.0, icpt = 0.0;
    if (xo.size() >= 2) {
        line_fit(xo, yo, slope, icpt);
        psm[0] = std::log(std::max(slope, 1e-2));
        psm[4] = icpt;
    }
    if (xt.size() >= 2) {
        line_fit(xt, yt, slope, icpt);
        psm[2] = std::log(std::max(slope, 1e-2));
        psm[5] = icpt;
    }
    double best_nu = 1.0, best_ssr = std::numeric_limits<double>::infinity(), best_lv0 = 0.0;
    for (int g = 0; g < 24; ++g) {
        const double nu = 0.2 * std::pow(8.0 / 0.2, g / 23.0);
        double ssr = 0.0, lv0 = 0.0;
        int cnt = 0;
        for (int i = 0; i < n; ++i)
            if (d.V[i] > 0.0) {
                lv0 += std::log(d.V[i]) + std::pow(d.chi[i] / cc, nu);
                ++cnt;
            }
        if (cnt == 0) break;
        lv0 /= cnt;
        for (int i = 0; i < n; ++i)
            if (d.V[i] > 0.0) {
                const double pred = lv0 - std::pow(d.chi[i] / cc, nu);
                ssr += (std::log(d.V[i]) - pred) * (std::log(d.V[i]) - pred);
            }
        if (ssr < best_ssr) {
            best_ssr = ssr;
            best_nu = nu;
            best_lv0 = lv0;
        }
    }
    psm[1] = std::log(best_nu);
    psm[3] = best_lv0;
    return psm;
}

struct ProfilePoint {
    double cost = std::numeric_limits<double>::infinity();
    Eigen::VectorXd psm;
};

// Inner fit at fixed chi_c. Always tries the fresh separable init; a warm
// start is used only as a second candidate so a degenerate state cannot trap
// the profile (log-parametrized exponents have vanishing gradient at 0).
ProfilePoint profile_point(double cc, const SweepData& d, const Scales& s, double tau_cap,
                           const Eigen::VectorXd* warm, int iters) {
    auto fres = [&](const Eigen::VectorXd& p) { return joint_residuals(cc, p, d, s, tau_cap); };
    numerics::LmOptions lm;
    lm.max_iterations = iters;
    ProfilePoint out;
    {
        auto o = numerics::levenberg_marquardt(fres, separable_init(cc, d), lm);
        out.cost = o.cost;
        out.psm = o.theta;
    }
    if (warm) {
        auto o = numerics::levenberg_marquardt(fres, *warm, lm);
        if (o.cost < out.cost) {
            out.cost = o.cost;
            out.psm = o.theta;
        }
    }
    return out;
}

struct CoreFit {
    double chi_c = 0.0;
    Eigen::VectorXd psm;
    double cost = 0.0;
};

CoreFit fit_core(const SweepData& d, const Scales& s, double tau_cap, double lo, double hi,
                 int coarse, const Eigen::VectorXd* warm, int iters) {
    CoreFit best;
    best.cost = std::numeric_limits<double>::infinity();
    for (int i = 0; i < coarse; ++i) {
        const double cc = lo + (hi - lo) * (i + 0.5) / coarse;
        ProfilePoint p = profile_point(cc, d, s, tau_cap, warm, iters);
        if (p.cost < best.cost) {
            best.cost = p.cost;
            best.chi_c = cc;
            best.psm = p.psm;
        }
    }
    // golden-section refinement one coarse cell around the winner
    const double cell = (hi - lo) / coarse;
    double a = std::max(best.chi_c - cell, lo);
    double b = std::min(best.chi_c + cell, hi);
    const double gr = 0.6180339887498949;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    ProfilePoint p1 = profile_point(x1, d, s, tau_cap, &best.psm, iters);
    ProfilePoint p2 = profile_point(x2, d, s, tau_cap, &best.psm, iters);
    for (int it = 0; it < 48 && (b - a) > 1e-8; ++it) {
        if (p1.cost < p2.cost) {
            b = x2;
            x2 = x1;
            p2 = p1;
            x1 = b - gr * (b - a);
            p1 = profile_point(x1, d, s, tau_cap, &p2.psm, iters);
        } else {
            a = x1;
            x1 = x2;
            p1 = p2;
            x2 = a + gr * (b - a);
            p2 = profile_point(x2, d, s, tau_cap, &p1.psm, iters);
        }
    }
    const ProfilePoint& pb = (p1.cost < p2.cost) ? p1 : p2;
    const double ccb = (p1.cost < p2.cost) ? x1 : x2;
    if (pb.cost < best.cost) {
        best.cost = pb.cost;
        best.chi_c = ccb;
        best.psm = pb.psm;
    }
    return best;
}

}  // namespace

ScalingFit fit_scaling(const std::vector<OrderParameters>& sweep, const ScalingFitOptions& opts) {
    if (sweep.size() < 10)
        throw std::invalid_argument("fit_scaling: need at least 10 sweep points");
    SweepData d;
    const int n = static_cast<int>(sweep.size());
    d.chi.resize(n);
    d.V.resize(n);
    d.O.resize(n);
    d.tau.resize(n);
    for (int i = 0; i < n; ++i) {
        d.chi[i] = sweep[i].chi;
        d.V[i] = sweep[i].visibility;
        d.O[i] = sweep[i].O;
        d.tau[i] = sweep[i].tau_rc;
        if (!std::isfinite(d.chi[i]) || !std::isfinite(d.V[i]) || !std::isfinite(d.O[i]) ||
            !std::isfinite(d.tau[i]))
            throw std::invalid_argument("fit_scaling: non-finite sweep entry");
    }
    const double lo = d.chi.minCoeff(), hi = d.chi.maxCoeff();
    if (!(hi > lo)) throw std::invalid_argument("fit_scaling: degenerate chi range");

    const Scales s = make_scales(d);
    CoreFit core = fit_core(d, s, opts.tau_cap, lo, hi, 13, nullptr, 80);
    {
        // final polish with more iterations
        ProfilePoint p = profile_point(core.chi_c, d, s, opts.tau_cap, &core.psm, 400);
        core.cost = p.cost;
        core.psm = p.psm;
    }

    // the sweep must actually straddle the fitted threshold
    int below = 0, above = 0;
    for (int i = 0; i < n; ++i) (d.chi[i] < core.chi_c ? below : above)++;
    if (below < 2 || above < 2)
        throw std::domain_error(
            "fit_scaling: sweep does not span the transition (no chi_c with data on both sides)");

    ScalingFit fit;
    fit.chi_c = core.chi_c;
    fit.beta = std::exp(core.psm[0]);
    fit.nu = std::exp(core.psm[1]);
    fit.gamma = std::exp(core.psm[2]);
    fit.v0 = std::min(std::exp(core.psm[3]), 1.0);
    fit.amp_o = std::exp(core.psm[4]);
    fit.amp_tau = std::exp(core.psm[5]);
    fit.cost = core.cost;
    fit.converged = std::isfinite(core.cost);
    {
        const Eigen::VectorXd r = joint_residuals(core.chi_c, core.psm, d, s, opts.tau_cap);
        fit.residual_v = r.segment(0, n).norm();
        fit.residual_o = r.segment(n, n).norm();
        fit.residual_tau = r.segment(2 * n, n).norm();
    }

    // pairs bootstrap; envelope of percentile and basic intervals
    const int B = opts.bootstrap_resamples;
    std::vector<std::array<double, 5>> samples;
    samples.reserve(B);
    const double cell = (hi - lo) / 13.0;
    for (int b = 0; b < B; ++b) {
        std::mt19937_64 rng(mix_seed(opts.bootstrap_seed, static_cast<std::uint64_t>(b)));
        std::uniform_int_distribution<int> pick(0, n - 1);
        SweepData rd;
        rd.chi.resize(n);
        rd.V.resize(n);
        rd.O.resize(n);
        rd.tau.resize(n);
        for (int i = 0; i < n; ++i) {
            const int j = pick(rng);
            rd.chi[i] = d.chi[j];
            rd.V[i] = d.V[j];
            rd.O[i] = d.O[j];
            rd.tau[i] = d.tau[j];
        }
        const double blo = std::max(core.chi_c - 1.5 * cell, lo);
        const double bhi = std::min(core.chi_c + 1.5 * cell, hi);
        CoreFit cb = fit_core(rd, s, opts.tau_cap, blo, bhi, 5, &core.psm, 40);
        samples.push_back({cb.chi_c, std::exp(cb.psm[0]), std::exp(cb.psm[1]),
                           std::exp(cb.psm[2]), std::min(std::exp(cb.psm[3]), 1.0)});
    }
    const double points[5] = {fit.chi_c, fit.beta, fit.nu, fit.gamma, fit.v0};
    Interval* cis[5] = {&fit.ci_chi_c, &fit.ci_beta, &fit.ci_nu, &fit.ci_gamma, &fit.ci_v0};
    for (int k = 0; k < 5; ++k) {
        std::vector<double> col(B);
        for (int b = 0; b < B; ++b) col[b] = samples[b][k];
        std::sort(col.begin(), col.end());
        auto quant = [&](double q) {
            const double pos = q * (B - 1);
            const int i0 = static_cast<int>(pos);
            const int i1 = std::min(i0 + 1, B - 1);
            return col[i0] + (pos - i0) * (col[i1] - col[i0]);
        };
        const double qlo = quant(0.025), qhi = quant(0.975);
        // envelope of percentile and basic (reflected) intervals, then widen
        // to contain the point estimate
        double lo_ci = std::min(qlo, 2.0 * points[k] - qhi);
        double hi_ci = std::max(qhi, 2.0 * points[k] - qlo);
        lo_ci = std::min(lo_ci, points[k]);
        hi_ci = std::max(hi_ci, points[k]);
        cis[k]->lo = lo_ci;
        cis[k]->hi = hi_ci;
    }
    return fit;
}

}  // namespace tlalpan::collapse
