#include "tlalpan/doubleslit.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "tlalpan/io_util.hpp"

namespace tlalpan::doubleslit {

namespace {
constexpr double kPi = 3.14159265358979323846;

double sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}
}  // namespace

void SlitGeometry::validate() const {
    if (!(slit_separation > 0.0) || !(slit_width > 0.0) || !(wavelength > 0.0) ||
        !(screen_distance > 0.0))
        throw std::invalid_argument("SlitGeometry: lengths must be positive");
    if (n_bins < 8) throw std::invalid_argument("SlitGeometry: need at least 8 bins");
    if (!far_field())
        throw std::invalid_argument(
            "SlitGeometry: not in the far field (requires L > 10 d^2 / lambda)");
}

double SlitGeometry::envelope(double u) const {
    const double s = sinc(kPi * slit_width * u / wavelength);
    return s * s;
}

double SlitGeometry::two_slit(double u) const {
    const double c = std::cos(kPi * slit_separation * u / wavelength);
    return envelope(u) * c * c;
}

std::vector<double> SlitGeometry::bin_centers() const {
    const double um = u_max();
    const double w = 2.0 * um / n_bins;
    std::vector<double> c(n_bins);
    for (int i = 0; i < n_bins; ++i) c[i] = -um + (i + 0.5) * w;
    return c;
}

namespace {

// inverse-CDF sampler tabulated on a fine grid
struct CdfSampler {
    std::vector<double> cdf;  // cumulative at grid points
    double u_min, du;

    template <typename F>
    CdfSampler(F pdf, double um, int n_fine = 1 << 16) : u_min(-um), du(2.0 * um / (n_fine - 1)) {
        cdf.resize(n_fine);
        double acc = 0.0;
        for (int i = 0; i < n_fine; ++i) {
            acc += pdf(-um + i * du);
            cdf[i] = acc;
        }
        for (auto& c : cdf) c /= acc;
    }
    double sample(double r) const {
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), r);
        const std::size_t idx = std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1);
        return u_min + idx * du;
    }
};

}  // namespace

TaggedEventBatch simulate_batch(const SlitGeometry& g, double chi, std::uint64_t n_events,
                                std::uint64_t seed) {
    g.validate();
    if (chi < 0.0 || chi > 1.0) throw std::invalid_argument("simulate_batch: chi outside [0,1]");
    if (n_events < 1) throw std::invalid_argument("simulate_batch: need at least one event");

    const double um = g.u_max();
    const CdfSampler env_cdf([&](double u) { return g.envelope(u); }, um);
    const CdfSampler full_cdf([&](double u) { return g.two_slit(u); }, um);

    TaggedEventBatch batch;
    batch.n_events = n_events;
    batch.chi = chi;
    batch.seed = seed;
    batch.bin_centers = g.bin_centers();
    batch.screen.counts.assign(g.n_bins, 0.0);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double bin_w = 2.0 * um / g.n_bins;
    for (std::uint64_t e = 0; e < n_events; ++e) {
        const bool tagged = unif(rng) < chi;
        if (tagged) ++batch.n_tagged;
        const double u = (tagged ? env_cdf : full_cdf).sample(unif(rng));
        int b = static_cast<int>((u + um) / bin_w);
        b = std::clamp(b, 0, g.n_bins - 1);
        batch.screen.counts[b] += 1.0;
    }
    return batch;
}

namespace {

struct Basis {
    std::vector<double> f1, f2;  // bin-integrated envelope and envelope*cos
};

Basis make_basis(const SlitGeometry& g) {
    const double um = g.u_max();
    const double w = 2.0 * um / g.n_bins;
    Basis b;
    b.f1.resize(g.n_bins);
    b.f2.resize(g.n_bins);
    const int sub = 8;  // per-bin quadrature
    for (int i = 0; i < g.n_bins; ++i) {
        double s1 = 0.0, s2 = 0.0;
        for (int k = 0; k < sub; ++k) {
            const double u = -um + (i + (k + 0.5) / sub) * w;
            const double env = g.envelope(u);
            s1 += env;
            s2 += env * std::cos(2.0 * kPi * g.slit_separation * u / g.wavelength);
        }
        b.f1[i] = s1 / sub;
        b.f2[i] = s2 / sub;
    }
    return b;
}

VisibilityEstimate fit_against(const Basis& basis, const std::vector<double>& counts) {
    const std::size_t n = counts.size();
    double s11 = 0, s12 = 0, s22 = 0, s1y = 0, s2y = 0;
    for (std::size_t i = 0; i < n; ++i) {
        s11 += basis.f1[i] * basis.f1[i];
        s12 += basis.f1[i] * basis.f2[i];
        s22 += basis.f2[i] * basis.f2[i];
        s1y += basis.f1[i] * counts[i];
        s2y += basis.f2[i] * counts[i];
    }
    const double det = s11 * s22 - s12 * s12;
    if (det <= 0.0) throw std::runtime_error("fit_visibility: singular normal equations");
    const double A = (s22 * s1y - s12 * s2y) / det;
    const double B = (s11 * s2y - s12 * s1y) / det;
    if (A == 0.0) throw std::runtime_error("fit_visibility: zero envelope amplitude");

    // cov(A,B) from per-bin Poisson variance var_i = max(counts_i, 1)
    // theta = M^-1 F^T y  =>  cov = M^-1 F^T diag(var) F M^-1
    double q11 = 0, q12 = 0, q22 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double var = std::max(counts[i], 1.0);
        q11 += basis.f1[i] * basis.f1[i] * var;
        q12 += basis.f1[i] * basis.f2[i] * var;
        q22 += basis.f2[i] * basis.f2[i] * var;
    }
    const double i11 = s22 / det, i12 = -s12 / det, i22 = s11 / det;
    const double cAA = i11 * (q11 * i11 + q12 * i12) + i12 * (q12 * i11 + q22 * i12);
    const double cAB = i11 * (q11 * i12 + q12 * i22) + i12 * (q12 * i12 + q22 * i22);
    const double cBB = i12 * (q11 * i12 + q12 * i22) + i22 * (q12 * i12 + q22 * i22);

    VisibilityEstimate est;
    est.v = B / A;
    const double var_v = cBB / (A * A) + B * B * cAA / (A * A * A * A) -
                         2.0 * B * cAB / (A * A * A);
    est.stderr_v = std::sqrt(std::max(var_v, 0.0));
    return est;
}

}  // namespace

VisibilityEstimate fit_visibility(const SlitGeometry& g, const numerics::Histogram& screen) {
    if (static_cast<int>(screen.counts.size()) != g.n_bins)
        throw std::invalid_argument("fit_visibility: histogram does not match geometry bins");
    return fit_against(make_basis(g), screen.counts);
}

double analytic_visibility_v0(const SlitGeometry& g) {
    const Basis basis = make_basis(g);
    const double um = g.u_max();
    const double w = 2.0 * um / g.n_bins;
    std::vector<double> expected(g.n_bins);
    const int sub = 32;
    for (int i = 0; i < g.n_bins; ++i) {
        double s = 0.0;
        for (int k = 0; k < sub; ++k)
            s += g.two_slit(-um + (i + (k + 0.5) / sub) * w);
        expected[i] = s / sub * 1e6;  // arbitrary exposure, v is scale-free
    }
    return fit_against(basis, expected).v;
}

std::vector<CurvePoint> visibility_curve(const SlitGeometry& g, const std::vector<double>& chis,
                                         std::uint64_t n_events, std::uint64_t seed) {
    if (chis.empty()) throw std::invalid_argument("visibility_curve: empty chi list");
    std::vector<CurvePoint> out(chis.size());
    const Basis basis = make_basis(g);
    parallel_for(chis.size(), [&](std::size_t i) {
        const auto batch = simulate_batch(g, chis[i], n_events, mix_seed(seed, i));
        const auto est = fit_against(basis, batch.screen.counts);
        out[i] = {chis[i], est.v, est.stderr_v};
    });
    return out;
}

ModelComparison compare_models(const std::vector<CurvePoint>& curve, std::uint64_t n_events_ref) {
    if (curve.size() < 10)
        throw std::invalid_argument("compare_models: need at least 10 curve points");
    double vmin = curve[0].visibility, vmax = curve[0].visibility;
    for (const auto& p : curve) {
        vmin = std::min(vmin, p.visibility);
        vmax = std::max(vmax, p.visibility);
    }
    if (vmax - vmin < 1e-12)
        throw std::invalid_argument("compare_models: degenerate curve (all visibilities equal)");

    const int n = static_cast<int>(curve.size());
    auto weight = [&](int i) {
        const double se = std::max(curve[i].stderr_v, 1e-6);
        return 1.0 / se;
    };

    // linear mixture: V = v0 (1 - chi), weighted linear least squares in v0
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = weight(i), x = 1.0 - curve[i].chi;
        num += w * w * x * curve[i].visibility;
        den += w * w * x * x;
    }
    ModelComparison cmp;
    cmp.v0_linear = (den > 0.0) ? num / den : 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = weight(i) * (cmp.v0_linear * (1.0 - curve[i].chi) - curve[i].visibility);
        cmp.rss_linear += r * r;
    }

    // threshold law via Levenberg-Marquardt in (log v0, logit chi_c, log nu)
    auto resid = [&](const Eigen::VectorXd& t) {
        const double v0 = std::exp(t[0]);
        const double cc = 1.0 / (1.0 + std::exp(-t[1]));
        const double nu = std::exp(t[2]);
        Eigen::VectorXd r(n);
        for (int i = 0; i < n; ++i)
            r[i] = weight(i) *
                   (v0 * std::exp(-std::pow(curve[i].chi / cc, nu)) - curve[i].visibility);
        return r;
    };
    numerics::LmOutcome best;
    best.cost = std::numeric_limits<double>::infinity();
    for (double cc0 : {0.3, 0.5, 0.7, 0.9}) {
        for (double nu0 : {1.0, 3.0, 6.0}) {
            Eigen::VectorXd t0(3);
            t0 << std::log(std::max(vmax, 1e-3)), std::log(cc0 / (1.0 - cc0)), std::log(nu0);
            auto o = numerics::levenberg_marquardt(resid, t0);
            if (o.cost < best.cost) best = o;
        }
    }
    cmp.v0_qti = std::exp(best.theta[0]);
    cmp.chi_c = 1.0 / (1.0 + std::exp(-best.theta[1]));
    cmp.nu = std::exp(best.theta[2]);
    cmp.rss_qti = best.cost;

    cmp.aic_linear = cmp.rss_linear + 2.0 * 1;
    cmp.aic_qti = cmp.rss_qti + 2.0 * 3;
    cmp.delta_aic = cmp.aic_linear - cmp.aic_qti;
    cmp.qti_wins = cmp.delta_aic > 0.0;

    // the chi^2 separation between models scales linearly with events/point
    const double separation = std::abs(cmp.rss_linear - cmp.rss_qti);
    cmp.n_events_for_3sigma =
        (separation > 0.0) ? std::ceil(9.0 * static_cast<double>(n_events_ref) / separation)
                           : std::numeric_limits<double>::infinity();
    return cmp;
}

}  // namespace tlalpan::doubleslit
