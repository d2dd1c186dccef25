#include "tlalpan/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tlalpan::numerics {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrtPi = 1.7724538509055160273;

// Trapezoid step for the Faddeeva sum. pi/kH must exceed the largest Im z
// handed to the trapezoid branch (here |z| < 7, and pi/0.44 = 7.14).
constexpr double kH = 0.44;
constexpr double kCfRadius = 7.0;

// w(z) by midpoint/integer-grid trapezoid sum of (i/pi) Int exp(-t^2)/(z-t) dt
// plus the residue correction 2 exp(-z^2) q/(1-q), q = exp(2 pi i (z-a)/h).
// The grid offset a is chosen so Re z never sits near a sample point, which
// also keeps |1-q| >= 1.
Complex w_trapezoid(Complex z) {
    const double u = z.real();
    const double frac = u / kH - std::round(u / kH);
    const double a = (std::abs(frac) >= 0.25) ? 0.0 : 0.5 * kH;

    Complex s(0.0, 0.0);
    const int nmax = 18;  // exp(-(18*0.44)^2) ~ 6e-28
    for (int n = -nmax; n <= nmax; ++n) {
        const double t = n * kH + a;
        s += std::exp(-t * t) / (z - t);
    }
    const Complex q = std::exp(Complex(0.0, 2.0 * kPi) * (z - a) / kH);
    const Complex corr = -2.0 * std::exp(-z * z) * q / (1.0 - q);
    return Complex(0.0, kH / kPi) * s + corr;
}

// Laplace continued fraction, modified Lentz. Converges in <~20 terms for
// |z| >= 7 anywhere in the closed upper half plane.
Complex w_continued_fraction(Complex z) {
    const double tiny = 1e-300;
    Complex f = (z == 0.0) ? Complex(tiny, 0.0) : z;
    Complex C = f;
    Complex D(0.0, 0.0);
    for (int j = 1; j < 300; ++j) {
        const double aj = -0.5 * j;
        D = z + aj * D;
        if (D == 0.0) D = tiny;
        C = z + aj / C;
        if (C == 0.0) C = tiny;
        D = 1.0 / D;
        const Complex delta = C * D;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return Complex(0.0, 1.0 / kSqrtPi) / f;
}

Complex exp_clamped(Complex e) {
    // exp(e) with the real part clamped so the magnitude stays finite.
    double re = e.real();
    if (re > 709.0) re = 709.0;
    if (re < -745.0) re = -745.0;
    return std::exp(Complex(re, e.imag()));
}

}  // namespace

Complex faddeeva_w(Complex z) {
    if (z.imag() < 0.0)
        throw std::invalid_argument("faddeeva_w: requires Im z >= 0");
    return (std::abs(z) < kCfRadius) ? w_trapezoid(z) : w_continued_fraction(z);
}

Complex cerfc(Complex z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw std::invalid_argument("cerfc: non-finite argument");
    if (z.real() < 0.0) return 2.0 - cerfc(-z);

    const double re_z2 = z.real() * z.real() - z.imag() * z.imag();
    if (re_z2 > 709.0) return Complex(0.0, 0.0);  // underflow saturation

    const Complex w = faddeeva_w(Complex(-z.imag(), z.real()));  // w(iz)
    return exp_clamped(-z * z) * w;
}

// ---------------------------------------------------------------------------

double Histogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), 0.0);
}

bool Histogram::same_alphabet(const Histogram& other) const {
    if (counts.size() != other.counts.size()) return false;
    if (labels.empty() && other.labels.empty()) return true;
    return labels == other.labels;
}

bool Histogram::has_zero_cell() const {
    return std::any_of(counts.begin(), counts.end(), [](double c) { return c == 0.0; });
}

void Histogram::validate() const {
    if (!labels.empty() && labels.size() != counts.size())
        throw std::invalid_argument("Histogram: label/count size mismatch");
    for (double c : counts) {
        if (!(c >= 0.0) || !std::isfinite(c))
            throw std::invalid_argument("Histogram: counts must be finite and non-negative");
    }
}

Histogram jeffreys_smooth(const Histogram& h) {
    Histogram out = h;
    for (double& c : out.counts) c += 0.5;
    return out;
}

double kl_divergence(const Histogram& p, const Histogram& q) {
    if (!p.same_alphabet(q))
        throw std::invalid_argument("kl_divergence: alphabets differ");
    const double tp = p.total(), tq = q.total();
    if (tp <= 0.0 || tq <= 0.0)
        throw std::invalid_argument("kl_divergence: histogram total must be positive");
    double d = 0.0;
    for (std::size_t i = 0; i < p.counts.size(); ++i) {
        const double pi = p.counts[i] / tp;
        if (pi == 0.0) continue;
        const double qi = q.counts[i] / tq;
        if (qi == 0.0)
            throw std::invalid_argument(
                "kl_divergence: q has a zero cell on the support of p; apply smoothing first");
        d += pi * std::log(pi / qi);
    }
    return std::max(d, 0.0);  // guard -0 and tiny negative round-off on p==q
}

double symmetrized_kl(const Histogram& p, const Histogram& q) {
    return 0.5 * (kl_divergence(p, q) + kl_divergence(q, p));
}

// ---------------------------------------------------------------------------

LmOutcome levenberg_marquardt(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
                              const Eigen::VectorXd& theta0, const LmOptions& opts) {
    LmOutcome out;
    out.theta = theta0;
    Eigen::VectorXd r = residuals(out.theta);
    out.cost = r.squaredNorm();
    const int np = static_cast<int>(theta0.size());
    double lambda = 1e-3;
    Eigen::MatrixXd J(r.size(), np);

    for (int it = 0; it < opts.max_iterations; ++it) {
        out.iterations = it + 1;
        for (int k = 0; k < np; ++k) {
            const double dd = 1e-6 * std::max(1.0, std::abs(out.theta[k]));
            Eigen::VectorXd tp = out.theta, tm = out.theta;
            tp[k] += dd;
            tm[k] -= dd;
            J.col(k) = (residuals(tp) - residuals(tm)) / (2.0 * dd);
        }
        const Eigen::VectorXd g = J.transpose() * r;
        const Eigen::MatrixXd A = J.transpose() * J;
        out.jtj = A;

        bool moved = false;
        Eigen::VectorXd delta = Eigen::VectorXd::Zero(np);
        for (int tries = 0; tries < 30; ++tries) {
            Eigen::MatrixXd M = A;
            for (int k = 0; k < np; ++k)
                M(k, k) += lambda * std::max(A(k, k), 1e-10);
            delta = M.ldlt().solve(-g);
            const Eigen::VectorXd tn = out.theta + delta;
            const Eigen::VectorXd rn = residuals(tn);
            const double cn = rn.squaredNorm();
            if (std::isfinite(cn) && cn < out.cost * (1.0 - 1e-15)) {
                out.theta = tn;
                r = rn;
                out.cost = cn;
                lambda = std::max(lambda * 0.3, 1e-13);
                moved = true;
                break;
            }
            lambda *= 3.0;
        }
        if (!moved) {
            out.converged = true;  // stationary: no descent direction improves
            break;
        }
        if (delta.norm() < opts.step_tol || out.cost < opts.cost_tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

namespace {

double eval_family(FitFamily fam, const Eigen::VectorXd& t, double x) {
    switch (fam) {
        case FitFamily::PowerLaw:
            return t[0] * std::pow(x, t[1]);
        case FitFamily::StretchedExp:
            return t[0] * std::exp(-std::pow(x / t[1], t[2]));
        case FitFamily::PiecewiseCritical:
            return (x > t[1]) ? t[0] * std::pow(x - t[1], t[2]) : 0.0;
    }
    return 0.0;
}

}  // namespace

FitResult fit_nonlinear(FitFamily family, const std::vector<double>& xs,
                        const std::vector<double>& ys,
                        const std::map<std::string, double>& init) {
    const std::size_t n = xs.size();
    if (n != ys.size()) throw std::invalid_argument("fit_nonlinear: xs/ys size mismatch");
    const int nparam = 3 - (family == FitFamily::PowerLaw ? 1 : 0);
    if (static_cast<int>(n) < nparam + 2)
        throw std::invalid_argument("fit_nonlinear: need at least 2 more points than parameters");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]))
            throw std::invalid_argument("fit_nonlinear: non-finite input");
    const double xspread = *std::max_element(xs.begin(), xs.end()) -
                           *std::min_element(xs.begin(), xs.end());
    if (xspread == 0.0)
        throw std::invalid_argument("fit_nonlinear: degenerate design, all xs equal");
    if (family != FitFamily::PiecewiseCritical)
        for (double x : xs)
            if (x <= 0.0)
                throw std::invalid_argument("fit_nonlinear: this family requires x > 0");

    double ymax = 0.0;
    for (double y : ys) ymax = std::max(ymax, std::abs(y));
    const double a0 = (ymax > 0) ? ymax : 1.0;

    auto residual_fn = [&](const Eigen::VectorXd& t) {
        Eigen::VectorXd r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = eval_family(family, t, xs[i]) - ys[i];
        return r;
    };

    // 8 log-spaced starting exponents, both signs.
    const double exps[] = {0.125, 0.5, 2.0, 8.0, -0.125, -0.5, -2.0, -8.0};
    std::vector<Eigen::VectorXd> starts;
    auto erase_key = [&](const char* k, double fallback) {
        auto it = init.find(k);
        return it == init.end() ? fallback : it->second;
    };
    if (family == FitFamily::PowerLaw) {
        for (double e : exps) {
            Eigen::VectorXd t(2);
            t << erase_key("A", a0), erase_key("b", e);
            starts.push_back(t);
        }
    } else if (family == FitFamily::StretchedExp) {
        const double xmid = xs[n / 2];
        for (double e : exps) {
            if (e <= 0) continue;
            Eigen::VectorXd t(3);
            t << erase_key("A", a0), erase_key("s", xmid), erase_key("p", e);
            starts.push_back(t);
        }
    } else {
        const double xlo = *std::min_element(xs.begin(), xs.end());
        for (double e : exps) {
            Eigen::VectorXd t(3);
            t << erase_key("A", a0), erase_key("c", xlo - 0.05 * xspread), erase_key("p", e);
            starts.push_back(t);
        }
    }

    LmOutcome best;
    best.cost = std::numeric_limits<double>::infinity();
    for (const auto& s : starts) {
        LmOutcome o = levenberg_marquardt(residual_fn, s);
        if (o.cost < best.cost) best = o;
    }

    FitResult res;
    res.converged = best.converged;
    res.iterations = best.iterations;
    res.residual_norm = std::sqrt(best.cost);
    const char* names2[] = {"A", "b"};
    const char* names_se[] = {"A", "s", "p"};
    const char* names_pc[] = {"A", "c", "p"};
    const char** names = (family == FitFamily::PowerLaw)
                             ? names2
                             : (family == FitFamily::StretchedExp ? names_se : names_pc);
    for (int k = 0; k < nparam; ++k) res.params[names[k]] = best.theta[k];

    // Covariance: sigma^2 (J^T J)^-1 via eigenvalue pseudo-inverse, clamped PSD.
    const int dof = static_cast<int>(n) - nparam;
    const double sigma2 = (dof > 0) ? best.cost / dof : 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(best.jtj);
    Eigen::VectorXd ev = es.eigenvalues();
    Eigen::MatrixXd Vp = es.eigenvectors();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(nparam);
    const double emax = ev.maxCoeff();
    for (int k = 0; k < nparam; ++k)
        if (ev[k] > 1e-12 * std::max(emax, 1.0)) inv[k] = 1.0 / ev[k];
    res.covariance = sigma2 * Vp * inv.asDiagonal() * Vp.transpose();
    return res;
}

}  // namespace tlalpan::numerics
