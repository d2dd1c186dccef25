#include "tlalpan/echo.hpp"

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "tlalpan/io_util.hpp"

namespace tlalpan::echo {

namespace {

bool inside(const Geometry& g, double x, double y) {
    if (std::holds_alternative<Rectangle>(g)) {
        const auto& r = std::get<Rectangle>(g);
        return x > 0.0 && x < r.width && y > 0.0 && y < r.height;
    }
    const auto& s = std::get<Stadium>(g);
    const double h = s.rect_height();
    const double w = s.straight + 2.0 * s.radius;
    const double xc = x - w / 2.0, yc = y - h / 2.0;
    if (std::abs(yc) >= h / 2.0 || x <= 0.0 || x >= w) return false;
    if (std::abs(xc) <= s.straight / 2.0) return true;
    if (s.radius <= 0.0) return false;
    const double dx = std::abs(xc) - s.straight / 2.0;
    return dx * dx + yc * yc < s.radius * s.radius;
}

void bounding_box(const Geometry& g, double& w, double& h) {
    if (std::holds_alternative<Rectangle>(g)) {
        w = std::get<Rectangle>(g).width;
        h = std::get<Rectangle>(g).height;
    } else {
        const auto& s = std::get<Stadium>(g);
        w = s.straight + 2.0 * s.radius;
        h = s.rect_height();
    }
}

}  // namespace

CavityLattice build_cavity(const Geometry& geometry, double spacing) {
    if (!(spacing > 0.0)) throw std::invalid_argument("build_cavity: spacing must be positive");
    double w = 0.0, h = 0.0;
    bounding_box(geometry, w, h);
    if (!(w > 0.0) || !(h > 0.0))
        throw std::invalid_argument("build_cavity: geometry has empty extent");

    const int nx = static_cast<int>(std::floor(w / spacing));
    const int ny = static_cast<int>(std::floor(h / spacing));
    std::map<std::pair<int, int>, int> index;
    std::vector<std::pair<double, double>> pts;
    for (int i = 1; i <= nx; ++i)
        for (int j = 1; j <= ny; ++j) {
            const double x = i * spacing, y = j * spacing;
            if (inside(geometry, x, y)) {
                index[{i, j}] = static_cast<int>(pts.size());
                pts.emplace_back(x, y);
            }
        }
    const int n = static_cast<int>(pts.size());
    if (n < 100)
        throw std::invalid_argument("build_cavity: spacing too coarse, need >= 100 interior sites");

    CavityLattice c;
    c.geometry = geometry;
    c.spacing = spacing;
    c.sites.resize(n, 2);
    for (int a = 0; a < n; ++a) {
        c.sites(a, 0) = pts[a].first;
        c.sites(a, 1) = pts[a].second;
    }
    c.center_x = w / 2.0;
    c.center_y = h / 2.0;

    const double t = c.hop();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(5 * n));
    for (const auto& [ij, a] : index) {
        trip.emplace_back(a, a, 4.0 * t);
        const int di[4] = {1, -1, 0, 0};
        const int dj[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            const auto it = index.find({ij.first + di[k], ij.second + dj[k]});
            if (it != index.end()) trip.emplace_back(a, it->second, -t);
        }
    }
    c.hamiltonian.resize(n, n);
    c.hamiltonian.setFromTriplets(trip.begin(), trip.end());
    return c;
}

Eigen::VectorXcd gaussian_packet(const CavityLattice& c, double width_spacings,
                                 double band_fraction) {
    const double sigma = width_spacings * c.spacing;
    const double k = band_fraction * M_PI / c.spacing;
    const int n = c.n_sites();
    Eigen::VectorXcd psi(n);
    for (int a = 0; a < n; ++a) {
        const double dx = c.sites(a, 0) - c.center_x;
        const double dy = c.sites(a, 1) - c.center_y;
        const double r2 = dx * dx + dy * dy;
        psi[a] = std::polar(std::exp(-r2 / (4.0 * sigma * sigma)), k * c.sites(a, 0));
    }
    const double nrm = psi.norm();
    if (nrm == 0.0) throw std::runtime_error("gaussian_packet: empty packet");
    return psi / nrm;
}

Eigen::VectorXd smooth_disorder(const CavityLattice& c, std::uint64_t seed, double corr_spacings) {
    const int n = c.n_sites();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd g(n);
    for (int a = 0; a < n; ++a) g[a] = gauss(rng);

    const double ell = corr_spacings * c.spacing;
    const double cut2 = 16.0 * ell * ell;  // kernel support cutoff
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    for (int a = 0; a < n; ++a) {
        double acc = 0.0;
        for (int b = 0; b < n; ++b) {
            const double dx = c.sites(a, 0) - c.sites(b, 0);
            const double dy = c.sites(a, 1) - c.sites(b, 1);
            const double r2 = dx * dx + dy * dy;
            if (r2 > cut2) continue;
            acc += std::exp(-r2 / (2.0 * ell * ell)) * g[b];
        }
        d[a] = acc;
    }
    const double mean = d.mean();
    d.array() -= mean;
    const double sd = std::sqrt(d.squaredNorm() / n);
    if (sd > 0.0) d /= sd;
    return d;
}

namespace {

constexpr int kDenseLimit = 3000;

struct SpectralProp {
    Eigen::MatrixXd vecs;
    Eigen::VectorXd vals;
    Eigen::VectorXcd coef;  // V^T psi0

    Eigen::VectorXcd at(double t, double hbar) const {
        Eigen::VectorXcd phased(coef.size());
        for (int q = 0; q < coef.size(); ++q)
            phased[q] = coef[q] * std::polar(1.0, -vals[q] * t / hbar);
        return vecs * phased;
    }
};

SpectralProp make_spectral(const Eigen::MatrixXd& h, const Eigen::VectorXcd& psi0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("echo: eigendecomposition failed");
    SpectralProp p;
    p.vecs = es.eigenvectors();
    p.vals = es.eigenvalues();
    p.coef = p.vecs.transpose() * psi0;
    return p;
}

// Chebyshev propagation for lattices too large for dense eigensolvers.
Eigen::VectorXcd chebyshev_step(const Eigen::SparseMatrix<double>& h, const Eigen::VectorXcd& psi,
                                double dt, double hbar, double e_min, double e_max) {
    const double a = (e_max - e_min) / 2.0;
    const double b = (e_max + e_min) / 2.0;
    const double r = a * dt / hbar;
    const int nmax = static_cast<int>(r + 50 + 10.0 * std::cbrt(r + 1.0));

    Eigen::VectorXcd t0 = psi;
    Eigen::VectorXcd t1 = (h * psi - b * psi) / a;
    const std::complex<double> mi(0.0, -1.0);
    Eigen::VectorXcd acc = std::complex<double>(std::cyl_bessel_j(0, r), 0.0) * t0;
    std::complex<double> ph = mi;
    for (int nn = 1; nn <= nmax; ++nn) {
        const double jn = std::cyl_bessel_j(nn, r);
        acc += 2.0 * jn * ph * t1;
        ph *= mi;
        if (nn < nmax) {
            Eigen::VectorXcd t2 = 2.0 * ((h * t1 - b * t1) / a) - t0;
            t0.swap(t1);
            t1.swap(t2);
        }
        if (std::abs(jn) < 1e-18 && nn > r) break;
    }
    return acc * std::polar(1.0, -b * dt / hbar);
}

}  // namespace

std::vector<double> echo_amplitude(const Eigen::MatrixXd& h, const Eigen::MatrixXd& h_pert,
                                   const Eigen::VectorXcd& psi0, const std::vector<double>& times,
                                   double hbar) {
    if (h.rows() != h.cols() || h_pert.rows() != h_pert.cols() || h.rows() != h_pert.rows())
        throw std::invalid_argument("echo_amplitude: matrices must be square and same size");
    if (psi0.size() != h.rows())
        throw std::invalid_argument("echo_amplitude: state dimension mismatch");
    if (std::abs(psi0.squaredNorm() - 1.0) > 1e-8)
        throw std::invalid_argument("echo_amplitude: state not normalized");

    std::vector<double> out(times.size());
    if (h.rows() <= kDenseLimit) {
        const SpectralProp fw = make_spectral(h, psi0);
        const SpectralProp bw = make_spectral(h_pert, psi0);
        for (std::size_t i = 0; i < times.size(); ++i) {
            const Eigen::VectorXcd pf = fw.at(times[i], hbar);
            const Eigen::VectorXcd pb = bw.at(times[i], hbar);
            out[i] = std::abs(pb.dot(pf));  // dot conjugates the left factor
        }
        return out;
    }
    // large lattice: Chebyshev stepping through the sorted time list
    Eigen::SparseMatrix<double> hs = h.sparseView();
    Eigen::SparseMatrix<double> hps = h_pert.sparseView();
    const double emax = 8.0 * h.diagonal().maxCoeff();  // Gershgorin-style bound
    Eigen::VectorXcd pf = psi0, pb = psi0;
    double t_now = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double dt = times[i] - t_now;
        if (dt < 0.0) throw std::invalid_argument("echo_amplitude: times must be non-decreasing");
        if (dt > 0.0) {
            pf = chebyshev_step(hs, pf, dt, hbar, 0.0, emax);
            pb = chebyshev_step(hps, pb, dt, hbar, 0.0, emax);
            t_now = times[i];
        }
        out[i] = std::abs(pb.dot(pf));
    }
    return out;
}

DecayFit fit_decay_rate(const std::vector<double>& times, const std::vector<double>& fidelity) {
    DecayFit fit;
    constexpr double f_hi = 0.95, f_lo = 0.2;
    std::vector<double> ts, ls;
    bool started = false;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double f = fidelity[i];
        if (!started && f < f_hi) started = true;
        if (started) {
            if (f < f_lo) break;
            if (f > 0.0 && f < f_hi) {
                ts.push_back(times[i]);
                ls.push_back(-std::log(f));
            }
        }
    }
    if (ts.size() < 4) {
        fit.no_decay = true;
        return fit;
    }
    fit.points = static_cast<int>(ts.size());
    fit.window_t_lo = ts.front();
    fit.window_t_hi = ts.back();
    // straight line with intercept; slope is the decay rate
    const double n = static_cast<double>(ts.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        sx += ts[i];
        sy += ls[i];
        sxx += ts[i] * ts[i];
        sxy += ts[i] * ls[i];
    }
    const double den = n * sxx - sx * sx;
    if (den <= 0.0) {
        fit.no_decay = true;
        return fit;
    }
    fit.rate = (n * sxy - sx * sy) / den;
    const double icpt = (sy - fit.rate * sx) / n;
    double ssr = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double r = ls[i] - (icpt + fit.rate * ts[i]);
        ssr += r * r;
    }
    const double sigma2 = (ts.size() > 2) ? ssr / (n - 2.0) : 0.0;
    fit.rate_stderr = std::sqrt(sigma2 * n / den);
    return fit;
}

EchoResult loschmidt_echo(const CavityLattice& c, const Eigen::VectorXcd& psi0, double epsilon,
                          const std::vector<double>& times, std::uint64_t disorder_seed) {
    if (psi0.size() != c.n_sites())
        throw std::invalid_argument("loschmidt_echo: state/lattice dimension mismatch");
    if (epsilon < 0.0) throw std::invalid_argument("loschmidt_echo: epsilon must be >= 0");

    EchoResult res;
    res.times = times;
    res.epsilon = epsilon;
    if (epsilon == 0.0) {
        res.fidelity.assign(times.size(), 1.0);
        res.decay.no_decay = true;
        return res;
    }
    const Eigen::MatrixXd h = Eigen::MatrixXd(c.hamiltonian);
    const Eigen::VectorXd delta = smooth_disorder(c, disorder_seed);
    Eigen::MatrixXd hp = h;
    hp.diagonal() += epsilon * delta;
    const auto amp = echo_amplitude(h, hp, psi0, times, c.hbar);
    res.fidelity.resize(amp.size());
    for (std::size_t i = 0; i < amp.size(); ++i) res.fidelity[i] = amp[i] * amp[i];
    res.decay = fit_decay_rate(res.times, res.fidelity);
    return res;
}

GeometryComparison compare_geometries(const EchoResult& regular, const EchoResult& chaotic) {
    GeometryComparison cmp;
    cmp.regular = regular.decay;
    cmp.chaotic = chaotic.decay;
    if (regular.decay.no_decay || chaotic.decay.no_decay) {
        cmp.no_decay = true;
        return cmp;
    }
    const bool overlap = regular.decay.window_t_lo <= chaotic.decay.window_t_hi &&
                         chaotic.decay.window_t_lo <= regular.decay.window_t_hi;
    if (!overlap)
        throw std::domain_error("compare_geometries: non-overlapping fit windows");
    if (regular.decay.rate <= 0.0)
        throw std::domain_error("compare_geometries: regular decay rate is not positive");
    cmp.ratio = chaotic.decay.rate / regular.decay.rate;
    const double rel2 = std::pow(chaotic.decay.rate_stderr / chaotic.decay.rate, 2) +
                        std::pow(regular.decay.rate_stderr / regular.decay.rate, 2);
    cmp.ratio_stderr = cmp.ratio * std::sqrt(rel2);
    cmp.chaotic_faster = cmp.ratio - cmp.ratio_stderr > 1.0;
    return cmp;
}

VisibilityTrace coupled_slit_visibility(const CavityLattice& c, const Eigen::VectorXcd& marker0,
                                        double epsilon, const std::vector<double>& times,
                                        std::uint64_t disorder_seed) {
    if (marker0.size() != c.n_sites())
        throw std::invalid_argument("coupled_slit_visibility: marker/lattice dimension mismatch");
    VisibilityTrace out;
    out.times = times;
    if (epsilon == 0.0) {
        out.visibility.assign(times.size(), 1.0);
        out.time_average = 1.0;
        return out;
    }
    const Eigen::MatrixXd h = Eigen::MatrixXd(c.hamiltonian);
    const Eigen::VectorXd delta = smooth_disorder(c, disorder_seed);
    Eigen::MatrixXd hp = h;
    hp.diagonal() += epsilon * delta;
    out.visibility = echo_amplitude(h, hp, marker0, times, c.hbar);

    double sum = 0.0;
    bool dropped = false;
    bool below = false;
    for (std::size_t i = 0; i < out.visibility.size(); ++i) {
        const double v = out.visibility[i];
        sum += v;
        if (!dropped && v < 0.5) {
            dropped = true;
            below = true;
        } else if (dropped) {
            if (below && v >= 0.5) {
                out.recurrences_above_half++;
                below = false;
            } else if (!below && v < 0.5) {
                below = true;
            }
            out.max_recurrence = std::max(out.max_recurrence, v);
        }
    }
    out.time_average = out.visibility.empty() ? 0.0 : sum / out.visibility.size();
    return out;
}

}  // namespace tlalpan::echo
