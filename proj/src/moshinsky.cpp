#include "tlalpan/moshinsky.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <stdexcept>

#include <fftw3.h>

#include "tlalpan/numerics.hpp"

namespace tlalpan::moshinsky {

namespace {
constexpr double kPi = 3.14159265358979323846;
// erfc-argument sign under the principal branch; fixed once against the
// propagation oracle (see the branch calibration test).
constexpr double kSigma = +1.0;
}  // namespace

void ShutterScenario::validate() const {
    if (!(k > 0.0) || !(m > 0.0) || !(hbar > 0.0))
        throw std::invalid_argument("ShutterScenario: k, m, hbar must be positive");
    if (!(tau > 0.0)) throw std::invalid_argument("ShutterScenario: tau must be positive");
    if (!(kappa >= 0.0)) throw std::invalid_argument("ShutterScenario: kappa must be >= 0");
    if (!(kappa_c > 0.0)) throw std::invalid_argument("ShutterScenario: kappa_c must be positive");
    if (!(alpha_width_rel > 0.0))
        throw std::invalid_argument("ShutterScenario: alpha width must be positive");
}

std::vector<double> SpaceTimeGrid::xs() const {
    std::vector<double> v(n_x);
    for (int i = 0; i < n_x; ++i)
        v[i] = x_min + (x_max - x_min) * i / (n_x - 1);
    return v;
}

std::vector<double> SpaceTimeGrid::ts() const {
    std::vector<double> v(n_t);
    for (int i = 0; i < n_t; ++i)
        v[i] = t_min + (t_max - t_min) * i / (n_t - 1);
    return v;
}

void SpaceTimeGrid::validate() const {
    if (n_x < 2 || n_t < 2) throw std::invalid_argument("SpaceTimeGrid: need n_x, n_t >= 2");
    if (!(x_max > x_min) || !(t_max > t_min))
        throw std::invalid_argument("SpaceTimeGrid: empty extent");
}

Complex psi_ret(const ShutterScenario& s, double x, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("psi_ret: requires t > 0");
    const Complex root = std::sqrt(Complex(0.0, 2.0 * s.hbar * t / s.m));
    const Complex arg = kSigma * (x - s.v() * t) / root;
    const Complex phase(0.0, s.k * x - s.omega() * t);
    return 0.5 * std::exp(phase) * numerics::cerfc(arg);
}

Complex psi_adv(const ShutterScenario& s, double x, double t) {
    if (t >= s.tau) return Complex(0.0, 0.0);
    const double ts = t - s.tau;  // negative
    const Complex root = std::sqrt(Complex(0.0, 2.0 * s.hbar * ts / s.m));
    const Complex arg = kSigma * (x - s.v() * ts) / root;
    const Complex phase(0.0, s.k * x - s.omega() * ts);
    return 0.5 * std::exp(phase) * numerics::cerfc(arg);
}

double alpha(const ShutterScenario& s) {
    const double w = s.alpha_width_rel * s.kappa_c;
    const double u = std::clamp((s.kappa - s.kappa_c) / w, -700.0, 700.0);
    return 1.0 / (1.0 + std::exp(u));
}

static WaveField field_impl(const ShutterScenario& s, const SpaceTimeGrid& grid, double a) {
    s.validate();
    grid.validate();
    if (!(grid.t_min > 0.0))
        throw std::invalid_argument("field evaluation requires t > 0 over the whole grid");
    WaveField f;
    f.grid = grid;
    f.scenario = s;
    f.values.resize(static_cast<std::size_t>(grid.n_t) * grid.n_x);
    const auto xs = grid.xs();
    const auto ts = grid.ts();
    for (int it = 0; it < grid.n_t; ++it) {
        for (int ix = 0; ix < grid.n_x; ++ix) {
            Complex v = psi_ret(s, xs[ix], ts[it]);
            if (a != 0.0) v += a * psi_adv(s, xs[ix], ts[it]);
            f.values[static_cast<std::size_t>(it) * grid.n_x + ix] = v;
        }
    }
    return f;
}

WaveField psi_total(const ShutterScenario& s, const SpaceTimeGrid& grid) {
    return field_impl(s, grid, alpha(s));
}

WaveField psi_retarded_field(const ShutterScenario& s, const SpaceTimeGrid& grid) {
    return field_impl(s, grid, 0.0);
}

TemporalProfile temporal_profile(const WaveField& field, double x0) {
    const auto& g = field.grid;
    if (x0 < g.x_min || x0 > g.x_max)
        throw std::invalid_argument("temporal_profile: x0 outside grid");
    if (g.n_t < 8) throw std::invalid_argument("temporal_profile: need at least 8 time samples");

    const double dx = (g.x_max - g.x_min) / (g.n_x - 1);
    const int ix = static_cast<int>(std::lround((x0 - g.x_min) / dx));

    TemporalProfile prof;
    prof.x0 = g.x_min + ix * dx;
    prof.times = g.ts();
    prof.intensity.resize(g.n_t);
    for (int it = 0; it < g.n_t; ++it)
        prof.intensity[it] = std::norm(field.at(it, ix));

    // width-3 boxcar
    std::vector<double> sm(prof.intensity);
    for (int i = 1; i + 1 < g.n_t; ++i)
        sm[i] = (prof.intensity[i - 1] + prof.intensity[i] + prof.intensity[i + 1]) / 3.0;
    sm[0] = (prof.intensity[0] + prof.intensity[1]) / 2.0;
    sm[g.n_t - 1] = (prof.intensity[g.n_t - 2] + prof.intensity[g.n_t - 1]) / 2.0;

    const double peak = *std::max_element(sm.begin(), sm.end());
    const double prom_min = 1e-3 * peak;
    for (int i = 1; i + 1 < g.n_t; ++i) {
        if (!(sm[i] > sm[i - 1] && sm[i] > sm[i + 1])) continue;
        // prominence: drop from the peak to the higher of the two flanking minima
        int l = i;
        while (l > 0 && sm[l - 1] <= sm[l]) --l;
        int r = i;
        while (r + 1 < g.n_t && sm[r + 1] <= sm[r]) ++r;
        const double lmin = *std::min_element(sm.begin() + l, sm.begin() + i + 1);
        const double rmin = *std::min_element(sm.begin() + i, sm.begin() + r + 1);
        if (sm[i] - std::max(lmin, rmin) >= prom_min) {
            prof.fringes.count++;
            prof.fringes.positions.push_back(prof.times[i]);
        }
    }
    const auto [mn, mx] = std::minmax_element(sm.begin(), sm.end());
    prof.fringes.visibility = (*mx + *mn > 0.0) ? (*mx - *mn) / (*mx + *mn) : 0.0;
    return prof;
}

// ---------------------------------------------------------------------------
// Oracle backends. Shared lattice setup: sites x_j = (j - n_left) * dx for
// j = 0..N-1, hard walls just outside, output column ix at j = n_left + ix*stride.

namespace {

struct Lattice {
    double dx = 0.0;
    long n_sites = 0;
    long n_left = 0;
    long stride = 0;  // sites between output columns
};

std::vector<Complex> beam_initial_state(const Lattice& lat, const ShutterScenario& s,
                                        const OracleOptions& opts) {
    std::vector<Complex> psi(lat.n_sites, Complex(0.0, 0.0));
    for (long j = 0; j < lat.n_left; ++j) {
        const double x = (j - lat.n_left) * lat.dx;
        const double ramp =
            0.5 * (1.0 + std::erf((x - opts.beam_ramp_center) / opts.beam_ramp_width));
        psi[j] = ramp * std::exp(Complex(0.0, s.k * x));
    }
    psi[lat.n_left] = Complex(0.5, 0.0);  // midpoint value at the shutter site
    return psi;
}

double lattice_norm2(const std::vector<Complex>& v) {
    double n = 0.0;
    for (const auto& z : v) n += std::norm(z);
    return n;
}

// In-place iterative radix-2 complex FFT, sign=+1 for exp(+2 pi i k n / N).
void fft_pow2(std::vector<Complex>& a, int sign) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * kPi / static_cast<double>(len);
        const Complex wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            Complex w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const Complex u = a[i + k];
                const Complex t = a[i + k + len / 2] * w;
                a[i + k] = u + t;
                a[i + k + len / 2] = u - t;
                w *= wl;
            }
        }
    }
}

struct FftwRealBuf {
    double* p = nullptr;
    explicit FftwRealBuf(std::size_t n) : p(static_cast<double*>(fftw_malloc(sizeof(double) * n))) {
        if (!p) throw std::bad_alloc();
    }
    ~FftwRealBuf() { fftw_free(p); }
    FftwRealBuf(const FftwRealBuf&) = delete;
    FftwRealBuf& operator=(const FftwRealBuf&) = delete;
};

// Exact propagation in the sine eigenbasis of the hard-wall lattice.
// Output columns are a fixed-stride subset of sites, so each output row is
// synthesized by folding the odd-extended spectrum into an M'-point DFT
// (M' = 2(N+1)/stride) instead of a full inverse transform.
OracleRun run_sine(const ShutterScenario& s, const SpaceTimeGrid& grid,
                   const ShutterSchedule& sched, const OracleOptions& opts) {
    if (!sched.opens || sched.open_time != 0.0 || std::isfinite(sched.close_time))
        throw std::invalid_argument(
            "sine oracle supports only the open-at-t=0 schedule; use the Crank-Nicolson backend");

    const auto xs = grid.xs();
    const auto ts = grid.ts();
    const double h_out = xs[1] - xs[0];
    const long P = 1L << opts.sine_log2_sites;  // n_sites + 1
    const long N = P - 1;
    const long stride = opts.sine_stride;
    if ((2 * P) % stride != 0)
        throw std::invalid_argument("sine oracle: stride must divide 2^(log2_sites+1)");

    Lattice lat;
    lat.dx = h_out / static_cast<double>(stride);
    lat.n_sites = N;
    lat.stride = stride;
    lat.n_left = std::lround(opts.left_extent / lat.dx);
    if (grid.x_min != 0.0)
        throw std::invalid_argument("sine oracle expects the output grid to start at x = 0");
    if (lat.n_left + static_cast<long>(grid.n_x - 1) * stride >= N)
        throw std::invalid_argument("sine oracle: output grid exceeds the lattice");

    const double t_hop = s.hbar * s.hbar / (2.0 * s.m * lat.dx * lat.dx);

    const auto psi0 = beam_initial_state(lat, s, opts);
    const double norm0 = lattice_norm2(psi0);

    // forward DST-I of real and imaginary parts
    std::vector<Complex> coeff(N);
    {
        FftwRealBuf in(N), out(N);
        fftw_plan plan = fftw_plan_r2r_1d(static_cast<int>(N), in.p, out.p, FFTW_RODFT00,
                                          FFTW_ESTIMATE);
        for (long j = 0; j < N; ++j) in.p[j] = psi0[j].real();
        fftw_execute(plan);
        for (long q = 0; q < N; ++q) coeff[q] = Complex(out.p[q], 0.0);
        for (long j = 0; j < N; ++j) in.p[j] = psi0[j].imag();
        fftw_execute(plan);
        for (long q = 0; q < N; ++q) coeff[q] += Complex(0.0, out.p[q]);
        fftw_destroy_plan(plan);
    }
    // RODFT00 gives Y_q = 2 sum_j psi_j sin(pi q (j+1)/P); the synthesis is
    // psi_j = (1/P) sum_q Y_q sin(pi q (j+1)/P), so carry b_q = Y_q / P.
    for (auto& c : coeff) c /= static_cast<double>(P);
    if (opts.cutoff_k_hi > 0.0) {
        for (long q = 1; q <= N; ++q) {
            const double k_lat = kPi * q / (static_cast<double>(P) * lat.dx);
            if (k_lat <= opts.cutoff_k_lo) continue;
            if (k_lat >= opts.cutoff_k_hi) {
                coeff[q - 1] = 0.0;
            } else {
                const double u01 = (k_lat - opts.cutoff_k_lo) / (opts.cutoff_k_hi - opts.cutoff_k_lo);
                coeff[q - 1] *= 0.5 * (1.0 + std::cos(kPi * u01));
            }
        }
    }

    // time phases: rows must be uniform for the recurrence
    const double dt_row = ts[1] - ts[0];
    for (int i = 2; i < grid.n_t; ++i)
        if (std::abs((ts[i] - ts[i - 1]) - dt_row) > 1e-9 * dt_row)
            throw std::invalid_argument("sine oracle requires a uniform output time grid");
    if (std::abs(ts[0] - dt_row) > 1e-9 * dt_row)
        throw std::invalid_argument("sine oracle requires t_min == dt (grid (0, t_max])");

    std::vector<Complex> u(N);  // per-step phase exp(-i E_q dt / hbar)
    for (long q = 0; q < N; ++q) {
        const double eq = 2.0 * t_hop * (1.0 - std::cos(kPi * (q + 1) / static_cast<double>(P)));
        const double ph = -eq * dt_row / s.hbar;
        u[q] = Complex(std::cos(ph), std::sin(ph));
    }

    const long Mp = 2 * P / stride;        // fold length
    const long o = lat.n_left + 1;         // DFT index offset of column 0
    const double ang0 = 2.0 * kPi * static_cast<double>(o) / (2.0 * static_cast<double>(P));
    const Complex tw_step(std::cos(ang0), std::sin(ang0));

    OracleRun run;
    run.field.grid = grid;
    run.field.scenario = s;
    run.field.values.resize(static_cast<std::size_t>(grid.n_t) * grid.n_x);

    std::vector<Complex> H(Mp);
    std::vector<Complex> b = std::move(coeff);
    for (int row = 0; row < grid.n_t; ++row) {
        std::fill(H.begin(), H.end(), Complex(0.0, 0.0));
        Complex tw(1.0, 0.0);
        for (long q = 1; q <= N; ++q) {
            if ((q & 8191) == 1) {  // periodic resync of the twiddle recurrence
                const double a = ang0 * static_cast<double>(q);
                tw = Complex(std::cos(a), std::sin(a));
            } else {
                tw *= tw_step;
            }
            Complex& bq = b[q - 1];
            bq *= u[q - 1];                     // advance one output step
            const Complex val = bq * tw;
            const long k = q % Mp;
            H[k] += val;
            const long km = (Mp - k) % Mp;
            H[km] -= bq * std::conj(tw);
        }
        fft_pow2(H, +1);
        for (int col = 0; col < grid.n_x; ++col) {
            // psi = F / (2 i); F accumulated b_q already carry the 1/P DST scale
            run.field.values[static_cast<std::size_t>(row) * grid.n_x + col] =
                H[col] / Complex(0.0, 2.0);
        }
    }

    // Parseval drift of the propagated spectrum (phases are unit modulus, so
    // this measures pure round-off).
    double norm_end = 0.0;
    for (const auto& z : b) norm_end += std::norm(z);
    norm_end *= static_cast<double>(P) / 2.0;  // DST-I Parseval: sum|psi|^2 = sum|c|^2/(2P), b=c/P
    run.norm_drift = std::abs(norm_end / norm0 - 1.0);
    return run;
}

OracleRun run_crank_nicolson(const ShutterScenario& s, const SpaceTimeGrid& grid,
                             const ShutterSchedule& sched, const OracleOptions& opts) {
    const auto xs = grid.xs();
    const auto ts = grid.ts();
    const double h_out = xs[1] - xs[0];

    // Stability heuristic on the caller's grid, per the oracle contract.
    const double dt_out = ts.size() > 1 ? ts[1] - ts[0] : ts[0];
    const double dt_out_max = s.m * h_out * h_out / s.hbar;
    if (dt_out > dt_out_max)
        throw std::invalid_argument("crank-nicolson: grid violates dt <= m dx^2/hbar; required dt <= " +
                                    std::to_string(dt_out_max));

    Lattice lat;
    lat.stride = opts.cn_refine;
    lat.dx = h_out / opts.cn_refine;
    lat.n_left = std::lround(opts.cn_left_extent / lat.dx);
    const long n_right = std::lround((grid.x_max + opts.cn_right_pad) / lat.dx);
    lat.n_sites = lat.n_left + n_right + 1;

    const double dt_max = s.m * lat.dx * lat.dx / s.hbar;  // same heuristic, internal grid
    const double t_hop = s.hbar * s.hbar / (2.0 * s.m * lat.dx * lat.dx);

    std::vector<Complex> psi = sched.opens && sched.open_time == 0.0
                                   ? beam_initial_state(lat, s, opts)
                                   : [&] {
                                         auto p = beam_initial_state(lat, s, opts);
                                         p[lat.n_left] = 0.0;
                                         return p;
                                     }();
    const double norm0 = lattice_norm2(psi);

    const long n = lat.n_sites;
    const long wall = lat.n_left;  // site index of x = 0
    std::vector<Complex> diag(n), lower(n), upper(n), rhs(n), cp(n), dp(n);

    auto step = [&](double dt, bool open) {
        const Complex r(0.0, dt / (2.0 * s.hbar));
        // H: diag 2t, off-diag -t; a closed shutter cuts the hop across x=0
        for (long j = 0; j < n; ++j) {
            diag[j] = 1.0 + r * (2.0 * t_hop);
            lower[j] = -r * t_hop;
            upper[j] = -r * t_hop;
        }
        if (!open) {
            // decouple the wall site from both sides
            upper[wall - 1] = 0.0;
            lower[wall] = 0.0;
            upper[wall] = 0.0;
            lower[wall + 1] = 0.0;
        }
        // rhs = (1 - r H) psi
        for (long j = 0; j < n; ++j) {
            Complex acc = (1.0 - r * (2.0 * t_hop)) * psi[j];
            if (j > 0 && !(j == wall && !open) && !(j == wall + 1 && !open))
                acc += r * t_hop * psi[j - 1];
            if (j + 1 < n && !(j == wall && !open) && !(j == wall - 1 && !open))
                acc += r * t_hop * psi[j + 1];
            rhs[j] = acc;
        }
        // Thomas solve
        cp[0] = upper[0] / diag[0];
        dp[0] = rhs[0] / diag[0];
        for (long j = 1; j < n; ++j) {
            const Complex m_ = diag[j] - lower[j] * cp[j - 1];
            cp[j] = upper[j] / m_;
            dp[j] = (rhs[j] - lower[j] * dp[j - 1]) / m_;
        }
        psi[n - 1] = dp[n - 1];
        for (long j = n - 2; j >= 0; --j) psi[j] = dp[j] - cp[j] * psi[j + 1];
    };

    OracleRun run;
    run.field.grid = grid;
    run.field.scenario = s;
    run.field.values.resize(static_cast<std::size_t>(grid.n_t) * grid.n_x);

    double t_now = 0.0;
    for (int row = 0; row < grid.n_t; ++row) {
        const double t_target = ts[row];
        while (t_now < t_target - 1e-12) {
            double dt = std::min(dt_max, t_target - t_now);
            bool open = sched.opens && t_now >= sched.open_time && t_now < sched.close_time;
            // do not step across a schedule switch
            if (open && std::isfinite(sched.close_time) && t_now + dt > sched.close_time)
                dt = sched.close_time - t_now;
            if (!open && sched.opens && t_now < sched.open_time && t_now + dt > sched.open_time)
                dt = sched.open_time - t_now;
            if (dt > dt_max)
                throw std::invalid_argument("crank-nicolson: dt exceeds m dx^2/hbar; required dt <= " +
                                            std::to_string(dt_max));
            step(dt, open);
            t_now += dt;
        }
        for (int col = 0; col < grid.n_x; ++col)
            run.field.values[static_cast<std::size_t>(row) * grid.n_x + col] =
                psi[lat.n_left + static_cast<long>(col) * lat.stride];
    }
    run.norm_drift = std::abs(lattice_norm2(psi) / norm0 - 1.0);
    return run;
}

}  // namespace

OracleRun oracle_propagate(const ShutterScenario& s, const SpaceTimeGrid& grid,
                           const ShutterSchedule& schedule, const OracleOptions& opts) {
    s.validate();
    grid.validate();
    if (grid.n_x < 2) throw std::invalid_argument("oracle: need n_x >= 2");
    switch (opts.method) {
        case OracleMethod::SineExact:
            return run_sine(s, grid, schedule, opts);
        case OracleMethod::CrankNicolson:
            return run_crank_nicolson(s, grid, schedule, opts);
    }
    throw std::logic_error("oracle: unknown method");
}

}  // namespace tlalpan::moshinsky
