#pragma once

#include <complex>
#include <limits>
#include <vector>

namespace tlalpan::moshinsky {

using Complex = std::complex<double>;

/// Parameters of the shutter problem. omega and v are always derived from
/// (k, m, hbar), never stored.
struct ShutterScenario {
    double k = 1.0;        // wavenumber
    double m = 1.0;        // mass
    double hbar = 1.0;     // action constant
    double tau = 15.0;     // shutter-closing time of the future boundary
    double kappa = 0.0;    // amplification intensity
    double kappa_c = 1.0;  // critical amplification
    double alpha_width_rel = 0.05;  // logistic width as a fraction of kappa_c

    double omega() const { return hbar * k * k / (2.0 * m); }
    double v() const { return hbar * k / m; }
    void validate() const;  // throws on non-positive k, m, hbar, tau, kappa_c
};

struct SpaceTimeGrid {
    double x_min = 0.0, x_max = 40.0;
    int n_x = 64;
    double t_min = 0.3125, t_max = 20.0;
    int n_t = 64;

    std::vector<double> xs() const;
    std::vector<double> ts() const;
    void validate() const;
};

struct WaveField {
    SpaceTimeGrid grid;
    ShutterScenario scenario;
    // row-major, values[it * n_x + ix]
    std::vector<Complex> values;

    Complex at(int it, int ix) const { return values[static_cast<std::size_t>(it) * grid.n_x + ix]; }
};

/**
 * Retarded (delayed) shutter solution
 *
 *   psi_ret(x,t) = 1/2 exp[i(kx - w t)] erfc( (x - v t) / sqrt(2 i hbar t / m) )
 *
 * with the principal square-root branch. The sign of the erfc argument is
 * the one that recovers the plane wave behind the front and vacuum ahead of
 * it; it is pinned by the propagation-oracle calibration test.
 */
Complex psi_ret(const ShutterScenario& s, double x, double t);

/// Advanced component, valid for t < tau and defined as 0 for t >= tau.
Complex psi_adv(const ShutterScenario& s, double x, double t);

/// Amplification weight alpha(kappa) = 1 / (1 + exp[(kappa - kappa_c)/w]),
/// w = alpha_width_rel * kappa_c.
double alpha(const ShutterScenario& s);

/// Pointwise psi_ret + alpha * psi_adv over the grid. Reduces exactly to the
/// retarded field when alpha == 0.
WaveField psi_total(const ShutterScenario& s, const SpaceTimeGrid& grid);

/// Retarded-only field (alpha forced to 0), same grid conventions.
WaveField psi_retarded_field(const ShutterScenario& s, const SpaceTimeGrid& grid);

struct FringeSummary {
    int count = 0;                   // local maxima after smoothing
    std::vector<double> positions;   // times of the maxima
    double visibility = 0.0;         // (Imax - Imin) / (Imax + Imin)
};

struct TemporalProfile {
    double x0 = 0.0;
    std::vector<double> times;
    std::vector<double> intensity;   // raw |psi(x0, t)|^2
    FringeSummary fringes;
};

/**
 * Intensity versus time at the grid column nearest x0. Extrema are located
 * by a three-point comparison after width-3 boxcar smoothing; maxima below
 * 1e-3 of the peak prominence are ignored. Throws if x0 lies outside the
 * grid or fewer than 8 time samples are available.
 */
TemporalProfile temporal_profile(const WaveField& field, double x0);

// ---------------------------------------------------------------------------
// Independent propagation oracle.

struct ShutterSchedule {
    bool opens = true;          // false: shutter stays closed forever
    double open_time = 0.0;     // only 0 is supported by the sine backend
    double close_time = std::numeric_limits<double>::infinity();
};

enum class OracleMethod {
    SineExact,      // exact lattice propagation in the hard-wall sine basis
    CrankNicolson,  // unitary time stepping; subject to the dt <= m dx^2/hbar heuristic
};

struct OracleOptions {
    OracleMethod method = OracleMethod::SineExact;
    // CN internal resolution: lattice spacing = (output dx) / cn_refine.
    int cn_refine = 24;
    double cn_right_pad = 40.0;
    double cn_left_extent = 130.0;
    // Sine backend lattice: log2 of the number of sites + 1; spacing is
    // (output dx) / sine_stride and the output columns sit on lattice points.
    int sine_log2_sites = 23;
    int sine_stride = 2048;
    // Incident beam: unit plane wave for x < 0 with a smooth erf ramp far to
    // the left, so the finite beam is indistinguishable from a half-infinite
    // one over the simulated horizon.
    double beam_ramp_center = -100.0;
    double beam_ramp_width = 8.0;
    double left_extent = 1240.0;
    // Raised-cosine spectral cutoff (sine backend). Modes above cutoff_k_hi
    // never influence the output window within the horizon but do produce
    // wall-reflection ghosts; removing them keeps the box size modest.
    // Set cutoff_k_hi <= 0 to disable.
    double cutoff_k_lo = 129.0;
    double cutoff_k_hi = 133.0;
};

struct OracleRun {
    WaveField field;
    double norm_drift = 0.0;  // |norm(t_end)/norm(0) - 1|
};

/**
 * Propagates the shutter problem on a 1-D hard-wall lattice that embeds the
 * output grid, with the beam initially filling x < 0 and vacuum beyond, and
 * samples the field on the requested grid. Both backends are independent of
 * the closed-form solution.
 *
 * The Crank-Nicolson backend enforces dt <= m dx^2 / hbar on its internal
 * grid and supports open/close schedules. The sine backend evolves the
 * lattice eigenbasis exactly (no time-step error; norm conserved to
 * round-off) and requires the plain open-at-t=0 schedule.
 */
OracleRun oracle_propagate(const ShutterScenario& s, const SpaceTimeGrid& grid,
                           const ShutterSchedule& schedule, const OracleOptions& opts = {});

}  // namespace tlalpan::moshinsky
