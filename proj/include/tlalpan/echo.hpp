#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace tlalpan::echo {

struct Rectangle {
    double width = 1.8;
    double height = 1.0;
};

/// Bunimovich stadium: rectangle `straight x height` capped by semicircles of
/// the given radius. The proper stadium has height = 2*radius (the default);
/// radius = 0 with an explicit height degenerates to the bare rectangle.
struct Stadium {
    double straight = 1.0;
    double radius = 0.5;
    std::optional<double> height;  // defaults to 2*radius

    double rect_height() const { return height.value_or(2.0 * radius); }
};

using Geometry = std::variant<Rectangle, Stadium>;

/// Hard-wall tight-binding lattice over the interior of a billiard.
struct CavityLattice {
    Geometry geometry;
    double spacing = 0.0;
    double hbar = 1.0, mass = 1.0;
    Eigen::MatrixX2d sites;                 // positions, one row per site
    Eigen::SparseMatrix<double> hamiltonian;  // nearest-neighbor Laplacian
    double center_x = 0.0, center_y = 0.0;

    int n_sites() const { return static_cast<int>(sites.rows()); }
    double hop() const { return hbar * hbar / (2.0 * mass * spacing * spacing); }
};

/// Discretizes the geometry; throws if fewer than 100 interior sites result.
CavityLattice build_cavity(const Geometry& geometry, double spacing);

/// Gaussian wave packet, |psi| ~ exp(-r^2 / (4 sigma^2)), sigma =
/// width_spacings * lattice spacing, momentum k = band_fraction * pi/spacing
/// along +x, centered on the cavity centroid. Normalized.
Eigen::VectorXcd gaussian_packet(const CavityLattice& c, double width_spacings = 4.0,
                                 double band_fraction = 0.35);

/// Smooth random on-site potential: i.i.d. Gaussians smoothed with a kernel
/// of correlation length 3 spacings, standardized to mean 0, variance 1.
Eigen::VectorXd smooth_disorder(const CavityLattice& c, std::uint64_t seed,
                                double corr_spacings = 3.0);

/// |<psi0| exp(+i Hp t) exp(-i H t) |psi0>| for each time (echo amplitude;
/// fidelity is its square). Uses full eigendecomposition up to
/// 3000 sites and Chebyshev propagation beyond.
std::vector<double> echo_amplitude(const Eigen::MatrixXd& h, const Eigen::MatrixXd& h_pert,
                                   const Eigen::VectorXcd& psi0, const std::vector<double>& times,
                                   double hbar = 1.0);

struct DecayFit {
    double rate = 0.0;
    double rate_stderr = 0.0;
    double window_t_lo = 0.0, window_t_hi = 0.0;
    int points = 0;
    bool no_decay = false;  // fidelity never left [0.95, 1]
};

struct EchoResult {
    std::vector<double> times;
    std::vector<double> fidelity;
    double epsilon = 0.0;
    DecayFit decay;
};

/// Loschmidt echo on a cavity with the seeded smooth-disorder perturbation
/// at strength epsilon.
EchoResult loschmidt_echo(const CavityLattice& c, const Eigen::VectorXcd& psi0, double epsilon,
                          const std::vector<double>& times, std::uint64_t disorder_seed = 12345);

/// Early-time exponential decay rate of a fidelity series: straight-line fit
/// of -log F over the window where F first crosses 0.95 down to 0.2.
DecayFit fit_decay_rate(const std::vector<double>& times, const std::vector<double>& fidelity);

struct GeometryComparison {
    DecayFit regular, chaotic;
    double ratio = 0.0;         // chaotic rate / regular rate
    double ratio_stderr = 0.0;
    bool chaotic_faster = false;  // ratio > 1 beyond one propagated sigma
    bool no_decay = false;
};

/// Throws if the two fit windows do not overlap in time.
GeometryComparison compare_geometries(const EchoResult& regular, const EchoResult& chaotic);

struct VisibilityTrace {
    std::vector<double> times;
    std::vector<double> visibility;   // |<marker_A(t)|marker_B(t)>|
    double time_average = 0.0;
    double max_recurrence = 0.0;      // max V after V first drops below 0.5
    int recurrences_above_half = 0;   // upcrossings of 0.5 after the first drop
};

/**
 * Which-way marking by a cavity mode: path A evolves the marker under H,
 * path B under H + epsilon * disorder. The fringe visibility of the
 * interfering particle is the marker overlap |<A(t)|B(t)>|.
 */
VisibilityTrace coupled_slit_visibility(const CavityLattice& c, const Eigen::VectorXcd& marker0,
                                        double epsilon, const std::vector<double>& times,
                                        std::uint64_t disorder_seed = 12345);

}  // namespace tlalpan::echo
