#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace tlalpan::twotime {

constexpr double kTol = 1e-10;
constexpr int kMaxDimension = 4096;

/// Normalized pure state over a finite basis.
class PureState {
  public:
    explicit PureState(Eigen::VectorXcd amplitudes);
    static PureState basis_state(int dim, int index);
    /// Normalizes the given vector (must be nonzero).
    static PureState normalized(const Eigen::VectorXcd& v);

    const Eigen::VectorXcd& amplitudes() const { return amp_; }
    int dim() const { return static_cast<int>(amp_.size()); }

  private:
    Eigen::VectorXcd amp_;
};

/// Projector represented by an orthonormal basis of its range, so P^2 = P
/// and P = P^dagger hold by construction.
class Projector {
  public:
    /// basis: d x r matrix whose columns span the projected subspace.
    explicit Projector(Eigen::MatrixXcd basis);
    static Projector onto_basis_state(int dim, int index);
    /// Projector onto span of the given basis states.
    static Projector onto_indices(int dim, const std::vector<int>& indices);

    Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const;
    Eigen::MatrixXcd matrix() const;
    int dim() const { return static_cast<int>(basis_.rows()); }
    int rank() const { return static_cast<int>(basis_.cols()); }

  private:
    Eigen::MatrixXcd basis_;
};

class UnitaryMatrix {
  public:
    explicit UnitaryMatrix(Eigen::MatrixXcd entries);
    static UnitaryMatrix identity(int dim);
    /// Haar-random unitary from a seeded generator (QR of complex Gaussian).
    static UnitaryMatrix haar_random(int dim, std::uint64_t seed);

    const Eigen::MatrixXcd& matrix() const { return u_; }
    int dim() const { return static_cast<int>(u_.rows()); }

  private:
    Eigen::MatrixXcd u_;
};

/// Throws unless the projectors are mutually consistent and complete
/// (sum P_j = identity within kTol).
void require_complete(const std::vector<Projector>& projectors, int dim);

/**
 * Pre/post-selected probability of intermediate outcome k:
 *
 *   P(k | i, f) = |<f| U_post P_k U_pre |i>|^2 / sum_j |<f| U_post P_j U_pre |i>|^2
 *
 * Throws if the projector set is incomplete or the post-selection is
 * incompatible (all amplitudes vanish).
 */
double abl_probability(const PureState& i, const PureState& f,
                       const std::vector<Projector>& projectors, int k,
                       const UnitaryMatrix& u_pre, const UnitaryMatrix& u_post);

/// All outcomes at once (single pass over the projector set).
std::vector<double> abl_distribution(const PureState& i, const PureState& f,
                                     const std::vector<Projector>& projectors,
                                     const UnitaryMatrix& u_pre, const UnitaryMatrix& u_post);

/// Born probability ||P_k U |i>||^2 with no post-selection.
double born_probability(const PureState& i, const std::vector<Projector>& projectors, int k,
                        const UnitaryMatrix& u);

/**
 * Marginalizing ABL outcomes over a complete final basis, weighting each
 * final state by its occurrence probability in the sequential joint
 * distribution, must reproduce Born statistics. Returns the maximum
 * absolute deviation over intermediate outcomes; the contract is <= 1e-10
 * for every valid configuration.
 */
double check_nonsignaling(const PureState& i, const std::vector<Projector>& projectors,
                          const std::vector<PureState>& final_basis,
                          const UnitaryMatrix& u_pre, const UnitaryMatrix& u_post);

/// Complex conjugation of amplitudes; exact involution.
PureState time_reverse(const PureState& s);

}  // namespace tlalpan::twotime
