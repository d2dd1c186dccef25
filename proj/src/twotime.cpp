#include "tlalpan/twotime.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace tlalpan::twotime {

PureState::PureState(Eigen::VectorXcd amplitudes) : amp_(std::move(amplitudes)) {
    if (amp_.size() == 0 || amp_.size() > kMaxDimension)
        throw std::invalid_argument("PureState: dimension out of range");
    if (std::abs(amp_.squaredNorm() - 1.0) > kTol)
        throw std::invalid_argument("PureState: amplitudes not normalized");
}

PureState PureState::basis_state(int dim, int index) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
    v[index] = 1.0;
    return PureState(v);
}

PureState PureState::normalized(const Eigen::VectorXcd& v) {
    const double n = v.norm();
    if (n == 0.0) throw std::invalid_argument("PureState: zero vector");
    return PureState(v / n);
}

Projector::Projector(Eigen::MatrixXcd basis) : basis_(std::move(basis)) {
    if (basis_.cols() == 0 || basis_.rows() == 0)
        throw std::invalid_argument("Projector: empty basis");
    const Eigen::MatrixXcd gram = basis_.adjoint() * basis_;
    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(basis_.cols(), basis_.cols());
    if ((gram - eye).cwiseAbs().maxCoeff() > kTol)
        throw std::invalid_argument("Projector: basis not orthonormal");
}

Projector Projector::onto_basis_state(int dim, int index) {
    return onto_indices(dim, {index});
}

Projector Projector::onto_indices(int dim, const std::vector<int>& indices) {
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(dim, static_cast<int>(indices.size()));
    for (std::size_t c = 0; c < indices.size(); ++c) b(indices[c], static_cast<int>(c)) = 1.0;
    return Projector(b);
}

Eigen::VectorXcd Projector::apply(const Eigen::VectorXcd& v) const {
    return basis_ * (basis_.adjoint() * v);
}

Eigen::MatrixXcd Projector::matrix() const { return basis_ * basis_.adjoint(); }

UnitaryMatrix::UnitaryMatrix(Eigen::MatrixXcd entries) : u_(std::move(entries)) {
    if (u_.rows() != u_.cols() || u_.rows() == 0)
        throw std::invalid_argument("UnitaryMatrix: must be square");
    const Eigen::MatrixXcd g = u_.adjoint() * u_;
    if ((g - Eigen::MatrixXcd::Identity(u_.rows(), u_.cols())).cwiseAbs().maxCoeff() > kTol)
        throw std::invalid_argument("UnitaryMatrix: U^dagger U != I");
}

UnitaryMatrix UnitaryMatrix::identity(int dim) {
    return UnitaryMatrix(Eigen::MatrixXcd::Identity(dim, dim));
}

UnitaryMatrix UnitaryMatrix::haar_random(int dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXcd G(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            G(r, c) = std::complex<double>(re, im);
        }
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(G);
    Eigen::MatrixXcd Q = qr.householderQ();
    Eigen::MatrixXcd R = qr.matrixQR().triangularView<Eigen::Upper>();
    // fix phases so the distribution is Haar
    for (int c = 0; c < dim; ++c) {
        std::complex<double> d = R(c, c);
        Q.col(c) *= (d == 0.0) ? 1.0 : d / std::abs(d);
    }
    return UnitaryMatrix(Q);
}

void require_complete(const std::vector<Projector>& projectors, int dim) {
    if (projectors.empty()) throw std::invalid_argument("projector set is empty");
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto& p : projectors) {
        if (p.dim() != dim) throw std::invalid_argument("projector dimension mismatch");
        sum += p.matrix();
    }
    if ((sum - Eigen::MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff() > kTol)
        throw std::invalid_argument("projector set is not complete (sum P_j != I)");
}

std::vector<double> abl_distribution(const PureState& i, const PureState& f,
                                     const std::vector<Projector>& projectors,
                                     const UnitaryMatrix& u_pre, const UnitaryMatrix& u_post) {
    const int d = i.dim();
    if (f.dim() != d || u_pre.dim() != d || u_post.dim() != d)
        throw std::invalid_argument("abl: dimension mismatch");
    require_complete(projectors, d);

    const Eigen::VectorXcd pre = u_pre.matrix() * i.amplitudes();
    std::vector<double> weights(projectors.size());
    double denom = 0.0;
    for (std::size_t j = 0; j < projectors.size(); ++j) {
        const std::complex<double> amp =
            f.amplitudes().adjoint() * (u_post.matrix() * projectors[j].apply(pre));
        weights[j] = std::norm(amp);
        denom += weights[j];
    }
    if (denom <= 0.0)
        throw std::domain_error("abl: incompatible pre/post-selection (all amplitudes vanish)");
    for (double& w : weights) w /= denom;
    return weights;
}

double abl_probability(const PureState& i, const PureState& f,
                       const std::vector<Projector>& projectors, int k,
                       const UnitaryMatrix& u_pre, const UnitaryMatrix& u_post) {
    if (k < 0 || k >= static_cast<int>(projectors.size()))
        throw std::invalid_argument("abl: outcome index out of range");
    return abl_distribution(i, f, projectors, u_pre, u_post)[k];
}

double born_probability(const PureState& i, const std::vector<Projector>& projectors, int k,
                        const UnitaryMatrix& u) {
    const int d = i.dim();
    if (u.dim() != d) throw std::invalid_argument("born: dimension mismatch");
    require_complete(projectors, d);
    if (k < 0 || k >= static_cast<int>(projectors.size()))
        throw std::invalid_argument("born: outcome index out of range");
    return projectors[k].apply(u.matrix() * i.amplitudes()).squaredNorm();
}

double check_nonsignaling(const PureState& i, const std::vector<Projector>& projectors,
                          const std::vector<PureState>& final_basis,
                          const UnitaryMatrix& u_pre, const UnitaryMatrix& u_post) {
    const int d = i.dim();
    require_complete(projectors, d);
    if (final_basis.empty()) throw std::invalid_argument("check_nonsignaling: empty final basis");
    Eigen::MatrixXcd fsum = Eigen::MatrixXcd::Zero(d, d);
    for (const auto& f : final_basis) {
        if (f.dim() != d) throw std::invalid_argument("check_nonsignaling: basis dim mismatch");
        fsum += f.amplitudes() * f.amplitudes().adjoint();
    }
    if ((fsum - Eigen::MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff() > kTol)
        throw std::invalid_argument("check_nonsignaling: final basis not complete");

    const Eigen::VectorXcd pre = u_pre.matrix() * i.amplitudes();
    const std::size_t nk = projectors.size();
    const std::size_t nf = final_basis.size();

    // joint[k][f] = P(intermediate k, then final f) in a sequential measurement
    std::vector<std::vector<double>> joint(nk, std::vector<double>(nf, 0.0));
    for (std::size_t k = 0; k < nk; ++k) {
        const Eigen::VectorXcd branch = u_post.matrix() * projectors[k].apply(pre);
        for (std::size_t fi = 0; fi < nf; ++fi) {
            const std::complex<double> amp = final_basis[fi].amplitudes().adjoint() * branch;
            joint[k][fi] = std::norm(amp);
        }
    }

    double max_dev = 0.0;
    for (std::size_t k = 0; k < nk; ++k) {
        // sum over f of P(f) * ABL(k|f) telescopes to sum_f joint[k][f]
        double marginal = 0.0;
        for (std::size_t fi = 0; fi < nf; ++fi) {
            double pf = 0.0;
            for (std::size_t j = 0; j < nk; ++j) pf += joint[j][fi];
            if (pf > 0.0) marginal += pf * (joint[k][fi] / pf);
        }
        const double born = projectors[k].apply(pre).squaredNorm();
        max_dev = std::max(max_dev, std::abs(marginal - born));
    }
    return max_dev;
}

PureState time_reverse(const PureState& s) {
    return PureState(s.amplitudes().conjugate());
}

}  // namespace tlalpan::twotime
