#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>

#include "tlalpan/numerics.hpp"
#include "oracles.hpp"

using namespace tlalpan::numerics;
using Cx = std::complex<double>;

namespace {
// erfc references computed at 30-digit precision (external evaluation),
// spread over the working disc including near-axis and oscillatory regions.
struct Ref {
    double zr, zi, vr, vi;
};
constexpr Ref kErfcRefs[] = {
    {0.0, 0.0, 1.0, 0.0},
    {1.0, 0.0, 0.15729920705028513, 0.0},
    {0.5, 0.5, 0.35738708514517947, -0.45788139443519222},
    {3.0, -2.0, 0.0010367211431827311, -1.1546724379290603e-5},
    {-2.0, 1.0, 2.0036063427256518, 0.011259006028815025},
    {5.0, 5.0, 0.069620396256904884, -0.038936190895121379},
    {0.0, 8.0, 1.0, -4.4324497460023346e+26},
    {12.0, -3.0, -1.0666962867763502e-60, 1.4047587472713186e-62},
    {-10.0, -10.0, 1.9616493742724749, -0.010987684608193988},
    {25.0, 1.0, 2.1973160562850435e-273, 5.0422356355424227e-274},
    {0.3, -6.0, 148576556431663.06, -344707335017927.67},
    {2.0, 0.0, 0.0046777349810472658, 0.0},
    {3.9, 0.0, 3.4792248597231767e-8, 0.0},
    {-1.0, 0.5, 1.9507097283189572, -0.18797346722338331},
    {7.0, -7.0, -0.010195303819281206, -0.056068649971793058},
    {0.05, 4.0, -487683.81529332143, -1198143.5402942434},
    {15.0, 15.0, -0.00091096911902488287, 0.026580464098804054},
    {0.7071067811865476, -0.7071067811865476, 0.030735788055783994, 0.47414763664099423},
    {10.0, 0.0, 2.0884875837625448e-45, 0.0},
    {0.0, -2.5, 1.0, 130.39575501324693},
};
}  // namespace

TEST_CASE("cerfc matches high-precision references to 1e-12 relative") {
    for (const auto& r : kErfcRefs) {
        const Cx got = cerfc(Cx(r.zr, r.zi));
        const Cx want(r.vr, r.vi);
        const double scale = std::max(std::abs(want), 1e-300);
        CHECK(std::abs(got - want) / scale < 1e-12);
    }
}

TEST_CASE("cerfc trivial values and reflection identity") {
    CHECK(cerfc(Cx(0, 0)).real() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(cerfc(Cx(1, 0)) - Cx(0.15729920705028513, 0.0)) < 1e-14);

    std::mt19937_64 rng(20240901);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double rr = 10.0 * std::sqrt(u(rng));
        const double th = 2.0 * M_PI * u(rng);
        const Cx z = std::polar(rr, th);
        const Cx a = cerfc(z), b = cerfc(-z);
        const double scale = std::max({1.0, std::abs(a), std::abs(b)});
        CHECK(std::abs(a + b - 2.0) / scale < 1e-12);
    }
}

TEST_CASE("cerfc real axis agrees with the series/asymptotic oracle") {
    for (double x = -6.0; x <= 6.0; x += 0.03) {
        const auto ref = oracles::real_erfc(x);
        const double got = cerfc(Cx(x, 0.0)).real();
        // the oracle is exact to its own truncation bound; 1e-10 beyond that
        CHECK(std::abs(got - ref.value) <= 1e-10 + 5.0 * ref.bound);
        CHECK(std::abs(cerfc(Cx(x, 0.0)).imag()) < 1e-14);
    }
}

TEST_CASE("cerfc saturates instead of overflowing") {
    const Cx deep = cerfc(Cx(30.0, 0.5));  // Re z^2 ~ 900, value ~ 1e-392
    CHECK(deep == Cx(0.0, 0.0));
    const Cx refl = cerfc(Cx(-30.0, 0.5));
    CHECK(refl == Cx(2.0, 0.0));
    // huge-magnitude regime: clamped to finite, no NaN/Inf
    const Cx big = cerfc(Cx(0.25, 29.0));
    CHECK(std::isfinite(big.real()));
    CHECK(std::isfinite(big.imag()));
    CHECK_THROWS_AS(cerfc(Cx(std::nan(""), 0.0)), std::invalid_argument);
}

TEST_CASE("histogram invariants") {
    CHECK_THROWS_AS(Histogram({1.0, -2.0}), std::invalid_argument);
    CHECK_THROWS_AS(Histogram({{"a"}, {1.0, 2.0}}), std::invalid_argument);
    Histogram h({3.0, 1.0});
    CHECK(h.total() == 4.0);
    const Histogram s = jeffreys_smooth(h);
    CHECK(s.counts[0] == 3.5);
    CHECK(s.counts[1] == 1.5);
}

TEST_CASE("kl_divergence frozen values and error paths") {
    CHECK(kl_divergence(Histogram({2, 5, 3}), Histogram({2, 5, 3})) == 0.0);
    CHECK(kl_divergence(Histogram({1, 0}), Histogram({0.5, 0.5})) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(kl_divergence(Histogram({0.9, 0.1}), Histogram({0.5, 0.5})) ==
          doctest::Approx(0.36806420716849707).epsilon(1e-14));
    CHECK(symmetrized_kl(Histogram({0.9, 0.1}), Histogram({0.5, 0.5})) ==
          doctest::Approx(0.43944491546724388).epsilon(1e-14));

    CHECK_THROWS_AS(kl_divergence(Histogram({1, 2}), Histogram({1, 2, 3})),
                    std::invalid_argument);
    // q zero on p's support demands smoothing
    CHECK_THROWS_AS(kl_divergence(Histogram({0.5, 0.5}), Histogram({1, 0})),
                    std::invalid_argument);
    CHECK_THROWS_AS(kl_divergence(Histogram({0.0, 0.0}), Histogram({1, 1})),
                    std::invalid_argument);
}

TEST_CASE("kl_divergence Gibbs inequality and exact symmetrization") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> p(5), q(5);
        for (int i = 0; i < 5; ++i) {
            p[i] = u(rng);
            q[i] = u(rng);
        }
        const Histogram hp(p), hq(q);
        const double d = kl_divergence(hp, hq);
        CHECK(d >= 0.0);
        const double s = symmetrized_kl(hp, hq);
        CHECK(s == 0.5 * (kl_divergence(hp, hq) + kl_divergence(hq, hp)));
        CHECK(s == symmetrized_kl(hq, hp));
    }
}

TEST_CASE("fit_nonlinear recovers exact power-law data") {
    std::vector<double> xs, ys;
    for (int i = 1; i <= 30; ++i) {
        xs.push_back(0.1 * i);
        ys.push_back(2.0 * std::pow(0.1 * i, 1.5));
    }
    const auto fit = fit_nonlinear(FitFamily::PowerLaw, xs, ys);
    CHECK(fit.converged);
    CHECK(fit.params.at("A") == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(fit.params.at("b") == doctest::Approx(1.5).epsilon(1e-6));
    CHECK(fit.residual_norm < 1e-8);
    // covariance positive semidefinite
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.covariance);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
}

TEST_CASE("fit_nonlinear constant data gives exponent zero") {
    std::vector<double> xs, ys;
    for (int i = 1; i <= 20; ++i) {
        xs.push_back(0.5 * i);
        ys.push_back(3.25);
    }
    const auto fit = fit_nonlinear(FitFamily::PowerLaw, xs, ys);
    CHECK(std::abs(fit.params.at("b")) < 1e-6);
    CHECK(fit.params.at("A") == doctest::Approx(3.25).epsilon(1e-6));
}

TEST_CASE("fit_nonlinear exact recovery for the other families") {
    std::vector<double> xs, ys;
    for (int i = 0; i < 25; ++i) {
        const double x = 0.05 + 0.06 * i;
        xs.push_back(x);
        ys.push_back(0.8 * std::exp(-std::pow(x / 0.6, 2.5)));
    }
    auto fit = fit_nonlinear(FitFamily::StretchedExp, xs, ys);
    CHECK(fit.params.at("A") == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(fit.params.at("s") == doctest::Approx(0.6).epsilon(1e-6));
    CHECK(fit.params.at("p") == doctest::Approx(2.5).epsilon(1e-6));

    ys.clear();
    for (double x : xs) ys.push_back(x > 0.7 ? 1.7 * std::pow(x - 0.7, 0.5) : 0.0);
    fit = fit_nonlinear(FitFamily::PiecewiseCritical, xs, ys);
    CHECK(fit.params.at("A") == doctest::Approx(1.7).epsilon(1e-5));
    CHECK(fit.params.at("c") == doctest::Approx(0.7).epsilon(1e-5));
    CHECK(fit.params.at("p") == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("fit_nonlinear error paths and determinism") {
    CHECK_THROWS_AS(fit_nonlinear(FitFamily::PowerLaw, {1, 1, 1, 1}, {1, 2, 3, 4}),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit_nonlinear(FitFamily::PowerLaw, {1, 2, 3}, {1, 2, 3}),
                    std::invalid_argument);

    std::vector<double> xs, ys;
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 1; i <= 40; ++i) {
        xs.push_back(0.2 * i);
        ys.push_back(1.3 * std::pow(0.2 * i, -0.7) * (1.0 + 0.05 * g(rng)));
    }
    const auto f1 = fit_nonlinear(FitFamily::PowerLaw, xs, ys);
    const auto f2 = fit_nonlinear(FitFamily::PowerLaw, xs, ys);
    CHECK(f1.params.at("A") == f2.params.at("A"));
    CHECK(f1.params.at("b") == f2.params.at("b"));
    CHECK(f1.params.at("b") == doctest::Approx(-0.7).epsilon(0.05));
}

TEST_CASE("noisy power-law exponent falls inside a bootstrap interval") {
    // Monte Carlo calibration: resample-and-refit intervals cover the truth.
    std::mt19937_64 rng(2025);
    std::normal_distribution<double> g(0.0, 1.0);
    const double A = 2.0, b = 1.5;
    int covered = 0;
    const int repeats = 10;
    for (int rep = 0; rep < repeats; ++rep) {
        std::vector<double> xs(50), ys(50);
        for (int i = 0; i < 50; ++i) {
            xs[i] = 0.1 + 0.06 * i;
            ys[i] = A * std::pow(xs[i], b) * (1.0 + 0.05 * g(rng));
        }
        std::vector<double> bs;
        std::uniform_int_distribution<int> pick(0, 49);
        for (int resample = 0; resample < 80; ++resample) {
            std::vector<double> rx(50), ry(50);
            for (int i = 0; i < 50; ++i) {
                const int j = pick(rng);
                rx[i] = xs[j];
                ry[i] = ys[j];
            }
            bs.push_back(fit_nonlinear(FitFamily::PowerLaw, rx, ry).params.at("b"));
        }
        std::sort(bs.begin(), bs.end());
        const double lo = bs[static_cast<int>(0.025 * bs.size())];
        const double hi = bs[static_cast<int>(0.975 * bs.size())];
        if (lo <= b && b <= hi) ++covered;
    }
    CHECK(covered >= 8);
}
