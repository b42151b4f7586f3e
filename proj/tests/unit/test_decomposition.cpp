#include "bladerom/decomposition.hpp"
#include "bladerom/errors.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace bladerom;

namespace {

SnapshotEnsemble ensemble_from(const Eigen::MatrixXd& D, const BladeGrid& grid, double f_s = 160.0) {
    SnapshotEnsemble e;
    e.grid = grid;
    e.D = D;
    e.f_s = f_s;
    for (Eigen::Index k = 0; k < D.cols(); ++k) {
        e.t.push_back(static_cast<double>(k) / f_s);
        e.theta.push_back(0.0);
        e.omega.push_back(1.0);
        e.u_raw.push_back(10.0);
        e.u_filt.push_back(10.0);
    }
    e.condition = {10.0, 0.1, 0};
    return e;
}

BladeGrid nonuniform_grid() { return BladeGrid({0.0, 0.1, 0.25, 0.5, 0.8, 1.0}, 1.0); }

} // namespace

TEST(Inner, UniformAndTrapezoidWeights) {
    const auto g = oracle::uniform_grid(4);
    const Eigen::VectorXd w = quadrature_weights(g);
    EXPECT_TRUE(w.isApprox(Eigen::VectorXd::Constant(12, 0.25)));
    const auto ng = nonuniform_grid();
    const Eigen::VectorXd wn = quadrature_weights(ng);
    EXPECT_TRUE(wn.isApprox(oracle::weights(ng), 1e-15));
    EXPECT_NEAR(wn.head(6).sum(), 1.0, 1e-15);
}

TEST(Inner, Examples) {
    const auto g = oracle::uniform_grid(5);
    std::mt19937_64 rng(1);
    Eigen::VectorXd v = oracle::gaussian_matrix(15, 1, rng);
    const Eigen::VectorXd w = oracle::gaussian_matrix(15, 1, rng);
    v /= std::sqrt(inner(v, v, g));
    EXPECT_NEAR(inner(v, v, g), 1.0, 1e-15);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(15);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(15);
    a.head(7).setOnes();
    b.tail(8).setConstant(3.0);
    EXPECT_EQ(inner(a, b, g), 0.0);
    EXPECT_NEAR(inner(2 * v, w, g), 2 * inner(v, w, g), 1e-14);
    EXPECT_DOUBLE_EQ(inner(v, w, g), inner(w, v, g));
    EXPECT_THROW(inner(Eigen::VectorXd::Zero(14), w, g), ArgumentError);
}

TEST(PodFit, RankOneData) {
    const auto g = oracle::uniform_grid(6);
    std::mt19937_64 rng(2);
    Eigen::VectorXd phi = oracle::gaussian_matrix(18, 1, rng);
    phi /= std::sqrt(inner(phi, phi, g));
    Eigen::VectorXd a = oracle::gaussian_matrix(30, 1, rng);
    a.array() -= a.mean();
    const auto basis = pod_fit(ensemble_from(phi * a.transpose(), g), 3);
    EXPECT_LE(basis.energies[1] / basis.energies[0], 1e-12);
    EXPECT_NEAR(std::abs(inner(basis.modes.col(0), phi, g)), 1.0, 1e-12);
}

TEST(PodFit, ConstantInTimeHasZeroEnergy) {
    const auto g = oracle::uniform_grid(4);
    Eigen::MatrixXd D = Eigen::VectorXd::LinSpaced(12, -1.0, 2.0).replicate(1, 9);
    const auto basis = pod_fit(ensemble_from(D, g), 2);
    // Only round-off from the mean subtraction remains.
    EXPECT_LE(basis.energies.maxCoeff(), 1e-28);
    EXPECT_TRUE(basis.mean_field.isApprox(D.col(0)));
}

TEST(PodFit, MatchesDenseEigensolve) {
    for (const auto& g : {oracle::uniform_grid(6), nonuniform_grid()}) {
        std::mt19937_64 rng(3);
        const Eigen::MatrixXd D = oracle::gaussian_matrix(18, 10, rng);
        const auto basis = pod_fit(ensemble_from(D, g), 4);
        const auto ref = oracle::dense_pod(D, g, 4);
        EXPECT_TRUE(basis.mean_field.isApprox(ref.mean, 1e-14));
        for (int k = 0; k < 4; ++k) {
            EXPECT_NEAR(basis.energies[k], ref.eigenvalues[k], 1e-10 * ref.eigenvalues[0]);
            EXPECT_LE((basis.modes.col(k) - ref.modes.col(k)).cwiseAbs().maxCoeff(), 1e-10) << "mode " << k;
        }
    }
}

TEST(PodFit, OrthonormalNonIncreasingAndEnergyConserving) {
    const auto g = nonuniform_grid();
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd D = oracle::gaussian_matrix(18, 50, rng);
    const auto basis = pod_fit(ensemble_from(D, g), 6);
    const Eigen::VectorXd w = quadrature_weights(g);
    const Eigen::MatrixXd gram = basis.modes.transpose() * w.asDiagonal() * basis.modes;
    EXPECT_LE((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-8);
    for (int k = 1; k < basis.order(); ++k) EXPECT_LE(basis.energies[k], basis.energies[k - 1]);
    EXPECT_GE(basis.energies.minCoeff(), 0.0);
    const Eigen::MatrixXd dc = D.colwise() - D.rowwise().mean();
    double total = 0.0;
    for (Eigen::Index k = 0; k < dc.cols(); ++k) total += inner(dc.col(k), dc.col(k), g);
    total /= static_cast<double>(dc.cols());
    EXPECT_NEAR(basis.spectrum.sum(), total, 1e-8 * total);
    EXPECT_NEAR(basis.total_energy, total, 1e-8 * total);
}

TEST(PodFit, OptimalAgainstRandomBases) {
    const auto g = oracle::uniform_grid(8);
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd D = oracle::gaussian_matrix(24, 4, rng) * oracle::gaussian_matrix(4, 200, rng) * 3.0 +
                              0.3 * oracle::gaussian_matrix(24, 200, rng);
    const int n = 3;
    const auto basis = pod_fit(ensemble_from(D, g), n);
    const Eigen::VectorXd w = quadrature_weights(g);
    const Eigen::MatrixXd dc = D.colwise() - basis.mean_field;
    auto residual = [&](const Eigen::MatrixXd& modes) {
        const Eigen::MatrixXd coeff = modes.transpose() * w.asDiagonal() * dc;
        const Eigen::MatrixXd e = dc - modes * coeff;
        return (e.array().square().colwise() * w.array()).sum();
    };
    const double pod_res = residual(basis.modes);
    const Eigen::VectorXd sqrt_w = w.cwiseSqrt();
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(oracle::gaussian_matrix(24, n, rng))
                                      .householderQ() *
                                  Eigen::MatrixXd::Identity(24, n);
        const Eigen::MatrixXd modes = sqrt_w.cwiseInverse().asDiagonal() * q;
        EXPECT_LT(pod_res, residual(modes));
    }
}

TEST(PodFit, DeterministicAndSignConvention) {
    const auto g = oracle::uniform_grid(5);
    std::mt19937_64 rng(6);
    const Eigen::MatrixXd D = oracle::gaussian_matrix(15, 20, rng);
    const auto a = pod_fit(ensemble_from(D, g), 3);
    const auto b = pod_fit(ensemble_from(D, g), 3);
    EXPECT_EQ(a.modes, b.modes);
    EXPECT_EQ(a.energies, b.energies);
    for (int k = 0; k < 3; ++k) {
        Eigen::Index idx;
        a.modes.col(k).cwiseAbs().maxCoeff(&idx);
        EXPECT_GT(a.modes(idx, k), 0.0);
    }
}

TEST(PodFit, OrderOutOfRange) {
    const auto g = oracle::uniform_grid(2);
    const Eigen::MatrixXd D = Eigen::MatrixXd::Random(6, 4);
    EXPECT_THROW(pod_fit(ensemble_from(D, g), 5), ArgumentError);
    EXPECT_THROW(pod_fit(ensemble_from(D, g), 0), ArgumentError);
    EXPECT_NO_THROW(pod_fit(ensemble_from(D, g), 4));
}

TEST(Projection, Examples) {
    const auto g = oracle::uniform_grid(6);
    std::mt19937_64 rng(7);
    const Eigen::MatrixXd D = oracle::gaussian_matrix(18, 40, rng);
    const auto basis = pod_fit(ensemble_from(D, g), 4);
    const Eigen::VectorXd a1 = project(basis.mean_field + basis.modes.col(0), basis);
    EXPECT_NEAR(a1[0], 1.0, 1e-12);
    EXPECT_LE(a1.tail(3).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(project(basis.mean_field, basis).cwiseAbs().maxCoeff(), 0.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXd a = oracle::gaussian_matrix(4, 1, rng);
        EXPECT_LE((project(reconstruct(a, basis).field, basis) - a).cwiseAbs().maxCoeff(), 1e-12);
    }
    const Eigen::VectorXd in_span = basis.mean_field + basis.modes * Eigen::Vector4d(0.3, -2.0, 1.0, 0.5);
    EXPECT_LE((reconstruct(project(in_span, basis), basis).field - in_span).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_THROW(project(Eigen::VectorXd::Zero(17), basis), ArgumentError);
    const Eigen::MatrixXd all = project_all(D, basis);
    EXPECT_LE((all.col(5) - project(D.col(5), basis)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Reconstruct, VarianceField) {
    const auto g = oracle::uniform_grid(6);
    std::mt19937_64 rng(8);
    const auto basis = pod_fit(ensemble_from(oracle::gaussian_matrix(18, 30, rng), g), 4);
    const auto zero = reconstruct(Eigen::VectorXd::Zero(4), basis);
    EXPECT_EQ(zero.field, basis.mean_field);
    EXPECT_FALSE(zero.variance.has_value());
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(4, 4);
    const auto r = reconstruct(Eigen::VectorXd::Zero(4), basis, &eye);
    ASSERT_TRUE(r.variance.has_value());
    EXPECT_TRUE(r.variance->isApprox(basis.modes.rowwise().squaredNorm(), 1e-14));
    Eigen::MatrixXd bad = eye;
    bad(0, 0) = -1.0;
    EXPECT_THROW(reconstruct(Eigen::VectorXd::Zero(4), basis, &bad), ArgumentError);
    Eigen::MatrixXd tiny = eye;
    tiny(3, 3) = -1e-10; // within the -1e-8 trace tolerance
    EXPECT_NO_THROW(reconstruct(Eigen::VectorXd::Zero(4), basis, &tiny));
}

TEST(Lnm, SingleToneRecovery) {
    const auto g = oracle::uniform_grid(10);
    std::mt19937_64 rng(9);
    Eigen::VectorXd phi = oracle::gaussian_matrix(30, 1, rng);
    phi /= std::sqrt(inner(phi, phi, g));
    const double f_s = 50.0;
    const int n_t = 2000;
    const double omega = 2.0 * M_PI * 1.3;
    Eigen::VectorXd c(n_t);
    for (int k = 0; k < n_t; ++k) c[k] = std::cos(omega * k / f_s);
    const auto e = ensemble_from(phi * c.transpose() * 0.7, g, f_s);
    const std::vector<double> freqs{omega};
    const auto r = lnm_amplitudes(e, freqs);
    // Amplitude is the coefficient of the l2-normalised regressor.
    EXPECT_NEAR(r.amplitudes[0], 0.7 * c.norm(), 1e-8 * c.norm());
    EXPECT_LE((oracle::sign_fixed(phi) - r.shapes.col(0)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(inner(r.shapes.col(0), r.shapes.col(0), g), 1.0, 1e-8);
}

TEST(Lnm, ZeroDataAndArgumentChecks) {
    const auto g = oracle::uniform_grid(4);
    const auto e = ensemble_from(Eigen::MatrixXd::Zero(12, 400), g, 20.0);
    const std::vector<double> freqs{1.0, 3.0};
    const auto r = lnm_amplitudes(e, freqs);
    EXPECT_EQ(r.amplitudes.cwiseAbs().maxCoeff(), 0.0);
    const std::vector<double> too_fast{70.0}; // above the Nyquist rate of 20 Hz sampling
    EXPECT_THROW(lnm_amplitudes(e, too_fast), ArgumentError);
    const std::vector<double> repeated{1.0, 1.0};
    EXPECT_THROW(lnm_amplitudes(e, repeated), ArgumentError);
    // Two nearly coincident tones over a short record: Gram matrix is singular.
    const auto short_e = ensemble_from(Eigen::MatrixXd::Random(12, 20), g, 20.0);
    const std::vector<double> close{1.0, 1.0 + 1e-9};
    EXPECT_THROW(lnm_amplitudes(short_e, close), NumericalError);
}

TEST(Lnm, TwoToneShapes) {
    const auto g = oracle::uniform_grid(12);
    std::mt19937_64 rng(10);
    const Eigen::MatrixXd shapes = oracle::gaussian_matrix(36, 2, rng);
    const double f_s = 40.0;
    const int n_t = 4000; // 100 s record, bin width 0.01 Hz
    const double f1 = 0.5;
    const double f2 = 0.5 + 8 * f_s / n_t;
    Eigen::MatrixXd D(36, n_t);
    for (int k = 0; k < n_t; ++k) {
        const double t = k / f_s;
        D.col(k) = shapes.col(0) * std::cos(2 * M_PI * f1 * t + 0.3) + shapes.col(1) * 0.4 * std::sin(2 * M_PI * f2 * t);
    }
    const std::vector<double> freqs{2 * M_PI * f1, 2 * M_PI * f2};
    const auto r = lnm_amplitudes(ensemble_from(D, g, f_s), freqs);
    for (int i = 0; i < 2; ++i) {
        EXPECT_GE(std::abs(oracle::cosine(r.shapes.col(i), shapes.col(i), g)), 1.0 - 1e-6);
    }
}

TEST(ModesCsv, RoundTrip) {
    const auto g = oracle::uniform_grid(5);
    std::mt19937_64 rng(11);
    const auto basis = pod_fit(ensemble_from(oracle::gaussian_matrix(15, 12, rng), g), 3);
    const auto dir = std::filesystem::temp_directory_path() / "bladerom_modes_csv";
    std::filesystem::create_directories(dir);
    write_modes_csv(dir / "modes.csv", basis);
    write_energies_csv(dir / "energies.csv", basis);
    const auto back = read_modes_csv(dir / "modes.csv", g);
    EXPECT_EQ(back.modes, basis.modes);
    EXPECT_EQ(back.mean_field, basis.mean_field);
}
