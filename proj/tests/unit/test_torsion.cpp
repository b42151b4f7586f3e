#include "bladerom/errors.hpp"
#include "bladerom/synthetic.hpp"
#include "bladerom/torsion.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace bladerom;

TEST(TorsionMapFit, ExactLinearRelation) {
    std::mt19937_64 rng(31);
    const Eigen::MatrixXd m = oracle::gaussian_matrix(5, 4, rng);
    const Eigen::MatrixXd a = oracle::gaussian_matrix(4, 200, rng);
    const auto map = fit_torsion_map(a, m * a);
    EXPECT_LE((map.M - m).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((map.r_squared.array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_FALSE(map.rank_deficient);
    EXPECT_GE(map.condition, 1.0);
}

TEST(TorsionMapFit, RankDeficientGivesMinimumNorm) {
    std::mt19937_64 rng(32);
    Eigen::MatrixXd a = oracle::gaussian_matrix(3, 60, rng);
    a.row(2) = 2.0 * a.row(0) - a.row(1);
    const Eigen::MatrixXd b = oracle::gaussian_matrix(2, 60, rng);
    const auto map = fit_torsion_map(a, b);
    EXPECT_TRUE(map.rank_deficient);
    // Minimum-norm least squares through the pseudo-inverse.
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd inv = svd.singularValues();
    for (Eigen::Index i = 0; i < inv.size(); ++i) inv[i] = inv[i] > 1e-10 * inv[0] ? 1.0 / inv[i] : 0.0;
    const Eigen::MatrixXd pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
    const Eigen::MatrixXd expected = (pinv * b.transpose()).transpose();
    EXPECT_LE((map.M - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(TorsionMapFit, NoiseLowersRSquared) {
    std::mt19937_64 rng(33);
    const Eigen::MatrixXd m = oracle::gaussian_matrix(3, 4, rng);
    const Eigen::MatrixXd a = oracle::gaussian_matrix(4, 2000, rng);
    const Eigen::MatrixXd clean = m * a;
    const Eigen::MatrixXd noisy = clean + oracle::gaussian_matrix(3, 2000, rng) * 0.3;
    const auto map = fit_torsion_map(a, noisy);
    for (Eigen::Index j = 0; j < 3; ++j) {
        const double signal = m.row(j).squaredNorm();
        const double expected = signal / (signal + 0.09);
        EXPECT_NEAR(map.r_squared[j], expected, 0.03);
    }
    EXPECT_LE((map.M - m).cwiseAbs().maxCoeff(), 0.05);
}

TEST(TorsionMapFit, ArgumentChecks) {
    EXPECT_THROW(fit_torsion_map(Eigen::MatrixXd::Ones(4, 3), Eigen::MatrixXd::Ones(2, 3)), ArgumentError);
    EXPECT_THROW(fit_torsion_map(Eigen::MatrixXd::Ones(2, 5), Eigen::MatrixXd::Ones(2, 4)), ArgumentError);
}

TEST(NearestTorsionMap, WindFirstThenTurbulence) {
    TorsionModel model;
    for (auto [u, ti] : {std::pair{8.0, 0.1}, {8.0, 0.2}, {12.0, 0.5}, {12.0, 0.25}}) {
        TorsionMap m;
        m.u_mean = u;
        m.ti = ti;
        model.maps.push_back(m);
    }
    EXPECT_EQ(nearest_torsion_map(model, 9.0, 0.19), 1u);
    EXPECT_EQ(nearest_torsion_map(model, 9.0, 0.01), 0u);
    EXPECT_EQ(nearest_torsion_map(model, 11.0, 0.06), 3u);
    // Equidistant in wind speed: the lower speed wins.
    EXPECT_EQ(nearest_torsion_map(model, 10.0, 0.1), 0u);
    // Equidistant in turbulence: the lower label wins.
    EXPECT_EQ(nearest_torsion_map(model, 12.0, 0.375), 3u);
    EXPECT_THROW(nearest_torsion_map(TorsionModel{}, 8.0, 0.1), StateError);
}

TEST(InferTorsion, ReconstructsFromMappedCoordinates) {
    const auto grid = oracle::uniform_grid(11);
    TorsionModel model;
    model.basis.grid = grid;
    model.basis.modes = polynomial_modes(grid, 3, 1);
    model.basis.mean_field = Eigen::VectorXd::LinSpaced(33, 0.0, 0.1);
    model.basis.energies = Eigen::VectorXd::Ones(3);
    TorsionMap map;
    map.u_mean = 10.0;
    map.ti = 0.1;
    map.M = Eigen::MatrixXd(3, 2);
    map.M << 1.0, 0.0, 0.5, -1.0, 0.0, 2.0;
    model.maps.push_back(map);
    const Eigen::Vector2d a(0.3, -0.7);
    const Eigen::VectorXd tau = infer_torsion(a, model, 10.0, 0.1);
    const Eigen::VectorXd expected = model.basis.mean_field + model.basis.modes * (map.M * a);
    EXPECT_LE((tau - expected).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_THROW(infer_torsion(Eigen::Vector3d::Zero(), model, 10.0, 0.1), ArgumentError);
}

TEST(TorsionMapFit, IndependentOutputsHaveNearZeroRSquared) {
    std::mt19937_64 rng(34);
    const Eigen::MatrixXd a = oracle::gaussian_matrix(4, 10000, rng);
    const Eigen::MatrixXd b = oracle::gaussian_matrix(3, 10000, rng);
    const auto map = fit_torsion_map(a, b);
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_LT(std::abs(map.r_squared[j]), 0.1);
}

TEST(TorsionMapFit, ZeroCoordinateGetsZeroColumn) {
    std::mt19937_64 rng(35);
    Eigen::MatrixXd a = oracle::gaussian_matrix(4, 80, rng);
    a.row(2).setZero();
    const auto map = fit_torsion_map(a, oracle::gaussian_matrix(2, 80, rng));
    EXPECT_TRUE(map.rank_deficient);
    EXPECT_EQ(map.M.col(2).cwiseAbs().maxCoeff(), 0.0);
}

TEST(InferTorsion, ZeroMapGivesMeanField) {
    const auto grid = oracle::uniform_grid(9);
    TorsionModel model;
    model.basis.grid = grid;
    model.basis.modes = polynomial_modes(grid, 2, 1);
    model.basis.mean_field = Eigen::VectorXd::LinSpaced(27, -0.2, 0.3);
    model.basis.energies = Eigen::VectorXd::Ones(2);
    TorsionMap map;
    map.u_mean = 9.0;
    map.M = Eigen::MatrixXd::Zero(2, 4);
    model.maps.push_back(map);
    const Eigen::VectorXd tau = infer_torsion(Eigen::Vector4d(1.0, -2.0, 0.5, 3.0), model, 9.0, 0.0);
    EXPECT_EQ(tau, model.basis.mean_field);
}
