#include "bladerom/errors.hpp"
#include "bladerom/fusion.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace bladerom;

namespace {

GaussianReduced scalar(double mean, double var) {
    return {Eigen::VectorXd::Constant(1, mean), Eigen::MatrixXd::Constant(1, 1, var)};
}

} // namespace

TEST(Fuse, SymmetricScalarCase) {
    const auto r = fuse(scalar(0.0, 1.0), scalar(2.0, 1.0));
    EXPECT_DOUBLE_EQ(r.gain(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(r.posterior.mean[0], 1.0);
    EXPECT_DOUBLE_EQ(r.posterior.covariance(0, 0), 0.5);
    EXPECT_FALSE(r.regularized);
}

TEST(Fuse, SelfFusionHalvesVariance) {
    for (double var : {0.3, 1.0, 7.5}) {
        const auto r = fuse(scalar(1.5, var), scalar(1.5, var));
        EXPECT_DOUBLE_EQ(r.posterior.covariance(0, 0), var / 2);
        EXPECT_DOUBLE_EQ(r.posterior.mean[0], 1.5);
    }
}

TEST(Fuse, DegenerateMeasurementIsTrusted) {
    std::mt19937_64 rng(1);
    GaussianReduced prior{oracle::gaussian_matrix(4, 1, rng), oracle::random_spd(4, rng)};
    GaussianReduced meas{oracle::gaussian_matrix(4, 1, rng), Eigen::MatrixXd::Zero(4, 4)};
    const auto r = fuse(prior, meas);
    EXPECT_LE((r.gain - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((r.posterior.mean - meas.mean).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Fuse, DegeneratePriorIsTrusted) {
    std::mt19937_64 rng(2);
    GaussianReduced prior{oracle::gaussian_matrix(4, 1, rng), Eigen::MatrixXd::Zero(4, 4)};
    GaussianReduced meas{oracle::gaussian_matrix(4, 1, rng), oracle::random_spd(4, rng)};
    const auto r = fuse(prior, meas);
    EXPECT_EQ(r.gain.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(r.posterior.mean, prior.mean);
    EXPECT_EQ(r.posterior.covariance.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Fuse, BothDegenerateRegularized) {
    const auto r = fuse(scalar(1.0, 0.0), scalar(3.0, 0.0));
    EXPECT_TRUE(r.regularized);
    EXPECT_TRUE(std::isfinite(r.posterior.mean[0]));
}

TEST(Fuse, MatchesInformationForm) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        GaussianReduced prior{oracle::gaussian_matrix(4, 1, rng), oracle::random_spd(4, rng)};
        GaussianReduced meas{oracle::gaussian_matrix(4, 1, rng), oracle::random_spd(4, rng)};
        const auto r = fuse(prior, meas);
        const auto ref = oracle::information_fusion(prior, meas);
        EXPECT_LE((r.posterior.mean - ref.mean).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LE((r.posterior.covariance - ref.covariance).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_EQ(r.posterior.covariance, r.posterior.covariance.transpose());
    }
}

TEST(Fuse, SwapSymmetry) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        GaussianReduced a{oracle::gaussian_matrix(4, 1, rng), oracle::random_spd(4, rng)};
        GaussianReduced b{oracle::gaussian_matrix(4, 1, rng), oracle::random_spd(4, rng)};
        const auto ab = fuse(a, b);
        const auto ba = fuse(b, a);
        EXPECT_LE((ab.posterior.mean - ba.posterior.mean).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LE((ab.posterior.covariance - ba.posterior.covariance).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Fuse, TraceNeverExceedsEitherInput) {
    std::mt19937_64 rng(5);
    int violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        GaussianReduced a{oracle::gaussian_matrix(4, 1, rng), oracle::random_spd(4, rng, 1e-3, 10.0)};
        GaussianReduced b{oracle::gaussian_matrix(4, 1, rng), oracle::random_spd(4, rng, 1e-3, 10.0)};
        const auto r = fuse(a, b);
        if (r.posterior.covariance.trace() > std::min(a.covariance.trace(), b.covariance.trace())) ++violations;
    }
    EXPECT_EQ(violations, 0);
}

TEST(Fuse, DimensionMismatch) {
    GaussianReduced a{Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3)};
    GaussianReduced b{Eigen::VectorXd::Zero(4), Eigen::MatrixXd::Identity(4, 4)};
    EXPECT_THROW(fuse(a, b), ArgumentError);
}

TEST(MakePsd, ClipsAndPreserves) {
    Eigen::MatrixXd m(2, 2);
    m << 1.0, 2.0, 2.0, 1.0; // eigenvalues 3, -1
    const Eigen::MatrixXd p = make_psd(m);
    EXPECT_GE(min_eigenvalue(p), -1e-15);
    EXPECT_NEAR(p.trace(), 3.0, 1e-12);
    std::mt19937_64 rng(6);
    const Eigen::MatrixXd spd = oracle::random_spd(4, rng);
    EXPECT_EQ(make_psd(spd), spd);
}
