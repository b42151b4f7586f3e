#pragma once

// Independent reference computations used only by the tests.

#include "bladerom/dataset.hpp"
#include "bladerom/gaussian.hpp"

#include <Eigen/Dense>

#include <random>

namespace oracle {

bladerom::BladeGrid uniform_grid(int n_z, double length_m = 1.0);

/// Trapezoid/uniform weights written out longhand (3*n_z entries).
Eigen::VectorXd weights(const bladerom::BladeGrid& grid);

struct DensePod {
    Eigen::VectorXd mean;
    Eigen::VectorXd eigenvalues; ///< all, descending
    Eigen::MatrixXd modes;       ///< leading `order` modes, unit weighted norm, sign-fixed
};

/// Eigen-decomposition of the discrete autocorrelation operator C W, with
/// C = (1/n_t) D_c D_c^T, solved as a general (non-symmetric) eigenproblem.
DensePod dense_pod(const Eigen::MatrixXd& D, const bladerom::BladeGrid& grid, int order);

/// Fusion in information form: (P^-1 + R^-1)^-1 and the weighted mean.
bladerom::GaussianReduced information_fusion(const bladerom::GaussianReduced& prior,
                                             const bladerom::GaussianReduced& measurement);

/// Random symmetric positive definite matrix with eigenvalues in [lo, hi].
Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng, double lo = 0.05, double hi = 3.0);

/// Fourier coefficients (c0, c1, s1, ...) of uniformly sampled periodic data
/// by discrete orthogonality; exact for band-limited data with n > 2K.
Eigen::VectorXd dft_coefficients(const Eigen::VectorXd& samples, int n_harmonics);

/// Largest-magnitude entry positive.
Eigen::VectorXd sign_fixed(Eigen::VectorXd v);

/// Weighted cosine similarity on the grid.
double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const bladerom::BladeGrid& grid);

/// Random field matrix with entries N(0,1).
Eigen::MatrixXd gaussian_matrix(int rows, int cols, std::mt19937_64& rng);

} // namespace oracle
