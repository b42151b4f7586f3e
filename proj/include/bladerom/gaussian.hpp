#pragma once

#include <Eigen/Dense>

namespace bladerom {

/// Mean/covariance pair in reduced modal coordinates.
struct GaussianReduced {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;

    [[nodiscard]] int dim() const { return static_cast<int>(mean.size()); }
};

/// Symmetrises `m` and clips negative eigenvalues to zero. Matrices that are
/// already symmetric PSD are returned unchanged (no eigen-recomposition).
Eigen::MatrixXd make_psd(const Eigen::MatrixXd& m);

/// Smallest eigenvalue of the symmetric part of `m`.
double min_eigenvalue(const Eigen::MatrixXd& m);

} // namespace bladerom
