#pragma once

#include "bladerom/gaussian.hpp"

namespace bladerom {

struct FusionResult {
    GaussianReduced posterior;
    Eigen::MatrixXd gain;
    /// True when prior+measurement covariance was near-singular and a ridge of
    /// 1e-12*trace was added before inversion.
    bool regularized = false;
};

/// Kalman combination of a prior with an independent measurement estimate:
///   K = P (P + R)^-1,  mean = m_p + K (m_r - m_p),  cov = (I - K) P.
/// The posterior covariance is symmetrised. Throws ArgumentError when the two
/// Gaussians have different dimensions.
FusionResult fuse(const GaussianReduced& prior, const GaussianReduced& measurement);

} // namespace bladerom
