#include "bladerom/fusion.hpp"

#include "bladerom/errors.hpp"

#include <algorithm>
#include <limits>

namespace bladerom {

double min_eigenvalue(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

Eigen::MatrixXd make_psd(const Eigen::MatrixXd& m) {
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    if (sym.size() == 0) return sym;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.eigenvalues().minCoeff() >= 0.0) return sym;
    const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
    sym = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (sym + sym.transpose());
}

FusionResult fuse(const GaussianReduced& prior, const GaussianReduced& measurement) {
    const auto n = prior.mean.size();
    if (measurement.mean.size() != n || prior.covariance.rows() != n || prior.covariance.cols() != n ||
        measurement.covariance.rows() != n || measurement.covariance.cols() != n) {
        throw ArgumentError("fuse: prior and measurement dimensions do not conform");
    }

    FusionResult out;
    Eigen::MatrixXd total = prior.covariance + measurement.covariance;
    total = 0.5 * (total + total.transpose());
    const double trace = total.trace();
    if (min_eigenvalue(total) <= 1e-14 * trace) {
        const double ridge = std::max(1e-12 * trace, std::numeric_limits<double>::min());
        total.diagonal().array() += ridge;
        out.regularized = true;
    }
    // K = P S^-1 with S symmetric, so K^T = S^-1 P^T.
    out.gain = total.ldlt().solve(prior.covariance.transpose()).transpose();

    out.posterior.mean = prior.mean + out.gain * (measurement.mean - prior.mean);
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
    out.posterior.covariance = make_psd((identity - out.gain) * prior.covariance);
    return out;
}

} // namespace bladerom
