#include "bladerom/decomposition.hpp"

#include "bladerom/csv.hpp"
#include "bladerom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace bladerom {

Eigen::VectorXd quadrature_weights(const BladeGrid& grid) {
    const int n = grid.n_z();
    Eigen::VectorXd station(n);
    if (grid.is_uniform()) {
        station.setConstant(1.0 / n);
    } else {
        const auto& z = grid.z_norm();
        for (int i = 0; i < n; ++i) {
            const double left = i > 0 ? z[i] - z[i - 1] : 0.0;
            const double right = i + 1 < n ? z[i + 1] - z[i] : 0.0;
            station[i] = 0.5 * (left + right);
        }
    }
    Eigen::VectorXd w(3 * n);
    w << station, station, station;
    return w;
}

double inner(const Eigen::Ref<const Eigen::VectorXd>& v1, const Eigen::Ref<const Eigen::VectorXd>& v2,
             const BladeGrid& grid) {
    if (v1.size() != grid.n_dof() || v2.size() != grid.n_dof()) {
        throw ArgumentError("inner: vectors must have length 3*n_z = " + std::to_string(grid.n_dof()));
    }
    return (quadrature_weights(grid).array() * v1.array() * v2.array()).sum();
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    Eigen::Index idx = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > best) {
            best = std::abs(v[i]);
            idx = i;
        }
    }
    if (v.size() > 0 && v[idx] < 0.0) v = -v;
}

ModalBasis pod_fit(const SnapshotEnsemble& ensemble, int order) { return pod_fit(ensemble.D, ensemble.grid, order); }

ModalBasis pod_fit(const Eigen::MatrixXd& D, const BladeGrid& grid, int order) {
    const Eigen::Index m = D.rows();
    const Eigen::Index n_t = D.cols();
    if (m != grid.n_dof()) throw ArgumentError("pod_fit: snapshot rows do not match the grid");
    if (order < 1 || order > std::min<Eigen::Index>(m, n_t)) {
        throw ArgumentError("pod_fit: truncation order " + std::to_string(order) + " outside [1, min(3*n_z, n_t)] = [1, " +
                            std::to_string(std::min<Eigen::Index>(m, n_t)) + "]");
    }

    ModalBasis basis;
    basis.grid = grid;
    basis.mean_field = D.rowwise().mean();

    const Eigen::VectorXd w = quadrature_weights(grid);
    const Eigen::VectorXd sqrt_w = w.cwiseSqrt();
    // Transposed so that the tall direction is time; the right singular vectors
    // of X^T are the left singular vectors of X.
    const Eigen::MatrixXd Xt =
        ((D.colwise() - basis.mean_field).array().colwise() * sqrt_w.array()).matrix().transpose() /
        std::sqrt(static_cast<double>(n_t));
    Eigen::JacobiSVD<Eigen::MatrixXd, Eigen::ColPivHouseholderQRPreconditioner> svd(Xt, Eigen::ComputeFullV);

    const Eigen::VectorXd s = svd.singularValues();
    basis.spectrum = s.array().square().matrix();
    basis.total_energy = basis.spectrum.sum();
    basis.energies = basis.spectrum.head(order);
    basis.modes.resize(m, order);
    for (int n = 0; n < order; ++n) {
        Eigen::VectorXd phi = svd.matrixV().col(n).cwiseQuotient(sqrt_w);
        fix_sign(phi);
        basis.modes.col(n) = phi;
    }
    return basis;
}

Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& field, const ModalBasis& basis) {
    if (field.size() != basis.mean_field.size()) {
        throw ArgumentError("project: field length " + std::to_string(field.size()) + " does not match basis (" +
                            std::to_string(basis.mean_field.size()) + ")");
    }
    const Eigen::VectorXd w = quadrature_weights(basis.grid);
    return basis.modes.transpose() * (w.array() * (field - basis.mean_field).array()).matrix();
}

Eigen::MatrixXd project_all(const Eigen::MatrixXd& D, const ModalBasis& basis) {
    if (D.rows() != basis.mean_field.size()) throw ArgumentError("project_all: row count does not match basis");
    const Eigen::VectorXd w = quadrature_weights(basis.grid);
    const Eigen::MatrixXd weighted_modes = basis.modes.array().colwise() * w.array();
    return weighted_modes.transpose() * (D.colwise() - basis.mean_field);
}

Reconstruction reconstruct(const Eigen::Ref<const Eigen::VectorXd>& coefficients, const ModalBasis& basis,
                           const Eigen::MatrixXd* covariance) {
    if (coefficients.size() != basis.order()) {
        throw ArgumentError("reconstruct: expected " + std::to_string(basis.order()) + " coefficients");
    }
    Reconstruction out;
    out.field = basis.mean_field + basis.modes * coefficients;
    if (covariance) {
        const auto& S = *covariance;
        if (S.rows() != basis.order() || S.cols() != basis.order()) {
            throw ArgumentError("reconstruct: covariance must be N x N");
        }
        if (!S.isApprox(S.transpose(), 1e-10) && (S - S.transpose()).norm() > 1e-12) {
            throw ArgumentError("reconstruct: covariance is not symmetric");
        }
        const Eigen::MatrixXd sym = 0.5 * (S + S.transpose());
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
        const double trace = sym.trace();
        if (eig.eigenvalues().minCoeff() < -1e-8 * std::max(trace, 0.0)) {
            throw ArgumentError("reconstruct: covariance is not positive semi-definite");
        }
        out.variance = ((basis.modes * sym).array() * basis.modes.array()).rowwise().sum().matrix();
    }
    return out;
}

LnmResult lnm_amplitudes(const SnapshotEnsemble& ensemble, std::span<const double> frequencies,
                         const LnmOptions& options) {
    const auto n_freq = static_cast<Eigen::Index>(frequencies.size());
    if (n_freq == 0) throw ArgumentError("lnm_amplitudes: no frequencies given");
    std::set<double> distinct(frequencies.begin(), frequencies.end());
    if (static_cast<Eigen::Index>(distinct.size()) != n_freq) {
        throw ArgumentError("lnm_amplitudes: frequencies must be distinct");
    }
    const double nyquist = M_PI * ensemble.f_s; // rad/s
    for (double f : frequencies) {
        if (!(f > 0.0)) throw ArgumentError("lnm_amplitudes: frequencies must be positive");
        if (f > nyquist) {
            throw ArgumentError("lnm_amplitudes: frequency " + std::to_string(f) +
                                " rad/s has fewer than 2 samples per period");
        }
    }

    const Eigen::Index n_t = ensemble.D.cols();
    Eigen::MatrixXd psi(n_t, 2 * n_freq);
    for (Eigen::Index j = 0; j < n_freq; ++j) {
        const double w = frequencies[static_cast<std::size_t>(j)];
        for (Eigen::Index k = 0; k < n_t; ++k) {
            const double t = ensemble.t[static_cast<std::size_t>(k)];
            psi(k, 2 * j) = std::cos(w * t);
            psi(k, 2 * j + 1) = std::sin(w * t);
        }
    }
    for (Eigen::Index c = 0; c < psi.cols(); ++c) {
        const double norm = psi.col(c).norm();
        if (norm == 0.0) throw NumericalError("lnm_amplitudes: temporal regressor vanishes on the record");
        psi.col(c) /= norm;
    }

    LnmResult out;
    out.frequencies = Eigen::Map<const Eigen::VectorXd>(frequencies.data(), n_freq);
    const Eigen::MatrixXd gram = psi.transpose() * psi;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    out.gram_condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(out.gram_condition <= 1e12)) {
        throw NumericalError("lnm_amplitudes: temporal Gram matrix is ill-conditioned (condition " +
                             std::to_string(out.gram_condition) + "); use a longer record");
    }

    Eigen::MatrixXd D = ensemble.D;
    if (options.subtract_mean) D.colwise() -= D.rowwise().mean();
    // D Psi (Psi^T Psi)^-1, evaluated as D (G^-1 Psi^T)^T.
    const Eigen::MatrixXd spatial = D * gram.ldlt().solve(psi.transpose()).transpose();

    const Eigen::VectorXd w = quadrature_weights(ensemble.grid);
    const Eigen::VectorXd sqrt_w = w.cwiseSqrt();
    out.shapes.resize(D.rows(), n_freq);
    out.amplitudes.resize(n_freq);
    for (Eigen::Index j = 0; j < n_freq; ++j) {
        const Eigen::MatrixXd block = spatial.middleCols(2 * j, 2).array().colwise() * sqrt_w.array();
        const double a_cos = block.col(0).norm();
        const double a_sin = block.col(1).norm();
        out.amplitudes[j] = std::hypot(a_cos, a_sin);
        Eigen::VectorXd shape;
        if (out.amplitudes[j] > 0.0) {
            const Eigen::JacobiSVD<Eigen::MatrixXd> svd(block, Eigen::ComputeThinU);
            shape = svd.matrixU().col(0).cwiseQuotient(sqrt_w);
        } else {
            shape = Eigen::VectorXd::Zero(D.rows());
            shape[0] = 1.0 / sqrt_w[0];
        }
        fix_sign(shape);
        out.shapes.col(j) = shape;
    }
    return out;
}

void write_modes_csv(const std::filesystem::path& path, const ModalBasis& basis) {
    std::vector<std::string> header{"mean"};
    for (int n = 0; n < basis.order(); ++n) header.push_back("mode_" + std::to_string(n + 1));
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(basis.mean_field.size()));
    for (Eigen::Index i = 0; i < basis.mean_field.size(); ++i) {
        auto& r = rows[static_cast<std::size_t>(i)];
        r.push_back(basis.mean_field[i]);
        for (int n = 0; n < basis.order(); ++n) r.push_back(basis.modes(i, n));
    }
    csv::write(path, header, rows);
}

void write_energies_csv(const std::filesystem::path& path, const ModalBasis& basis) {
    std::vector<std::vector<double>> rows;
    double cumulative = 0.0;
    for (Eigen::Index n = 0; n < basis.spectrum.size(); ++n) {
        cumulative += basis.spectrum[n];
        rows.push_back({static_cast<double>(n + 1), basis.spectrum[n],
                        basis.total_energy > 0.0 ? cumulative / basis.total_energy : 0.0});
    }
    csv::write(path, {"n", "lambda", "cumulative_fraction"}, rows);
}

ModalBasis read_modes_csv(const std::filesystem::path& path, const BladeGrid& grid) {
    const auto table = csv::read(path);
    if (table.find("mean") != 0) throw SchemaError(path.string() + ": first column must be 'mean'");
    if (static_cast<int>(table.rows.size()) != grid.n_dof()) {
        throw SchemaError(path.string() + ": expected " + std::to_string(grid.n_dof()) + " rows");
    }
    const auto order = static_cast<Eigen::Index>(table.header.size()) - 1;
    ModalBasis basis;
    basis.grid = grid;
    basis.mean_field.resize(grid.n_dof());
    basis.modes.resize(grid.n_dof(), order);
    for (Eigen::Index i = 0; i < grid.n_dof(); ++i) {
        const auto& r = table.rows[static_cast<std::size_t>(i)];
        basis.mean_field[i] = r[0];
        for (Eigen::Index n = 0; n < order; ++n) basis.modes(i, n) = r[static_cast<std::size_t>(n + 1)];
    }
    return basis;
}

} // namespace bladerom
