#pragma once

#include "bladerom/dataset.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <span>

namespace bladerom {

/// Per-row quadrature weights of the discrete inner product on `grid`.
///
/// Uniform grids use 1/n_z per station; non-uniform grids use trapezoidal
/// weights on z_norm (which also sum to one). Each station weight is repeated
/// for the three components, giving a vector of length 3*n_z.
Eigen::VectorXd quadrature_weights(const BladeGrid& grid);

/// Discrete inner product sum_i w_i * v1_i * v2_i over all three components.
double inner(const Eigen::Ref<const Eigen::VectorXd>& v1, const Eigen::Ref<const Eigen::VectorXd>& v2,
             const BladeGrid& grid);

/// POD basis: mean field, orthonormal modes (under `inner`) and their energies.
struct ModalBasis {
    BladeGrid grid;
    Eigen::VectorXd mean_field; ///< 3*n_z (m)
    Eigen::MatrixXd modes;      ///< 3*n_z x N, unit discrete norm
    Eigen::VectorXd energies;   ///< N retained eigenvalues (m^2), non-increasing
    Eigen::VectorXd spectrum;   ///< every eigenvalue of the centred ensemble
    double total_energy = 0.0;  ///< sum of the full spectrum

    [[nodiscard]] int order() const { return static_cast<int>(modes.cols()); }
};

/// Flips `v` so that its entry of largest magnitude is positive (first on ties).
void fix_sign(Eigen::Ref<Eigen::VectorXd> v);

/// POD of the mean-centred snapshot matrix, truncated at `order` modes.
///
/// Computed from the thin SVD of W^(1/2) (D - mean) / sqrt(n_t); modes are
/// mapped back through W^(-1/2) so that they are orthonormal under `inner`.
/// Throws ArgumentError unless 1 <= order <= min(3*n_z, n_t).
ModalBasis pod_fit(const SnapshotEnsemble& ensemble, int order);

/// Same as above on a raw snapshot matrix living on `grid`.
ModalBasis pod_fit(const Eigen::MatrixXd& D, const BladeGrid& grid, int order);

/// Modal coefficients a_n = inner(field - mean, phi_n).
Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& field, const ModalBasis& basis);

/// Column-wise projection of a snapshot matrix (N x n_t).
Eigen::MatrixXd project_all(const Eigen::MatrixXd& D, const ModalBasis& basis);

struct Reconstruction {
    Eigen::VectorXd field;
    std::optional<Eigen::VectorXd> variance; ///< diag(Phi Sigma Phi^T), when a covariance is given
};

/// mean + Phi a, plus the pointwise variance when `covariance` is supplied.
/// Throws ArgumentError for a non-PSD covariance (eigenvalue < -1e-8 trace).
Reconstruction reconstruct(const Eigen::Ref<const Eigen::VectorXd>& coefficients, const ModalBasis& basis,
                           const Eigen::MatrixXd* covariance = nullptr);

/// Spatial structures and amplitudes of harmonic modes with known frequencies.
struct LnmResult {
    Eigen::VectorXd frequencies; ///< rad/s, as supplied
    Eigen::MatrixXd shapes;      ///< 3*n_z x n, unit discrete norm, sign-fixed
    Eigen::VectorXd amplitudes;  ///< root-sum-square of the cos/sin column amplitudes
    double gram_condition = 0.0; ///< condition number of the temporal Gram matrix
};

struct LnmOptions {
    bool subtract_mean = false;
};

/// Least-squares extraction of spatial structures given temporal ones.
///
/// Each frequency contributes the l2-normalised pair cos(w t), sin(w t) to the
/// temporal matrix Psi; the spatial block is D Psi (Psi^T Psi)^-1. A frequency's
/// shape is the dominant direction of its two columns and its amplitude the
/// root-sum-square of their discrete norms. Throws ArgumentError when the
/// sampling is too coarse (< 2 samples per period) or frequencies repeat, and
/// NumericalError when the Gram matrix condition exceeds 1e12.
LnmResult lnm_amplitudes(const SnapshotEnsemble& ensemble, std::span<const double> frequencies,
                         const LnmOptions& options = {});

/// Modes CSV: columns mean, mode_1..mode_N, one row per stacked dof.
void write_modes_csv(const std::filesystem::path& path, const ModalBasis& basis);
/// Energies CSV: n, lambda, cumulative_fraction over the full spectrum.
void write_energies_csv(const std::filesystem::path& path, const ModalBasis& basis);
/// Reads a modes CSV written by write_modes_csv (energies are left empty).
ModalBasis read_modes_csv(const std::filesystem::path& path, const BladeGrid& grid);

} // namespace bladerom
