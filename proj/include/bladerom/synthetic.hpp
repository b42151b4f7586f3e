#pragma once

#include "bladerom/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <vector>

namespace bladerom {

/// Sectional rotations generated as an exact linear function of the true
/// deflection coordinates: tau = mean + modes * (map * a_true) (+ noise).
struct SyntheticTorsion {
    Eigen::MatrixXd map;        ///< J x N_true
    Eigen::MatrixXd modes;      ///< 3*n_z x J
    Eigen::VectorXd mean_field; ///< 3*n_z
    /// Per-dof noise standard deviation (empty or zero-sized: noise-free).
    Eigen::VectorXd noise_sigma;
};

/// Ground-truth description of a synthetic blade record.
struct SyntheticCaseSpec {
    BladeGrid grid;
    Eigen::MatrixXd true_modes;     ///< 3*n_z x N_true, orthonormal, zero at the root
    Eigen::VectorXd mean_field;     ///< 3*n_z
    Eigen::MatrixXd azimuthal_mean; ///< N_true x (1 + 2K), ordered c0, c1, s1, ..., K <= 6
    Eigen::VectorXd ar_rho;         ///< lag-one coefficient per mode, in [0, 1)
    Eigen::VectorXd ar_sigma;       ///< innovation standard deviation per mode
    Eigen::MatrixXd harmonic_content; ///< N_true x 3 amplitudes at 1P, 2P, 3P
    double omega = 1.0;               ///< rotor speed (rad/s)
    double noise_sigma = 0.0;         ///< additive field noise (m)
    double duration_s = 60.0;
    double f_s = kDefaultSamplingHz;
    double u_mean = 10.0;
    double ti = 0.1;
    double wind_rho = 0.995; ///< lag-one coefficient of the wind perturbation
    std::optional<SyntheticTorsion> torsion;

    [[nodiscard]] int order() const { return static_cast<int>(true_modes.cols()); }
    /// Throws ArgumentError when any invariant is broken.
    void validate() const;
};

struct GroundTruth {
    Eigen::MatrixXd a_true;         ///< N_true x n_t
    Eigen::MatrixXd true_modes;
    Eigen::MatrixXd azimuthal_mean; ///< the spec's coefficient table
    Eigen::MatrixXd harmonic_phase; ///< N_true x 3 phases drawn for this seed
    std::optional<Eigen::MatrixXd> b_true; ///< J x n_t
    std::optional<Eigen::MatrixXd> tau_clean; ///< 3*n_z x n_t, before noise
};

struct GeneratedCase {
    SnapshotEnsemble ensemble;
    std::optional<SnapshotEnsemble> torsion;
    GroundTruth truth;
};

/// Orthonormalises the columns of `candidates` under the discrete inner
/// product of `grid` (two passes of modified Gram-Schmidt).
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& candidates, const BladeGrid& grid);

/// Root-clamped polynomial mode family: mode k is dominated by one component
/// and built from powers of z_norm, then orthonormalised.
Eigen::MatrixXd polynomial_modes(const BladeGrid& grid, int count, int first_power = 2);

/// Blade-like reference case: four modes whose azimuthal means, fluctuation
/// levels and harmonic content scale with wind speed; variance ratio between
/// consecutive modes of at least four.
SyntheticCaseSpec blade_like_spec(const BladeGrid& grid, double u_mean, double ti);

/// Adds an exactly linear torsion channel with J = N_true + 1 modes.
void attach_linear_torsion(SyntheticCaseSpec& spec, std::uint64_t map_seed);

/// Lag-one autoregressive series started from its stationary distribution.
std::vector<double> ar1_series(double rho, double sigma_w, std::size_t n, std::mt19937_64& rng);

/// Generates a record; identical (spec, seed) pairs give identical output.
GeneratedCase generate_case(const SyntheticCaseSpec& spec, std::uint64_t seed);

/// Writes the dataset files plus ground_truth.json, true_modes.csv and
/// a_true.csv into `directory`. Returns the manifest path.
std::filesystem::path write_generated_case(const std::filesystem::path& directory, const std::string& name,
                                           const GeneratedCase& generated);

} // namespace bladerom
