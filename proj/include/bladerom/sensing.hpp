#pragma once

#include "bladerom/decomposition.hpp"
#include "bladerom/gaussian.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <random>
#include <vector>

namespace bladerom {

/// Point sensors placed on grid stations, each measuring all three components.
///
/// Sensor-space vectors (measurements, sampled rows) are ordered per sensor:
/// row 3*p + c holds component c of sensor p.
struct SensorSet {
    std::vector<int> station_indices;   ///< most important first
    std::vector<double> locations_norm; ///< z/L_b of each sensor
    Eigen::MatrixXd sampled_basis;      ///< 3*n_P x N rows of the modal matrix
    Eigen::VectorXd sampled_mean;       ///< 3*n_P rows of the mean field

    [[nodiscard]] int count() const { return static_cast<int>(station_indices.size()); }
};

/// Per-sensor 3x3 noise covariances and their block-diagonal assembly.
class NoiseModel {
public:
    NoiseModel() = default;
    /// Throws ArgumentError if any block is not symmetric PSD.
    explicit NoiseModel(std::vector<Eigen::Matrix3d> per_sensor);
    /// sigma^2 I on each of `n_sensors` sensors.
    static NoiseModel isotropic(int n_sensors, double sigma);

    [[nodiscard]] const std::vector<Eigen::Matrix3d>& per_sensor() const { return per_sensor_; }
    [[nodiscard]] int count() const { return static_cast<int>(per_sensor_.size()); }
    /// Block-diagonal 3*n_P x 3*n_P covariance.
    [[nodiscard]] Eigen::MatrixXd assembled() const;
    /// Per-sensor square roots L_p with L_p L_p^T = Gamma_p.
    [[nodiscard]] const std::vector<Eigen::Matrix3d>& factors() const { return factors_; }

private:
    std::vector<Eigen::Matrix3d> per_sensor_;
    std::vector<Eigen::Matrix3d> factors_;
};

enum class PivotUnit {
    station, ///< candidate = the 3 component rows of one station
    scalar,  ///< candidate = one scalar row; stations taken in pivot order
};

/// Greedy column-pivoted QR over blocks of `block_width` consecutive columns of
/// `candidates`. Each step selects the block with the largest residual
/// Frobenius norm (lowest index on ties) and deflates the remaining blocks by
/// its columns. Once the residual of every unselected block vanishes, further
/// blocks are added greedily by the largest smallest eigenvalue of
/// C_sel C_sel^T (lowest index on ties). Returns `count` block indices in
/// selection order.
std::vector<int> pivoted_block_qr(const Eigen::MatrixXd& candidates, int block_width, int count,
                                  const std::vector<bool>& excluded = {});

/// Optimal sensor stations from a pivoted QR of the transposed modal matrix.
/// Throws ArgumentError unless 1 <= n_sensors <= n_z.
SensorSet place_sensors(const ModalBasis& basis, int n_sensors, PivotUnit unit = PivotUnit::station);

/// Builds a SensorSet for explicitly chosen stations.
SensorSet make_sensor_set(const ModalBasis& basis, const std::vector<int>& stations);

/// Samples `field` at the sensor stations (per-sensor ordering).
Eigen::VectorXd sample_field(const Eigen::Ref<const Eigen::VectorXd>& field, const std::vector<int>& stations,
                             int n_z);

/// Delta sampling plus an optional Gaussian draw with covariance Gamma.
Eigen::VectorXd observe(const Eigen::Ref<const Eigen::VectorXd>& field, const SensorSet& sensors,
                        const NoiseModel* noise, std::mt19937_64& rng);
/// Convenience overload seeding a fresh generator; noise-free when noise is null.
Eigen::VectorXd observe(const Eigen::Ref<const Eigen::VectorXd>& field, const SensorSet& sensors,
                        const NoiseModel* noise, std::optional<std::uint64_t> rng_seed);

enum class EstimationMode {
    gram_corrected,    ///< least squares (S^T S)^-1 S^T
    direct_projection, ///< (1/n_P) S^T
};

/// Linear map G from centred measurements to modal coefficients.
/// Throws NumericalError when S is rank deficient (condition > 1e12) in
/// gram_corrected mode.
Eigen::MatrixXd estimator_map(const SensorSet& sensors, EstimationMode mode);

/// Reduced-coordinate estimate from one measurement frame:
/// mean = G (y - sampled_mean), covariance = G Gamma G^T.
GaussianReduced sparse_estimate(const Eigen::Ref<const Eigen::VectorXd>& y, const SensorSet& sensors,
                                const NoiseModel& noise, EstimationMode mode);

/// Same, with a precomputed map and propagated covariance for streaming use.
class SparseEstimator {
public:
    SparseEstimator(const SensorSet& sensors, const NoiseModel& noise, EstimationMode mode);
    [[nodiscard]] GaussianReduced operator()(const Eigen::Ref<const Eigen::VectorXd>& y) const;
    [[nodiscard]] const Eigen::MatrixXd& map() const { return map_; }
    [[nodiscard]] const Eigen::MatrixXd& covariance() const { return covariance_; }

private:
    Eigen::VectorXd offset_;
    Eigen::MatrixXd map_;
    Eigen::MatrixXd covariance_;
};

/// 2-norm condition number (inf when rank deficient).
double condition_number(const Eigen::MatrixXd& m);

EstimationMode parse_estimation_mode(const std::string& name);
std::string to_string(EstimationMode mode);

/// Sensor CSV: rank, station_index, z_norm.
void write_sensors_csv(const std::filesystem::path& path, const SensorSet& sensors, const BladeGrid& grid);

/// Noise configuration: {"sigma": s} or {"per_sensor": [[[3x3]], ...]}.
NoiseModel noise_from_json_text(const std::string& text, int n_sensors);

} // namespace bladerom
