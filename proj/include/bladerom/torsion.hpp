#pragma once

#include "bladerom/decomposition.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <vector>

namespace bladerom {

/// Linear map from deflection coordinates to sectional-rotation coordinates,
/// fitted for one operating condition.
struct TorsionMap {
    double u_mean = 0.0;
    double ti = 0.0;
    Eigen::MatrixXd M;         ///< J x N
    Eigen::VectorXd r_squared; ///< per output row
    double condition = 0.0;    ///< condition number of the regressor series
    bool rank_deficient = false;
};

struct TorsionModel {
    ModalBasis basis; ///< POD of the rotation fields (J modes)
    std::vector<TorsionMap> maps;

    [[nodiscard]] int order() const { return basis.order(); }
};

/// POD of sectional-rotation snapshots (delegates to pod_fit).
ModalBasis torsion_pod(const SnapshotEnsemble& tau_ensemble, int order);

/// Minimum-norm least squares M = B A^+ with per-row R^2. Rank-deficient A
/// yields the minimum-norm solution and sets `rank_deficient`.
/// Throws ArgumentError when the series lengths differ or n_t < N.
TorsionMap fit_torsion_map(const Eigen::MatrixXd& a_series, const Eigen::MatrixXd& b_series);

/// Rotation field tau_mean + Xi M a using the map of the nearest training
/// condition (nearest u_mean first, then nearest ti). Throws StateError when
/// the model has no maps.
Eigen::VectorXd infer_torsion(const Eigen::Ref<const Eigen::VectorXd>& a, const TorsionModel& model, double u_mean,
                              double ti);

/// Index into model.maps selected by infer_torsion.
std::size_t nearest_torsion_map(const TorsionModel& model, double u_mean, double ti);

/// JSON document {modes_file, J, conditions: [{u_mean, ti, M, r_squared}]};
/// the basis itself goes to `modes_file` (written alongside, modes CSV format).
void save_torsion_json(const std::filesystem::path& path, const std::string& modes_file, const TorsionModel& model);

} // namespace bladerom
