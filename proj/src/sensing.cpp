#include "bladerom/sensing.hpp"

#include "bladerom/csv.hpp"
#include "bladerom/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bladerom {

NoiseModel::NoiseModel(std::vector<Eigen::Matrix3d> per_sensor) : per_sensor_(std::move(per_sensor)) {
    factors_.reserve(per_sensor_.size());
    for (std::size_t p = 0; p < per_sensor_.size(); ++p) {
        const Eigen::Matrix3d& g = per_sensor_[p];
        if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff())) {
            throw ArgumentError("noise covariance of sensor " + std::to_string(p) + " is not symmetric");
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(0.5 * (g + g.transpose()));
        if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, g.trace())) {
            throw ArgumentError("noise covariance of sensor " + std::to_string(p) + " is not positive semi-definite");
        }
        const Eigen::Vector3d root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        factors_.push_back(eig.eigenvectors() * root.asDiagonal());
    }
}

NoiseModel NoiseModel::isotropic(int n_sensors, double sigma) {
    if (!(sigma >= 0.0)) throw ArgumentError("noise standard deviation must be >= 0");
    return NoiseModel(std::vector<Eigen::Matrix3d>(static_cast<std::size_t>(n_sensors),
                                                   Eigen::Matrix3d::Identity() * sigma * sigma));
}

Eigen::MatrixXd NoiseModel::assembled() const {
    const auto n = static_cast<Eigen::Index>(per_sensor_.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(3 * n, 3 * n);
    for (Eigen::Index p = 0; p < n; ++p) out.block<3, 3>(3 * p, 3 * p) = per_sensor_[static_cast<std::size_t>(p)];
    return out;
}

std::vector<int> pivoted_block_qr(const Eigen::MatrixXd& candidates, int block_width, int count,
                                  const std::vector<bool>& excluded) {
    if (block_width < 1 || candidates.cols() % block_width != 0) {
        throw ArgumentError("pivoted_block_qr: column count is not a multiple of the block width");
    }
    const int n_blocks = static_cast<int>(candidates.cols() / block_width);
    auto is_excluded = [&](int j) { return !excluded.empty() && excluded[static_cast<std::size_t>(j)]; };
    int available = 0;
    for (int j = 0; j < n_blocks; ++j) available += is_excluded(j) ? 0 : 1;
    if (count < 0 || count > available) throw ArgumentError("pivoted_block_qr: not enough candidate blocks");

    const Eigen::Index rows = candidates.rows();
    double scale = 0.0;
    for (int j = 0; j < n_blocks; ++j) {
        scale = std::max(scale, candidates.middleCols(j * block_width, block_width).norm());
    }
    const double tol = 1e-10 * scale;

    std::vector<int> order;
    std::vector<bool> taken(static_cast<std::size_t>(n_blocks), false);
    Eigen::MatrixXd q(rows, 0);

    auto residual_norm = [&](int j) {
        const auto block = candidates.middleCols(j * block_width, block_width);
        if (q.cols() == 0) return block.norm();
        return (block - q * (q.transpose() * block)).norm();
    };
    auto pick = [&]() {
        int best = -1;
        double best_norm = -1.0;
        for (int j = 0; j < n_blocks; ++j) {
            if (taken[static_cast<std::size_t>(j)] || is_excluded(j)) continue;
            const double r = residual_norm(j);
            if (best < 0 || r > best_norm * (1.0 + 1e-12)) {
                best = j;
                best_norm = r;
            }
        }
        return std::pair{best, best_norm};
    };

    // Greedy oversampling once the selection spans the candidate space:
    // the block raising the smallest eigenvalue of the selected Gram matrix most.
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(rows, rows);
    auto pick_spanning = [&]() {
        int best = -1;
        double best_score = -1.0;
        for (int j = 0; j < n_blocks; ++j) {
            if (taken[static_cast<std::size_t>(j)] || is_excluded(j)) continue;
            const auto block = candidates.middleCols(j * block_width, block_width);
            const Eigen::MatrixXd g = gram + block * block.transpose();
            double score = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g, Eigen::EigenvaluesOnly).eigenvalues()[0];
            if (score <= tol * tol) score = 0.0;
            if (best < 0 || score > best_score * (1.0 + 1e-12) + 1e-300) {
                best = j;
                best_score = score;
            }
        }
        return std::pair{best, best_score};
    };

    bool spanning = false;
    while (static_cast<int>(order.size()) < count) {
        int best = -1;
        if (!spanning) {
            double best_norm = 0.0;
            std::tie(best, best_norm) = pick();
            if (best_norm <= tol && q.cols() > 0) spanning = true;
        }
        if (spanning) {
            double score = 0.0;
            std::tie(best, score) = pick_spanning();
            // Rank-deficient candidates: fall back to the largest block.
            if (score == 0.0) {
                q.resize(rows, 0);
                best = pick().first;
            }
        }
        taken[static_cast<std::size_t>(best)] = true;
        order.push_back(best);
        const auto chosen = candidates.middleCols(best * block_width, block_width);
        gram.noalias() += chosen * chosen.transpose();
        for (int c = 0; c < block_width && !spanning; ++c) {
            Eigen::VectorXd v = candidates.col(best * block_width + c);
            const double original = v.norm();
            for (int pass = 0; pass < 2 && q.cols() > 0; ++pass) v -= q * (q.transpose() * v);
            const double norm = v.norm();
            if (norm > tol && norm > 1e-10 * original && q.cols() < rows) {
                q.conservativeResize(Eigen::NoChange, q.cols() + 1);
                q.col(q.cols() - 1) = v / norm;
            }
        }
    }
    return order;
}

SensorSet make_sensor_set(const ModalBasis& basis, const std::vector<int>& stations) {
    const int n_z = basis.grid.n_z();
    SensorSet s;
    s.station_indices = stations;
    const auto n_p = static_cast<Eigen::Index>(stations.size());
    s.sampled_basis.resize(3 * n_p, basis.order());
    s.sampled_mean.resize(3 * n_p);
    for (Eigen::Index p = 0; p < n_p; ++p) {
        const int st = stations[static_cast<std::size_t>(p)];
        if (st < 0 || st >= n_z) throw ArgumentError("sensor station index out of range");
        for (Eigen::Index q = 0; q < p; ++q) {
            if (stations[static_cast<std::size_t>(q)] == st) throw ArgumentError("sensor stations must be distinct");
        }
        s.locations_norm.push_back(basis.grid.z_norm()[static_cast<std::size_t>(st)]);
        for (int c = 0; c < 3; ++c) {
            const int row = basis.grid.row(c, st);
            s.sampled_basis.row(3 * p + c) = basis.modes.row(row);
            s.sampled_mean[3 * p + c] = basis.mean_field[row];
        }
    }
    return s;
}

SensorSet place_sensors(const ModalBasis& basis, int n_sensors, PivotUnit unit) {
    const int n_z = basis.grid.n_z();
    if (n_sensors < 1 || n_sensors > n_z) {
        throw ArgumentError("place_sensors: sensor count " + std::to_string(n_sensors) + " outside [1, " +
                            std::to_string(n_z) + "]");
    }
    std::vector<int> stations;
    if (unit == PivotUnit::station) {
        // Column 3*i + c is component c of station i.
        Eigen::MatrixXd cand(basis.order(), 3 * n_z);
        for (int i = 0; i < n_z; ++i) {
            for (int c = 0; c < 3; ++c) cand.col(3 * i + c) = basis.modes.row(basis.grid.row(c, i)).transpose();
        }
        stations = pivoted_block_qr(cand, 3, n_sensors);
    } else {
        // Rank every scalar row, then keep stations in order of first appearance.
        const auto full = pivoted_block_qr(basis.modes.transpose(), 1, 3 * n_z);
        for (int dof : full) {
            const int st = dof % n_z;
            if (std::find(stations.begin(), stations.end(), st) == stations.end()) stations.push_back(st);
            if (static_cast<int>(stations.size()) == n_sensors) break;
        }
    }
    return make_sensor_set(basis, stations);
}

Eigen::VectorXd sample_field(const Eigen::Ref<const Eigen::VectorXd>& field, const std::vector<int>& stations,
                             int n_z) {
    if (field.size() != 3 * n_z) throw ArgumentError("sample_field: field length does not match grid");
    Eigen::VectorXd y(3 * static_cast<Eigen::Index>(stations.size()));
    for (std::size_t p = 0; p < stations.size(); ++p) {
        for (int c = 0; c < 3; ++c) y[static_cast<Eigen::Index>(3 * p) + c] = field[c * n_z + stations[p]];
    }
    return y;
}

Eigen::VectorXd observe(const Eigen::Ref<const Eigen::VectorXd>& field, const SensorSet& sensors,
                        const NoiseModel* noise, std::mt19937_64& rng) {
    const auto n_z = static_cast<int>(field.size() / 3);
    if (field.size() % 3 != 0) throw ArgumentError("observe: field length must be a multiple of 3");
    Eigen::VectorXd y = sample_field(field, sensors.station_indices, n_z);
    if (noise) {
        if (noise->count() != sensors.count()) throw ArgumentError("observe: noise model and sensor set differ in size");
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int p = 0; p < sensors.count(); ++p) {
            Eigen::Vector3d z;
            for (int c = 0; c < 3; ++c) z[c] = normal(rng);
            y.segment<3>(3 * p) += noise->factors()[static_cast<std::size_t>(p)] * z;
        }
    }
    return y;
}

Eigen::VectorXd observe(const Eigen::Ref<const Eigen::VectorXd>& field, const SensorSet& sensors,
                        const NoiseModel* noise, std::optional<std::uint64_t> rng_seed) {
    std::mt19937_64 rng(rng_seed.value_or(0));
    return observe(field, sensors, rng_seed ? noise : nullptr, rng);
}

double condition_number(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return std::numeric_limits<double>::infinity();
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    const double lo = s[s.size() - 1];
    return lo > 0.0 ? s[0] / lo : std::numeric_limits<double>::infinity();
}

Eigen::MatrixXd estimator_map(const SensorSet& sensors, EstimationMode mode) {
    const Eigen::MatrixXd& S = sensors.sampled_basis;
    if (mode == EstimationMode::direct_projection) return S.transpose() / static_cast<double>(sensors.count());
    if (S.rows() < S.cols()) {
        throw NumericalError("sparse_estimate: " + std::to_string(S.rows()) + " sampled rows cannot determine " +
                             std::to_string(S.cols()) + " coefficients; choose more sensors");
    }
    const double cond = condition_number(S);
    if (!(cond <= 1e12)) {
        throw NumericalError("sparse_estimate: sampled basis is rank deficient (condition " + std::to_string(cond) +
                             "); choose a different sensor set");
    }
    return S.householderQr().solve(Eigen::MatrixXd::Identity(S.rows(), S.rows()));
}

SparseEstimator::SparseEstimator(const SensorSet& sensors, const NoiseModel& noise, EstimationMode mode)
    : offset_(sensors.sampled_mean), map_(estimator_map(sensors, mode)) {
    if (noise.count() != sensors.count()) throw ArgumentError("sparse_estimate: noise model and sensor set differ in size");
    covariance_ = make_psd(map_ * noise.assembled() * map_.transpose());
}

GaussianReduced SparseEstimator::operator()(const Eigen::Ref<const Eigen::VectorXd>& y) const {
    if (y.size() != offset_.size()) throw ArgumentError("sparse_estimate: measurement length does not match sensors");
    return GaussianReduced{map_ * (y - offset_), covariance_};
}

GaussianReduced sparse_estimate(const Eigen::Ref<const Eigen::VectorXd>& y, const SensorSet& sensors,
                                const NoiseModel& noise, EstimationMode mode) {
    return SparseEstimator(sensors, noise, mode)(y);
}

EstimationMode parse_estimation_mode(const std::string& name) {
    if (name == "gram_corrected") return EstimationMode::gram_corrected;
    if (name == "direct_projection") return EstimationMode::direct_projection;
    throw ArgumentError("unknown estimation mode '" + name + "'");
}

std::string to_string(EstimationMode mode) {
    return mode == EstimationMode::gram_corrected ? "gram_corrected" : "direct_projection";
}

void write_sensors_csv(const std::filesystem::path& path, const SensorSet& sensors, const BladeGrid& grid) {
    std::vector<std::vector<double>> rows;
    for (int p = 0; p < sensors.count(); ++p) {
        const int st = sensors.station_indices[static_cast<std::size_t>(p)];
        rows.push_back({static_cast<double>(p + 1), static_cast<double>(st), grid.z_norm()[static_cast<std::size_t>(st)]});
    }
    csv::write(path, {"rank", "station_index", "z_norm"}, rows);
}

NoiseModel noise_from_json_text(const std::string& text, int n_sensors) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("noise configuration: invalid JSON: ") + e.what());
    }
    try {
        if (j.contains("sigma")) return NoiseModel::isotropic(n_sensors, j.at("sigma").get<double>());
        if (j.contains("per_sensor")) {
            const auto& list = j.at("per_sensor");
            if (static_cast<int>(list.size()) != n_sensors) {
                throw ValidationError("noise configuration: expected " + std::to_string(n_sensors) +
                                      " per-sensor matrices, got " + std::to_string(list.size()));
            }
            std::vector<Eigen::Matrix3d> blocks;
            for (const auto& m : list) {
                Eigen::Matrix3d g;
                if (m.size() != 3) throw ValidationError("noise configuration: matrices must be 3x3");
                for (int r = 0; r < 3; ++r) {
                    if (m.at(r).size() != 3) throw ValidationError("noise configuration: matrices must be 3x3");
                    for (int c = 0; c < 3; ++c) g(r, c) = m.at(r).at(c).get<double>();
                }
                blocks.push_back(g);
            }
            return NoiseModel(std::move(blocks));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("noise configuration: ") + e.what());
    }
    throw ValidationError("noise configuration needs 'sigma' or 'per_sensor'");
}

} // namespace bladerom
