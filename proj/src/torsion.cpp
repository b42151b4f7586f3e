#include "bladerom/torsion.hpp"

#include "bladerom/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace bladerom {

ModalBasis torsion_pod(const SnapshotEnsemble& tau_ensemble, int order) { return pod_fit(tau_ensemble, order); }

TorsionMap fit_torsion_map(const Eigen::MatrixXd& a_series, const Eigen::MatrixXd& b_series) {
    if (a_series.cols() != b_series.cols()) throw ArgumentError("fit_torsion_map: series lengths differ");
    if (a_series.cols() < a_series.rows()) {
        throw ArgumentError("fit_torsion_map: need at least N = " + std::to_string(a_series.rows()) + " samples");
    }
    TorsionMap out;
    // B = M A  <=>  A^T M^T = B^T, solved in the minimum-norm sense.
    const Eigen::MatrixXd at = a_series.transpose();
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(at);
    cod.setThreshold(1e-12);
    out.M = cod.solve(b_series.transpose()).transpose();
    out.rank_deficient = cod.rank() < a_series.rows();
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(at);
    const auto& s = svd.singularValues();
    out.condition = (s.size() > 0 && s[s.size() - 1] > 0.0) ? s[0] / s[s.size() - 1]
                                                             : std::numeric_limits<double>::infinity();

    const Eigen::MatrixXd residual = b_series - out.M * a_series;
    out.r_squared.resize(b_series.rows());
    Eigen::VectorXd ss_tot(b_series.rows());
    for (Eigen::Index j = 0; j < b_series.rows(); ++j) {
        ss_tot[j] = (b_series.row(j).array() - b_series.row(j).mean()).square().sum();
    }
    // Rows at round-off level relative to the strongest row carry no signal.
    const double floor = 1e-20 * (ss_tot.size() > 0 ? ss_tot.maxCoeff() : 0.0);
    for (Eigen::Index j = 0; j < b_series.rows(); ++j) {
        const double ss_res = residual.row(j).squaredNorm();
        if (ss_tot[j] > floor) {
            out.r_squared[j] = 1.0 - ss_res / ss_tot[j];
        } else {
            out.r_squared[j] = ss_res <= floor ? 1.0 : 0.0;
        }
    }
    return out;
}

std::size_t nearest_torsion_map(const TorsionModel& model, double u_mean, double ti) {
    if (model.maps.empty()) throw StateError("infer_torsion: torsion model has no fitted maps");
    double best_u = model.maps.front().u_mean;
    for (const auto& m : model.maps) {
        if (std::abs(m.u_mean - u_mean) < std::abs(best_u - u_mean) ||
            (std::abs(m.u_mean - u_mean) == std::abs(best_u - u_mean) && m.u_mean < best_u)) {
            best_u = m.u_mean;
        }
    }
    std::size_t best = model.maps.size();
    for (std::size_t i = 0; i < model.maps.size(); ++i) {
        const auto& m = model.maps[i];
        if (m.u_mean != best_u) continue;
        if (best == model.maps.size()) {
            best = i;
            continue;
        }
        const double d = std::abs(m.ti - ti);
        const double d_best = std::abs(model.maps[best].ti - ti);
        if (d < d_best || (d == d_best && m.ti < model.maps[best].ti)) best = i;
    }
    return best;
}

Eigen::VectorXd infer_torsion(const Eigen::Ref<const Eigen::VectorXd>& a, const TorsionModel& model, double u_mean,
                              double ti) {
    const auto& map = model.maps[nearest_torsion_map(model, u_mean, ti)];
    if (map.M.cols() != a.size()) throw ArgumentError("infer_torsion: coefficient vector length does not match map");
    if (map.M.rows() != model.order()) throw ArgumentError("infer_torsion: map rows do not match torsion basis");
    const Eigen::VectorXd b = map.M * a;
    return reconstruct(b, model.basis).field;
}

void save_torsion_json(const std::filesystem::path& path, const std::string& modes_file, const TorsionModel& model) {
    nlohmann::json j;
    j["modes_file"] = modes_file;
    j["J"] = model.order();
    j["conditions"] = nlohmann::json::array();
    for (const auto& m : model.maps) {
        nlohmann::json jc;
        jc["u_mean"] = m.u_mean;
        jc["ti"] = m.ti;
        auto rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < m.M.rows(); ++r) {
            auto row = nlohmann::json::array();
            for (Eigen::Index c = 0; c < m.M.cols(); ++c) row.push_back(m.M(r, c));
            rows.push_back(std::move(row));
        }
        jc["M"] = std::move(rows);
        jc["r_squared"] = std::vector<double>(m.r_squared.data(), m.r_squared.data() + m.r_squared.size());
        jc["rank_deficient"] = m.rank_deficient;
        j["conditions"].push_back(std::move(jc));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path.string());
    out << j.dump(1) << '\n';
}

} // namespace bladerom
