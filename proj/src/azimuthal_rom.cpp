#include "bladerom/azimuthal_rom.hpp"

#include "bladerom/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace bladerom {

int BinStatistics::dim() const {
    for (std::size_t b = 0; b < counts.size(); ++b) {
        if (counts[b] > 0) return static_cast<int>(means[b].size());
    }
    return means.empty() ? 0 : static_cast<int>(means.front().size());
}

BinStatistics bin_statistics(const Eigen::MatrixXd& a_series, std::span<const double> theta, int n_theta,
                             CovarianceConvention convention) {
    if (static_cast<Eigen::Index>(theta.size()) != a_series.cols()) {
        throw ArgumentError("bin_statistics: coefficient and azimuth series lengths differ");
    }
    const auto n = a_series.rows();
    BinStatistics out;
    out.n_theta = n_theta;
    out.counts.assign(static_cast<std::size_t>(n_theta), 0);
    out.means.assign(static_cast<std::size_t>(n_theta), Eigen::VectorXd::Zero(n));
    out.covariances.assign(static_cast<std::size_t>(n_theta), Eigen::MatrixXd::Zero(n, n));

    std::vector<int> bin_of(theta.size());
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const int b = azimuth_bin(theta[k], n_theta);
        bin_of[k] = b;
        ++out.counts[static_cast<std::size_t>(b)];
        out.means[static_cast<std::size_t>(b)] += a_series.col(static_cast<Eigen::Index>(k));
    }
    for (int b = 0; b < n_theta; ++b) {
        const auto bu = static_cast<std::size_t>(b);
        if (out.counts[bu] > 0) out.means[bu] /= out.counts[bu];
    }
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const auto bu = static_cast<std::size_t>(bin_of[k]);
        Eigen::VectorXd d = a_series.col(static_cast<Eigen::Index>(k));
        if (convention == CovarianceConvention::centered) d -= out.means[bu];
        out.covariances[bu].noalias() += d * d.transpose();
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int b = 0; b < n_theta; ++b) {
        const auto bu = static_cast<std::size_t>(b);
        if (out.counts[bu] > 0) {
            out.covariances[bu] /= out.counts[bu];
            out.covariances[bu] = 0.5 * (out.covariances[bu] + out.covariances[bu].transpose());
        } else {
            out.means[bu].setConstant(nan);
            out.covariances[bu].setConstant(nan);
        }
    }
    return out;
}

Eigen::VectorXd fourier_row(double theta, int n_harmonics) {
    Eigen::VectorXd row(1 + 2 * n_harmonics);
    row[0] = 1.0;
    for (int k = 1; k <= n_harmonics; ++k) {
        row[2 * k - 1] = std::cos(k * theta);
        row[2 * k] = std::sin(k * theta);
    }
    return row;
}

double fourier_eval(const Eigen::Ref<const Eigen::VectorXd>& coefficients, double theta) {
    const int n_harmonics = static_cast<int>((coefficients.size() - 1) / 2);
    return fourier_row(theta, n_harmonics).dot(coefficients);
}

namespace {

Eigen::MatrixXd design_matrix(std::span<const double> angles, int n_harmonics) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(angles.size()), 1 + 2 * n_harmonics);
    for (std::size_t i = 0; i < angles.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) = fourier_row(angles[i], n_harmonics).transpose();
    }
    return x;
}

void require_samples(std::size_t samples, int n_harmonics, const std::string& context) {
    if (n_harmonics < 0) throw ArgumentError(context + "harmonic order must be >= 0");
    const std::size_t need = 1 + 2 * static_cast<std::size_t>(n_harmonics);
    if (samples < need) {
        throw ArgumentError(context + "Fourier fit of order " + std::to_string(n_harmonics) + " needs at least " +
                            std::to_string(need) + " non-empty bins, got " + std::to_string(samples));
    }
}

} // namespace

FourierFit fit_fourier(std::span<const double> angles, std::span<const double> values, int n_harmonics) {
    if (angles.size() != values.size()) throw ArgumentError("fit_fourier: angle and value counts differ");
    require_samples(angles.size(), n_harmonics, "fit_fourier: ");
    const Eigen::MatrixXd x = design_matrix(angles, n_harmonics);
    const Eigen::Map<const Eigen::VectorXd> f(values.data(), static_cast<Eigen::Index>(values.size()));
    FourierFit out;
    out.coefficients = x.colPivHouseholderQr().solve(f);
    out.residual_norm = (x * out.coefficients - f).norm();
    return out;
}

int upper_index(int i, int j, int n) {
    if (i > j) std::swap(i, j);
    return i * n - i * (i - 1) / 2 + (j - i);
}

AzimuthalRomModel fit_rom(std::span<const BinStatistics> stats, int n_harmonics) {
    if (stats.empty()) throw ArgumentError("fit_rom: no bin statistics supplied");
    AzimuthalRomModel model;
    model.n_harmonics = n_harmonics;
    model.n_theta = stats.front().n_theta;
    model.dim = stats.front().dim();
    const int n = model.dim;
    const int n_cov = n * (n + 1) / 2;

    for (const auto& st : stats) {
        std::ostringstream ctx;
        ctx << "fit_rom: condition (u_mean=" << st.condition.u_mean << ", ti=" << st.condition.ti << "): ";
        if (st.n_theta != model.n_theta) throw ArgumentError(ctx.str() + "sector count differs between conditions");
        if (st.dim() != n) throw ArgumentError(ctx.str() + "modal dimension differs between conditions");
        for (const auto& other : model.conditions) {
            if (other.u_mean == st.condition.u_mean && other.ti == st.condition.ti) {
                throw ArgumentError(ctx.str() + "duplicate condition; aggregate seeds before fitting");
            }
        }

        std::vector<double> angles;
        std::vector<int> bins;
        for (int b = 0; b < st.n_theta; ++b) {
            if (!st.empty(b)) {
                angles.push_back(azimuth_bin_center(b, st.n_theta));
                bins.push_back(b);
            }
        }
        require_samples(angles.size(), n_harmonics, ctx.str() + "entry mean[0]: ");

        const auto n_bins = static_cast<Eigen::Index>(bins.size());
        Eigen::MatrixXd targets(n_bins, n + n_cov);
        for (Eigen::Index r = 0; r < n_bins; ++r) {
            const auto b = static_cast<std::size_t>(bins[static_cast<std::size_t>(r)]);
            for (int i = 0; i < n; ++i) targets(r, i) = st.means[b][i];
            for (int i = 0; i < n; ++i) {
                for (int j = i; j < n; ++j) targets(r, n + upper_index(i, j, n)) = st.covariances[b](i, j);
            }
        }
        const Eigen::MatrixXd x = design_matrix(angles, n_harmonics);
        const Eigen::MatrixXd coeffs = x.colPivHouseholderQr().solve(targets);
        if (!coeffs.allFinite()) throw NumericalError(ctx.str() + "non-finite Fourier coefficients");

        RomCondition rc;
        rc.u_mean = st.condition.u_mean;
        rc.ti = st.condition.ti;
        rc.mean_coeffs = coeffs.leftCols(n).transpose();
        rc.cov_coeffs = coeffs.rightCols(n_cov).transpose();
        model.conditions.push_back(std::move(rc));
    }
    std::sort(model.conditions.begin(), model.conditions.end(), [](const RomCondition& a, const RomCondition& b) {
        return a.ti != b.ti ? a.ti < b.ti : a.u_mean < b.u_mean;
    });
    return model;
}

GaussianReduced evaluate_rom(const AzimuthalRomModel& model, double theta, double u_filt, double ti) {
    if (model.conditions.empty()) throw StateError("evaluate_rom: model has no conditions");
    if (!(theta >= 0.0 && theta < kTwoPi)) throw ArgumentError("evaluate_rom: azimuth must be wrapped to [0, 2pi)");

    // Nearest turbulence label; lower label on ties.
    double best_ti = model.conditions.front().ti;
    for (const auto& c : model.conditions) {
        if (std::abs(c.ti - ti) < std::abs(best_ti - ti)) best_ti = c.ti;
    }
    std::vector<const RomCondition*> row;
    for (const auto& c : model.conditions) {
        if (c.ti == best_ti) row.push_back(&c);
    }
    // Conditions are sorted by (ti, u_mean), so `row` is ascending in u_mean.
    const RomCondition* lo = row.front();
    const RomCondition* hi = row.front();
    double weight = 0.0;
    if (u_filt >= row.back()->u_mean) {
        lo = hi = row.back();
    } else if (u_filt > row.front()->u_mean) {
        for (std::size_t i = 1; i < row.size(); ++i) {
            if (u_filt <= row[i]->u_mean) {
                lo = row[i - 1];
                hi = row[i];
                weight = (u_filt - lo->u_mean) / (hi->u_mean - lo->u_mean);
                break;
            }
        }
    }

    const Eigen::VectorXd basis = fourier_row(theta, model.n_harmonics);
    auto blend = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) -> Eigen::VectorXd {
        if (lo == hi) return a * basis;
        return ((1.0 - weight) * a + weight * b) * basis;
    };
    const int n = model.dim;
    GaussianReduced g;
    g.mean = blend(lo->mean_coeffs, hi->mean_coeffs);
    const Eigen::VectorXd cov_entries = blend(lo->cov_coeffs, hi->cov_coeffs);
    g.covariance.resize(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            g.covariance(i, j) = g.covariance(j, i) = cov_entries[upper_index(i, j, n)];
        }
    }
    g.covariance = make_psd(g.covariance);
    return g;
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    auto arr = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        arr.push_back(std::move(row));
    }
    return arr;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& what) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j.at(static_cast<std::size_t>(r));
        if (static_cast<Eigen::Index>(row.size()) != cols) throw SchemaError(what + ": ragged coefficient table");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

} // namespace

void save_rom_json(const std::filesystem::path& path, const AzimuthalRomModel& model) {
    nlohmann::json j;
    j["n_F"] = model.n_harmonics;
    j["n_theta"] = model.n_theta;
    j["conditions"] = nlohmann::json::array();
    for (const auto& c : model.conditions) {
        nlohmann::json jc;
        jc["u_mean"] = c.u_mean;
        jc["ti"] = c.ti;
        jc["mean_coeffs"] = matrix_to_json(c.mean_coeffs);
        jc["cov_coeffs"] = matrix_to_json(c.cov_coeffs);
        j["conditions"].push_back(std::move(jc));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path.string());
    out << j.dump(1) << '\n';
}

AzimuthalRomModel load_rom_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path.string());
    AzimuthalRomModel model;
    try {
        nlohmann::json j;
        in >> j;
        model.n_harmonics = j.at("n_F").get<int>();
        model.n_theta = j.at("n_theta").get<int>();
        for (const auto& jc : j.at("conditions")) {
            RomCondition c;
            c.u_mean = jc.at("u_mean").get<double>();
            c.ti = jc.at("ti").get<double>();
            c.mean_coeffs = matrix_from_json(jc.at("mean_coeffs"), path.string());
            c.cov_coeffs = matrix_from_json(jc.at("cov_coeffs"), path.string());
            model.conditions.push_back(std::move(c));
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
    if (!model.conditions.empty()) {
        model.dim = static_cast<int>(model.conditions.front().mean_coeffs.rows());
        const int n_cov = model.dim * (model.dim + 1) / 2;
        for (const auto& c : model.conditions) {
            if (c.mean_coeffs.cols() != 1 + 2 * model.n_harmonics || c.cov_coeffs.rows() != n_cov ||
                c.cov_coeffs.cols() != 1 + 2 * model.n_harmonics) {
                throw SchemaError(path.string() + ": coefficient table shape does not match n_F and dimension");
            }
        }
    }
    std::sort(model.conditions.begin(), model.conditions.end(), [](const RomCondition& a, const RomCondition& b) {
        return a.ti != b.ti ? a.ti < b.ti : a.u_mean < b.u_mean;
    });
    return model;
}

} // namespace bladerom
