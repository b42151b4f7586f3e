#include "bladerom/dataset.hpp"

#include "bladerom/csv.hpp"
#include "bladerom/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace bladerom {

namespace fs = std::filesystem;
using nlohmann::json;

BladeGrid::BladeGrid(std::vector<double> z_norm, double length_m)
    : z_norm_(std::move(z_norm)), length_m_(length_m) {
    if (z_norm_.size() < 2) throw ValidationError("grid needs at least 2 stations");
    if (z_norm_.front() != 0.0) throw ValidationError("grid must start at z_norm = 0");
    if (z_norm_.back() != 1.0) throw ValidationError("grid must end at z_norm = 1");
    for (std::size_t i = 1; i < z_norm_.size(); ++i) {
        if (!(z_norm_[i] > z_norm_[i - 1])) {
            throw ValidationError("grid z_norm not strictly increasing at station " + std::to_string(i));
        }
    }
    if (!(length_m_ > 0.0) || !std::isfinite(length_m_)) throw ValidationError("blade length must be positive");
}

int BladeGrid::nearest_station(double z) const {
    int best = 0;
    double best_d = std::abs(z_norm_[0] - z);
    for (int i = 1; i < n_z(); ++i) {
        const double d = std::abs(z_norm_[i] - z);
        if (d < best_d) {
            best = i;
            best_d = d;
        }
    }
    return best;
}

bool BladeGrid::is_uniform() const {
    const double h = 1.0 / (n_z() - 1);
    for (int i = 1; i < n_z(); ++i) {
        if (std::abs((z_norm_[i] - z_norm_[i - 1]) - h) > 1e-9) return false;
    }
    return true;
}

void ConditionKey::validate() const {
    if (!(u_mean > 0.0)) throw ValidationError("condition u_mean must be > 0");
    if (!(ti > 0.0 && ti < 1.0)) throw ValidationError("condition ti must lie in (0,1)");
}

void SnapshotEnsemble::validate() const {
    const auto n = static_cast<std::size_t>(D.cols());
    if (D.rows() != grid.n_dof()) {
        throw ValidationError("snapshot matrix has " + std::to_string(D.rows()) + " rows, grid expects " +
                              std::to_string(grid.n_dof()));
    }
    auto check_len = [n](const std::vector<double>& v, const char* name) {
        if (v.size() != n) {
            throw ValidationError(std::string("metadata '") + name + "' has length " + std::to_string(v.size()) +
                                  ", expected " + std::to_string(n));
        }
    };
    check_len(t, "t");
    check_len(theta, "theta");
    check_len(omega, "omega");
    check_len(u_raw, "u_raw");
    check_len(u_filt, "u_filt");
    for (std::size_t k = 0; k < n; ++k) {
        if (!(theta[k] >= 0.0 && theta[k] < kTwoPi)) {
            throw ValidationError("theta out of [0, 2pi) at row " + std::to_string(k));
        }
    }
    if (!(f_s > 0.0)) throw ValidationError("sampling frequency must be positive");
    const double dt = 1.0 / f_s;
    for (std::size_t k = 1; k < n; ++k) {
        if (std::abs((t[k] - t[k - 1]) - dt) > 1e-9) {
            throw ValidationError("time spacing differs from 1/f_s at row " + std::to_string(k));
        }
    }
}

std::vector<std::string> field_column_names(const std::string& prefix, int n_z) {
    int width = 3;
    for (int v = n_z - 1; v >= 1000; v /= 10) ++width;
    std::vector<std::string> names;
    names.reserve(3 * static_cast<std::size_t>(n_z));
    for (const char comp : {'x', 'y', 'z'}) {
        for (int i = 0; i < n_z; ++i) {
            std::string idx = std::to_string(i);
            idx.insert(0, static_cast<std::size_t>(std::max(0, width - static_cast<int>(idx.size()))), '0');
            names.push_back(prefix + comp + "_" + idx);
        }
    }
    return names;
}

CaseManifest read_manifest(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open manifest: " + manifest_path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SchemaError(manifest_path.string() + ": invalid JSON: " + e.what());
    }
    auto require = [&](const char* key) -> const json& {
        if (!j.contains(key)) throw SchemaError(manifest_path.string() + ": missing key '" + key + "'");
        return j.at(key);
    };
    CaseManifest m;
    try {
        m.name = require("name").get<std::string>();
        m.L_b = require("L_b").get<double>();
        m.f_s = require("f_s").get<double>();
        m.u_mean = require("u_mean").get<double>();
        m.ti = require("ti").get<double>();
        m.seed = require("seed").get<long>();
        m.grid_file = require("grid_file").get<std::string>();
        m.snapshot_file = require("snapshot_file").get<std::string>();
        if (j.contains("torsion_file") && !j.at("torsion_file").is_null()) {
            m.torsion_file = j.at("torsion_file").get<std::string>();
        }
        if (j.contains("wind_alpha")) m.wind_alpha = j.at("wind_alpha").get<double>();
    } catch (const json::exception& e) {
        throw SchemaError(manifest_path.string() + ": " + e.what());
    }
    return m;
}

namespace {

fs::path resolve(const fs::path& base_dir, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
}

BladeGrid load_grid(const fs::path& path, double length_m) {
    const auto table = csv::read(path);
    const int col = table.find("z_norm");
    if (col < 0) throw SchemaError(path.string() + ": missing column 'z_norm'");
    return BladeGrid(table.column(static_cast<std::size_t>(col)), length_m);
}

SnapshotEnsemble load_snapshots(const fs::path& path, const BladeGrid& grid, const CaseManifest& m,
                                const std::string& prefix) {
    const auto table = csv::read(path);
    auto need = [&](const std::string& name) {
        const int c = table.find(name);
        if (c < 0) throw SchemaError(path.string() + ": missing column '" + name + "'");
        return static_cast<std::size_t>(c);
    };
    const auto c_t = need("t");
    const auto c_theta = need("theta");
    const auto c_omega = need("omega");
    const auto c_uraw = need("u_raw");
    const int c_ufilt = table.find("u_filt");
    const auto names = field_column_names(prefix, grid.n_z());
    std::vector<std::size_t> field_cols;
    field_cols.reserve(names.size());
    for (const auto& n : names) field_cols.push_back(need(n));
    const std::size_t expected = 4 + (c_ufilt >= 0 ? 1 : 0) + names.size();
    if (table.header.size() != expected) {
        // Extra field columns, e.g. a grid with fewer stations than the file.
        for (const auto& h : table.header) {
            if (std::find(names.begin(), names.end(), h) == names.end() && h != "t" && h != "theta" &&
                h != "omega" && h != "u_raw" && h != "u_filt") {
                throw SchemaError(path.string() + ": unexpected column '" + h + "'");
            }
        }
        throw SchemaError(path.string() + ": duplicate columns in header");
    }

    SnapshotEnsemble e;
    e.grid = grid;
    e.f_s = m.f_s;
    e.condition = ConditionKey{m.u_mean, m.ti, m.seed};
    const std::size_t n_t = table.rows.size();
    e.D.resize(grid.n_dof(), static_cast<Eigen::Index>(n_t));
    e.t.resize(n_t);
    e.theta.resize(n_t);
    e.omega.resize(n_t);
    e.u_raw.resize(n_t);
    for (std::size_t k = 0; k < n_t; ++k) {
        const auto& r = table.rows[k];
        e.t[k] = r[c_t];
        e.theta[k] = r[c_theta];
        if (!(e.theta[k] >= 0.0 && e.theta[k] < kTwoPi)) {
            throw ValidationError(path.string() + ": theta out of [0, 2pi) at row " + std::to_string(k));
        }
        e.omega[k] = r[c_omega];
        e.u_raw[k] = r[c_uraw];
        for (std::size_t i = 0; i < field_cols.size(); ++i) {
            e.D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = r[field_cols[i]];
        }
    }
    if (c_ufilt >= 0) {
        e.u_filt = table.column(static_cast<std::size_t>(c_ufilt));
    } else if (n_t > 0) {
        e.u_filt = smooth_wind(e.u_raw, m.wind_alpha);
    }
    e.validate();
    return e;
}

void write_snapshots(const fs::path& path, const SnapshotEnsemble& e, const std::string& prefix) {
    std::vector<std::string> header{"t", "theta", "omega", "u_raw", "u_filt"};
    const auto names = field_column_names(prefix, e.grid.n_z());
    header.insert(header.end(), names.begin(), names.end());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path.string());
    std::string line;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) line += ',';
        line += header[i];
    }
    line += '\n';
    out << line;
    for (Eigen::Index k = 0; k < e.D.cols(); ++k) {
        const auto ku = static_cast<std::size_t>(k);
        line.clear();
        csv::append_double(line, e.t[ku]);
        line += ',';
        csv::append_double(line, e.theta[ku]);
        line += ',';
        csv::append_double(line, e.omega[ku]);
        line += ',';
        csv::append_double(line, e.u_raw[ku]);
        line += ',';
        csv::append_double(line, e.u_filt[ku]);
        for (Eigen::Index i = 0; i < e.D.rows(); ++i) {
            line += ',';
            csv::append_double(line, e.D(i, k));
        }
        line += '\n';
        out << line;
    }
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace

LoadedCase load_case(const fs::path& manifest_path) {
    if (!fs::exists(manifest_path)) throw IoError("manifest not found: " + manifest_path.string());
    LoadedCase c;
    c.manifest = read_manifest(manifest_path);
    const fs::path base = manifest_path.parent_path();
    if (!(c.manifest.wind_alpha > 0.0 && c.manifest.wind_alpha <= 1.0)) {
        throw ValidationError(manifest_path.string() + ": wind_alpha must lie in (0,1]");
    }
    c.grid = load_grid(resolve(base, c.manifest.grid_file), c.manifest.L_b);
    c.ensemble = load_snapshots(resolve(base, c.manifest.snapshot_file), c.grid, c.manifest, "u");
    if (c.manifest.torsion_file) {
        c.torsion = load_snapshots(resolve(base, *c.manifest.torsion_file), c.grid, c.manifest, "tau");
        if (c.torsion->n_t() != c.ensemble.n_t()) {
            throw SchemaError(manifest_path.string() + ": torsion file has " + std::to_string(c.torsion->n_t()) +
                              " rows, snapshot file has " + std::to_string(c.ensemble.n_t()));
        }
    }
    return c;
}

fs::path save_case(const fs::path& directory, const std::string& name, const SnapshotEnsemble& ensemble,
                   const SnapshotEnsemble* torsion, double wind_alpha) {
    ensemble.validate();
    fs::create_directories(directory);
    const std::string grid_file = name + "_grid.csv";
    const std::string snap_file = name + "_snapshots.csv";
    {
        std::vector<std::vector<double>> rows;
        for (double z : ensemble.grid.z_norm()) rows.push_back({z});
        csv::write(directory / grid_file, {"z_norm"}, rows);
    }
    write_snapshots(directory / snap_file, ensemble, "u");

    json j;
    j["name"] = name;
    j["L_b"] = ensemble.grid.length_m();
    j["f_s"] = ensemble.f_s;
    j["u_mean"] = ensemble.condition.u_mean;
    j["ti"] = ensemble.condition.ti;
    j["seed"] = ensemble.condition.seed;
    j["grid_file"] = grid_file;
    j["snapshot_file"] = snap_file;
    if (torsion) {
        torsion->validate();
        const std::string tau_file = name + "_torsion.csv";
        write_snapshots(directory / tau_file, *torsion, "tau");
        j["torsion_file"] = tau_file;
    }
    if (wind_alpha != kDefaultWindAlpha) j["wind_alpha"] = wind_alpha;
    const fs::path manifest = directory / "manifest.json";
    std::ofstream out(manifest, std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + manifest.string());
    out << j.dump(2) << '\n';
    return manifest;
}

std::vector<double> smooth_wind(std::span<const double> raw, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ArgumentError("smoothing factor must lie in (0,1]");
    if (raw.empty()) throw ArgumentError("wind-speed series is empty");
    std::vector<double> out(raw.size());
    out[0] = raw[0];
    for (std::size_t k = 1; k < raw.size(); ++k) out[k] = alpha * raw[k] + (1.0 - alpha) * out[k - 1];
    return out;
}

int azimuth_bin(double theta, int n_theta) {
    if (n_theta < 1) throw ArgumentError("sector count must be >= 1");
    if (!(theta >= 0.0 && theta < kTwoPi)) throw ArgumentError("azimuth must lie in [0, 2pi)");
    const auto idx = static_cast<int>(std::floor(theta * n_theta / kTwoPi));
    return std::min(idx, n_theta - 1);
}

double azimuth_bin_center(int bin, int n_theta) { return (bin + 0.5) * kTwoPi / n_theta; }

double wrap_angle(double theta) {
    double w = std::fmod(theta, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w = 0.0;
    return w;
}

} // namespace bladerom
