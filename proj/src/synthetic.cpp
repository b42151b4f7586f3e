#include "bladerom/synthetic.hpp"

#include "bladerom/azimuthal_rom.hpp"
#include "bladerom/csv.hpp"
#include "bladerom/decomposition.hpp"
#include "bladerom/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>

namespace bladerom {

void SyntheticCaseSpec::validate() const {
    const int n = order();
    if (n < 1) throw ArgumentError("synthetic spec: at least one true mode required");
    if (true_modes.rows() != grid.n_dof() || mean_field.size() != grid.n_dof()) {
        throw ArgumentError("synthetic spec: mode/mean length does not match the grid");
    }
    const Eigen::VectorXd w = quadrature_weights(grid);
    const Eigen::MatrixXd gram = true_modes.transpose() * w.asDiagonal() * true_modes;
    if ((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-10) {
        throw ArgumentError("synthetic spec: true modes are not orthonormal under the discrete inner product");
    }
    if (azimuthal_mean.rows() != n || azimuthal_mean.cols() < 1 || azimuthal_mean.cols() % 2 != 1 ||
        azimuthal_mean.cols() > 1 + 2 * kDefaultHarmonics) {
        throw ArgumentError("synthetic spec: azimuthal mean table must be N x (1+2K) with K <= 6");
    }
    if (ar_rho.size() != n || ar_sigma.size() != n) throw ArgumentError("synthetic spec: AR parameters need N entries");
    for (int i = 0; i < n; ++i) {
        if (!(ar_rho[i] >= 0.0 && ar_rho[i] < 1.0)) throw ArgumentError("synthetic spec: AR lag coefficient outside [0,1)");
        if (!(ar_sigma[i] >= 0.0)) throw ArgumentError("synthetic spec: negative AR innovation");
    }
    if (harmonic_content.rows() != n || harmonic_content.cols() != 3) {
        throw ArgumentError("synthetic spec: harmonic content must be N x 3");
    }
    if (!(noise_sigma >= 0.0)) throw ArgumentError("synthetic spec: negative noise level");
    if (!(duration_s > 0.0 && f_s > 0.0)) throw ArgumentError("synthetic spec: duration and f_s must be positive");
    if (!(omega >= 0.0)) throw ArgumentError("synthetic spec: negative rotor speed");
    if (!(wind_rho >= 0.0 && wind_rho < 1.0)) throw ArgumentError("synthetic spec: wind lag coefficient outside [0,1)");
    if (!(u_mean > 0.0) || !(ti > 0.0 && ti < 1.0)) throw ArgumentError("synthetic spec: need u_mean > 0 and ti in (0,1)");
    for (int c = 0; c < 3; ++c) {
        for (int k = 0; k < n; ++k) {
            if (true_modes(grid.row(c, 0), k) != 0.0) throw ArgumentError("synthetic spec: modes must vanish at the root");
        }
    }
    if (torsion) {
        const auto& t = *torsion;
        if (t.map.cols() != n || t.modes.rows() != grid.n_dof() || t.map.rows() != t.modes.cols() ||
            t.mean_field.size() != grid.n_dof()) {
            throw ArgumentError("synthetic spec: torsion map/modes have inconsistent shapes");
        }
        if (t.noise_sigma.size() != 0 && t.noise_sigma.size() != grid.n_dof()) {
            throw ArgumentError("synthetic spec: torsion noise must have one entry per dof");
        }
    }
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& candidates, const BladeGrid& grid) {
    const Eigen::VectorXd w = quadrature_weights(grid);
    Eigen::MatrixXd q = candidates;
    for (Eigen::Index k = 0; k < q.cols(); ++k) {
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index j = 0; j < k; ++j) {
                const double proj = (w.array() * q.col(j).array() * q.col(k).array()).sum();
                q.col(k) -= proj * q.col(j);
            }
        }
        const double norm = std::sqrt((w.array() * q.col(k).array().square()).sum());
        if (!(norm > 0.0)) throw ArgumentError("orthonormalize: candidate columns are linearly dependent");
        q.col(k) /= norm;
    }
    return q;
}

Eigen::MatrixXd polynomial_modes(const BladeGrid& grid, int count, int first_power) {
    static constexpr int dominant[4] = {0, 1, 0, 2};
    const int n_z = grid.n_z();
    Eigen::MatrixXd cand = Eigen::MatrixXd::Zero(grid.n_dof(), count);
    for (int k = 0; k < count; ++k) {
        const int main = dominant[k % 4];
        const double p = first_power + k;
        for (int i = 0; i < n_z; ++i) {
            const double z = grid.z_norm()[static_cast<std::size_t>(i)];
            for (int c = 0; c < 3; ++c) {
                const double weight = c == main ? 1.0 : (c == (main + 1) % 3 ? 0.2 : -0.05);
                const double power = c == main ? p : p + 1.0;
                cand(grid.row(c, i), k) = weight * std::pow(z, power);
            }
        }
    }
    Eigen::MatrixXd modes = orthonormalize(cand, grid);
    for (int c = 0; c < 3; ++c) modes.row(grid.row(c, 0)).setZero();
    return modes;
}

SyntheticCaseSpec blade_like_spec(const BladeGrid& grid, double u_mean, double ti) {
    SyntheticCaseSpec s;
    s.grid = grid;
    s.u_mean = u_mean;
    s.ti = ti;
    const int n = 4;
    s.true_modes = polynomial_modes(grid, n);

    s.mean_field.resize(grid.n_dof());
    for (int i = 0; i < grid.n_z(); ++i) {
        const double z = grid.z_norm()[static_cast<std::size_t>(i)];
        s.mean_field[grid.row(0, i)] = 1.5 * z * z;
        s.mean_field[grid.row(1, i)] = -0.4 * z * z;
        s.mean_field[grid.row(2, i)] = -0.05 * z * z * z;
    }

    // Aerodynamic load factor: rises to rated wind speed, then eases with pitch.
    const double rated = 10.6;
    const double load = u_mean <= rated ? u_mean / rated : rated / u_mean;
    const double turb = ti / 0.1;

    s.azimuthal_mean = Eigen::MatrixXd::Zero(n, 1 + 2 * kDefaultHarmonics);
    auto c = [](int k) { return 2 * k - 1; };
    auto sn = [](int k) { return 2 * k; };
    s.azimuthal_mean(0, 0) = 2.0 * load;
    s.azimuthal_mean(0, c(1)) = 1.2 * load;
    s.azimuthal_mean(0, c(2)) = 0.25 * load;
    s.azimuthal_mean(1, 0) = -0.2;
    s.azimuthal_mean(1, sn(1)) = 0.4;
    s.azimuthal_mean(2, 0) = 0.15 * load;
    s.azimuthal_mean(2, c(3)) = 0.12 * load;
    s.azimuthal_mean(2, sn(2)) = 0.06 * load;
    s.azimuthal_mean(3, 0) = 0.04 * load;
    s.azimuthal_mean(3, sn(3)) = 0.04 * load;
    s.azimuthal_mean(3, c(4)) = 0.02 * load;

    s.ar_rho = Eigen::VectorXd::Constant(n, 0.99);
    const Eigen::Vector4d stationary_std(0.3, 0.1, 0.05, 0.025);
    s.ar_sigma = stationary_std * turb * std::sqrt(1.0 - 0.99 * 0.99);

    s.harmonic_content.resize(n, 3);
    s.harmonic_content << 0.15 * load, 0.08 * load, 0.04 * load, 0.03, 0.01, 0.01, 0.01, 0.01, 0.01, 0.005, 0.005,
        0.005;
    s.omega = 1.0;
    return s;
}

void attach_linear_torsion(SyntheticCaseSpec& spec, std::uint64_t map_seed) {
    const int n = spec.order();
    const int j = n + 1;
    SyntheticTorsion t;
    std::mt19937_64 rng(map_seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    t.map.resize(j, n);
    for (int r = 0; r < j; ++r) {
        for (int q = 0; q < n; ++q) t.map(r, q) = 0.02 * uni(rng) / (1.0 + r);
    }
    // Rotation modes: twist-dominated shapes with powers offset from the deflection family.
    Eigen::MatrixXd modes = polynomial_modes(spec.grid, j, 1);
    t.modes = modes;
    t.mean_field = Eigen::VectorXd::Zero(spec.grid.n_dof());
    for (int i = 0; i < spec.grid.n_z(); ++i) {
        const double z = spec.grid.z_norm()[static_cast<std::size_t>(i)];
        t.mean_field[spec.grid.row(2, i)] = 0.01 * z;
    }
    spec.torsion = std::move(t);
}

std::vector<double> ar1_series(double rho, double sigma_w, std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> x(n);
    if (n == 0) return x;
    const double stationary = sigma_w / std::sqrt(1.0 - rho * rho);
    x[0] = stationary * normal(rng);
    for (std::size_t k = 1; k < n; ++k) x[k] = rho * x[k - 1] + sigma_w * normal(rng);
    return x;
}

GeneratedCase generate_case(const SyntheticCaseSpec& spec, std::uint64_t seed) {
    spec.validate();
    const int n = spec.order();
    const auto n_t = static_cast<Eigen::Index>(std::llround(spec.duration_s * spec.f_s));
    if (n_t < 1) throw ArgumentError("generate_case: record shorter than one sample");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    std::normal_distribution<double> normal(0.0, 1.0);

    GeneratedCase out;
    auto& truth = out.truth;
    truth.true_modes = spec.true_modes;
    truth.azimuthal_mean = spec.azimuthal_mean;
    truth.harmonic_phase.resize(n, 3);
    for (int i = 0; i < n; ++i) {
        for (int h = 0; h < 3; ++h) truth.harmonic_phase(i, h) = phase(rng);
    }

    std::vector<std::vector<double>> fluct;
    for (int i = 0; i < n; ++i) {
        fluct.push_back(ar1_series(spec.ar_rho[i], spec.ar_sigma[i], static_cast<std::size_t>(n_t), rng));
    }
    const double wind_sigma = spec.ti * spec.u_mean;
    const auto wind = ar1_series(spec.wind_rho, wind_sigma * std::sqrt(1.0 - spec.wind_rho * spec.wind_rho),
                                 static_cast<std::size_t>(n_t), rng);

    SnapshotEnsemble& e = out.ensemble;
    e.grid = spec.grid;
    e.f_s = spec.f_s;
    e.condition = ConditionKey{spec.u_mean, spec.ti, static_cast<long>(seed)};
    e.D.resize(spec.grid.n_dof(), n_t);
    e.t.resize(static_cast<std::size_t>(n_t));
    e.theta.resize(static_cast<std::size_t>(n_t));
    e.omega.assign(static_cast<std::size_t>(n_t), spec.omega);
    e.u_raw.resize(static_cast<std::size_t>(n_t));
    truth.a_true.resize(n, n_t);

    for (Eigen::Index k = 0; k < n_t; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const double t = static_cast<double>(k) / spec.f_s;
        const double theta = wrap_angle(spec.omega * t);
        e.t[ku] = t;
        e.theta[ku] = theta;
        e.u_raw[ku] = spec.u_mean + wind[ku];
        for (int i = 0; i < n; ++i) {
            double a = fourier_eval(spec.azimuthal_mean.row(i).transpose(), theta) + fluct[static_cast<std::size_t>(i)][ku];
            for (int h = 0; h < 3; ++h) {
                a += spec.harmonic_content(i, h) * std::cos((h + 1) * theta + truth.harmonic_phase(i, h));
            }
            truth.a_true(i, k) = a;
        }
    }
    e.D = (spec.true_modes * truth.a_true).colwise() + spec.mean_field;
    if (spec.noise_sigma > 0.0) {
        for (Eigen::Index k = 0; k < n_t; ++k) {
            for (Eigen::Index r = 0; r < e.D.rows(); ++r) e.D(r, k) += spec.noise_sigma * normal(rng);
        }
    }
    e.u_filt = smooth_wind(e.u_raw, kDefaultWindAlpha);

    if (spec.torsion) {
        const auto& ts = *spec.torsion;
        truth.b_true = ts.map * truth.a_true;
        truth.tau_clean = (ts.modes * *truth.b_true).colwise() + ts.mean_field;
        SnapshotEnsemble tau = e;
        tau.D = *truth.tau_clean;
        if (ts.noise_sigma.size() > 0) {
            for (Eigen::Index k = 0; k < n_t; ++k) {
                for (Eigen::Index r = 0; r < tau.D.rows(); ++r) tau.D(r, k) += ts.noise_sigma[r] * normal(rng);
            }
        }
        out.torsion = std::move(tau);
    }
    return out;
}

std::filesystem::path write_generated_case(const std::filesystem::path& directory, const std::string& name,
                                           const GeneratedCase& generated) {
    const auto manifest = save_case(directory, name, generated.ensemble,
                                    generated.torsion ? &*generated.torsion : nullptr);
    const auto& truth = generated.truth;

    std::vector<std::string> mode_header;
    for (Eigen::Index k = 0; k < truth.true_modes.cols(); ++k) mode_header.push_back("mode_" + std::to_string(k + 1));
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(truth.true_modes.rows()));
    for (Eigen::Index r = 0; r < truth.true_modes.rows(); ++r) {
        for (Eigen::Index k = 0; k < truth.true_modes.cols(); ++k) rows[static_cast<std::size_t>(r)].push_back(truth.true_modes(r, k));
    }
    const std::string modes_file = name + "_true_modes.csv";
    csv::write(directory / modes_file, mode_header, rows);

    std::vector<std::string> a_header{"t"};
    for (Eigen::Index k = 0; k < truth.a_true.rows(); ++k) a_header.push_back("a_" + std::to_string(k + 1));
    rows.assign(static_cast<std::size_t>(truth.a_true.cols()), {});
    for (Eigen::Index t = 0; t < truth.a_true.cols(); ++t) {
        auto& row = rows[static_cast<std::size_t>(t)];
        row.push_back(generated.ensemble.t[static_cast<std::size_t>(t)]);
        for (Eigen::Index k = 0; k < truth.a_true.rows(); ++k) row.push_back(truth.a_true(k, t));
    }
    const std::string a_file = name + "_a_true.csv";
    csv::write(directory / a_file, a_header, rows);

    nlohmann::json j;
    j["true_modes_file"] = modes_file;
    j["a_true_file"] = a_file;
    auto coeffs = nlohmann::json::array();
    for (Eigen::Index r = 0; r < truth.azimuthal_mean.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < truth.azimuthal_mean.cols(); ++c) row.push_back(truth.azimuthal_mean(r, c));
        coeffs.push_back(std::move(row));
    }
    j["azimuthal_mean_coeffs"] = std::move(coeffs);
    std::ofstream out(directory / "ground_truth.json", std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + (directory / "ground_truth.json").string());
    out << j.dump(1) << '\n';
    return manifest;
}

} // namespace bladerom
