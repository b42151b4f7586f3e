#include "bladerom/pipeline.hpp"

#include "bladerom/csv.hpp"
#include "bladerom/decomposition.hpp"
#include "bladerom/errors.hpp"
#include "bladerom/fusion.hpp"
#include "bladerom/svg.hpp"
#include "bladerom/synthetic.hpp"
#include "bladerom/torsion.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace bladerom {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kComponents[3] = {"x", "y", "z"};
constexpr std::size_t kMaxPlotPoints = 2000;

std::string station_label(double z) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "z%.2f", z);
    return buf;
}

std::string condition_label(double u, double ti) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "u%.2f_ti%.3f", u, ti);
    return buf;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path.string());
    out << j.dump(2) << '\n';
}

std::vector<double> row_vector(const Eigen::MatrixXd& m, Eigen::Index r) {
    std::vector<double> v(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.cols(); ++k) v[static_cast<std::size_t>(k)] = m(r, k);
    return v;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::size_t plot_stride(std::size_t n) { return std::max<std::size_t>(1, (n + kMaxPlotPoints - 1) / kMaxPlotPoints); }

/// Collects artifact names relative to the output directory.
class Artifacts {
public:
    explicit Artifacts(fs::path root) : root_(std::move(root)) {}

    fs::path path(const std::string& name) const { return root_ / name; }
    void add(const std::string& name) { names_.insert(name); }
    void add(const std::vector<std::string>& names) { names_.insert(names.begin(), names.end()); }

    void table(const std::string& name, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
        csv::write(path(name), header, rows);
        add(name);
    }
    void plot(const std::string& name, const svg::Plot& p) {
        svg::write(path(name), p);
        add(name);
    }
    void document(const std::string& name, const json& j) {
        write_json(path(name), j);
        add(name);
    }
    [[nodiscard]] std::vector<std::string> list() const { return {names_.begin(), names_.end()}; }

private:
    fs::path root_;
    std::set<std::string> names_;
};

/// Scatter of two series with a CSV twin holding exactly the plotted points.
std::vector<std::string> write_scatter(const fs::path& dir, const std::string& stem, const std::string& title,
                                       const std::string& x_name, const std::string& y_name,
                                       const std::vector<double>& t, const std::vector<double>& x,
                                       const std::vector<double>& y) {
    const std::size_t stride = plot_stride(x.size());
    std::vector<std::vector<double>> rows;
    svg::Line points;
    points.markers = true;
    for (std::size_t k = 0; k < x.size(); k += stride) {
        rows.push_back({t[k], x[k], y[k]});
        points.x.push_back(x[k]);
        points.y.push_back(y[k]);
    }
    csv::write(dir / (stem + ".csv"), {"t", x_name, y_name}, rows);
    svg::Plot p;
    p.title = title;
    p.x_label = x_name;
    p.y_label = y_name;
    p.lines.push_back(points);
    svg::write(dir / (stem + ".svg"), p);
    return {stem + ".csv", stem + ".svg"};
}

std::vector<std::string> write_histogram(const fs::path& dir, const std::string& stem, const std::string& title,
                                         const std::string& x_label, const std::vector<double>& values) {
    const Histogram h = freedman_diaconis(values);
    std::vector<std::vector<double>> rows;
    for (std::size_t b = 0; b < h.counts.size(); ++b) rows.push_back({h.edges[b], h.edges[b + 1], h.counts[b]});
    csv::write(dir / (stem + ".csv"), {"edge_lo", "edge_hi", "count"}, rows);
    svg::Plot p;
    p.title = title;
    p.x_label = x_label;
    p.y_label = "count";
    p.bars.push_back({h.edges, h.counts, "", svg::palette(0)});
    svg::write(dir / (stem + ".svg"), p);
    return {stem + ".csv", stem + ".svg"};
}

} // namespace

// ---------------------------------------------------------------------------
// configuration

void PipelineConfig::validate() const {
    if (n_modes < 1) throw ValidationError("config: N must be >= 1");
    if (n_sensors < n_modes) {
        throw ValidationError("config: N = " + std::to_string(n_modes) + " exceeds n_P = " + std::to_string(n_sensors));
    }
    if (n_theta < 1) throw ValidationError("config: n_theta must be >= 1");
    if (n_harmonics < 0) throw ValidationError("config: n_F must be >= 0");
    if (torsion_modes < 0) throw ValidationError("config: torsion J must be >= 0");
    if (workers < 0) throw ValidationError("config: workers must be >= 0");
    for (double z : observation_stations) {
        if (!(z >= 0.0 && z <= 1.0)) throw ValidationError("config: observation station outside [0,1]");
    }
    for (double w : lnm_frequencies) {
        if (!(w > 0.0)) throw ValidationError("config: LNM frequencies must be positive");
    }
    try {
        (void)noise_from_json_text(noise_json, n_sensors);
    } catch (const Error& e) {
        throw ValidationError(std::string("config: noise: ") + e.what());
    }
    if (!synthetic) {
        if (training.empty()) throw ValidationError("config: no training cases");
        if (evaluation.empty()) throw ValidationError("config: no evaluation cases");
    } else {
        const auto& s = *synthetic;
        if (s.n_z < 2 || s.wind_speeds.empty() || s.training_seeds < 1 || s.evaluation_seeds < 0 ||
            !(s.duration_s > 0.0) || !(s.f_s > 0.0) || !(s.ti > 0.0 && s.ti < 1.0) || !(s.length_m > 0.0) ||
            !(s.omega > 0.0) || !(s.field_noise_sigma >= 0.0)) {
            throw ValidationError("config: invalid synthetic block");
        }
        for (double u : s.wind_speeds) {
            if (!(u > 0.0)) throw ValidationError("config: synthetic wind speeds must be positive");
        }
        if (s.evaluation_seeds == 0 && evaluation.empty()) throw ValidationError("config: no evaluation cases");
    }
    for (const auto* list : {&training, &evaluation}) {
        for (const auto& p : *list) {
            if (!fs::is_regular_file(p)) throw ValidationError("config: case manifest not found: " + p.string());
        }
    }
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw SchemaError("config " + path.string() + ": " + e.what());
    }
    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        const fs::path q(p);
        return q.is_absolute() ? q : base / q;
    };
    PipelineConfig c;
    try {
        for (const auto& p : j.value("training", std::vector<std::string>{})) c.training.push_back(resolve(p));
        for (const auto& p : j.value("evaluation", std::vector<std::string>{})) c.evaluation.push_back(resolve(p));
        c.n_modes = j.value("N", c.n_modes);
        c.n_sensors = j.value("n_P", c.n_sensors);
        c.n_theta = j.value("n_theta", c.n_theta);
        c.n_harmonics = j.value("n_F", c.n_harmonics);
        if (j.contains("noise")) c.noise_json = j.at("noise").dump();
        if (j.contains("estimation_mode")) c.mode = parse_estimation_mode(j.at("estimation_mode").get<std::string>());
        if (j.contains("covariance")) {
            const auto name = j.at("covariance").get<std::string>();
            if (name == "centered") {
                c.covariance = CovarianceConvention::centered;
            } else if (name == "raw_second_moment") {
                c.covariance = CovarianceConvention::raw_second_moment;
            } else {
                throw ValidationError("config: unknown covariance convention '" + name + "'");
            }
        }
        if (j.contains("pivot")) {
            const auto name = j.at("pivot").get<std::string>();
            if (name == "station") {
                c.pivot = PivotUnit::station;
            } else if (name == "scalar") {
                c.pivot = PivotUnit::scalar;
            } else {
                throw ValidationError("config: unknown pivot unit '" + name + "'");
            }
        }
        c.output_dir = resolve(j.value("output_dir", std::string("out")));
        c.seed = j.value("seed", c.seed);
        c.observation_stations = j.value("observation_stations", c.observation_stations);
        c.torsion_modes = j.value("J", c.torsion_modes);
        c.lnm_frequencies = j.value("lnm_frequencies", c.lnm_frequencies);
        c.workers = j.value("workers", c.workers);
        if (j.contains("synthetic")) {
            const auto& s = j.at("synthetic");
            SyntheticCasesConfig sc;
            sc.n_z = s.value("n_z", sc.n_z);
            sc.length_m = s.value("L_b", sc.length_m);
            sc.wind_speeds = s.value("wind_speeds", sc.wind_speeds);
            sc.ti = s.value("ti", sc.ti);
            sc.training_seeds = s.value("training_seeds", sc.training_seeds);
            sc.evaluation_seeds = s.value("evaluation_seeds", sc.evaluation_seeds);
            sc.duration_s = s.value("duration_s", sc.duration_s);
            sc.f_s = s.value("f_s", sc.f_s);
            sc.omega = s.value("omega", sc.omega);
            sc.field_noise_sigma = s.value("field_noise_sigma", sc.field_noise_sigma);
            sc.torsion = s.value("torsion", sc.torsion);
            c.synthetic = sc;
        }
    } catch (const json::exception& e) {
        throw SchemaError("config " + path.string() + ": " + e.what());
    } catch (const ArgumentError& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return c;
}

// ---------------------------------------------------------------------------
// synthetic cases

std::pair<std::vector<fs::path>, std::vector<fs::path>>
generate_synthetic_cases(const SyntheticCasesConfig& config, const fs::path& directory, std::uint64_t seed) {
    std::vector<double> z(static_cast<std::size_t>(config.n_z));
    for (int i = 0; i < config.n_z; ++i) z[static_cast<std::size_t>(i)] = static_cast<double>(i) / (config.n_z - 1);
    z.back() = 1.0;
    const BladeGrid grid(z, config.length_m);

    std::vector<fs::path> training;
    std::vector<fs::path> evaluation;
    std::uint64_t case_index = 0;
    for (std::size_t ci = 0; ci < config.wind_speeds.size(); ++ci) {
        const double u = config.wind_speeds[ci];
        SyntheticCaseSpec spec = blade_like_spec(grid, u, config.ti);
        spec.duration_s = config.duration_s;
        spec.f_s = config.f_s;
        spec.omega = config.omega;
        spec.noise_sigma = config.field_noise_sigma;
        if (config.torsion) attach_linear_torsion(spec, seed * 7919 + 1);
        const int total = config.training_seeds + config.evaluation_seeds;
        for (int s = 0; s < total; ++s) {
            const bool train = s < config.training_seeds;
            const std::uint64_t case_seed = seed * 1000 + ++case_index;
            const auto generated = generate_case(spec, case_seed);
            char name[64];
            std::snprintf(name, sizeof name, "%s_u%05.2f_s%02d", train ? "train" : "eval", u, s + 1);
            const auto manifest = write_generated_case(directory / name, name, generated);
            (train ? training : evaluation).push_back(manifest);
        }
    }
    return {training, evaluation};
}

// ---------------------------------------------------------------------------
// dataset report

std::vector<std::string> write_case_report(const LoadedCase& loaded, const fs::path& directory,
                                           const std::string& prefix, const ReportOptions& options) {
    const auto& e = loaded.ensemble;
    const int tip = e.grid.n_z() - 1;
    std::vector<std::string> written;
    auto add = [&](const std::vector<std::string>& names) { written.insert(written.end(), names.begin(), names.end()); };

    std::array<std::vector<double>, 3> tip_series;
    for (int c = 0; c < 3; ++c) tip_series[static_cast<std::size_t>(c)] = row_vector(e.D, e.grid.row(c, tip));

    double omega_mean = 0.0;
    for (double w : e.omega) omega_mean += w;
    omega_mean /= static_cast<double>(e.omega.size());
    if (omega_mean > 0.0 && e.n_t() >= 2) {
        const double f_1p = omega_mean / kTwoPi;
        std::array<Spectrum, 3> raw;
        std::array<std::optional<Spectrum>, 3> smooth;
        for (std::size_t c = 0; c < 3; ++c) {
            raw[c] = psd(tip_series[c], e.f_s, f_1p);
            if (raw[c].power.size() >= static_cast<std::size_t>(options.smoothing.window)) {
                smooth[c] = psd(tip_series[c], e.f_s, f_1p, PsdOptions{0, 0.5, options.smoothing});
            }
        }
        std::vector<std::string> header{"f_hat"};
        for (const char* c : kComponents) header.push_back(std::string("psd_") + c);
        if (smooth[0]) {
            for (const char* c : kComponents) header.push_back(std::string("psd_") + c + "_smooth");
        }
        std::vector<std::vector<double>> rows;
        for (std::size_t k = 0; k < raw[0].f_hat.size(); ++k) {
            std::vector<double> row{raw[0].f_hat[k]};
            for (std::size_t c = 0; c < 3; ++c) row.push_back(raw[c].power[k]);
            if (smooth[0]) {
                for (std::size_t c = 0; c < 3; ++c) row.push_back(smooth[c]->power[k]);
            }
            rows.push_back(std::move(row));
        }
        csv::write(directory / (prefix + "psd_tip.csv"), header, rows);
        written.push_back(prefix + "psd_tip.csv");
        svg::Plot p;
        p.title = "Tip displacement PSD";
        p.x_label = "f / f_1P";
        p.y_label = "PSD (m^2/Hz)";
        p.log_y = true;
        for (std::size_t c = 0; c < 3; ++c) {
            const auto& spec = smooth[c] ? *smooth[c] : raw[c];
            p.lines.push_back({spec.f_hat, spec.power, std::string("u_") + kComponents[c], svg::palette(c), false});
        }
        svg::write(directory / (prefix + "psd_tip.svg"), p);
        written.push_back(prefix + "psd_tip.svg");
    }

    for (std::size_t c = 0; c < 3; ++c) {
        add(write_histogram(directory, prefix + "hist_tip_" + kComponents[c], "Tip displacement distribution",
                            std::string("u_") + kComponents[c] + " (m)", tip_series[c]));
    }
    const std::pair<int, int> pairs[3] = {{0, 1}, {0, 2}, {1, 2}};
    for (const auto& [a, b] : pairs) {
        const std::string stem = prefix + "coupling_tip_" + kComponents[a] + kComponents[b];
        add(write_scatter(directory, stem, "Tip coupling", std::string("u_") + kComponents[a],
                          std::string("u_") + kComponents[b], e.t, tip_series[static_cast<std::size_t>(a)],
                          tip_series[static_cast<std::size_t>(b)]));
    }
    if (loaded.torsion) {
        const auto tau_z = row_vector(loaded.torsion->D, e.grid.row(2, tip));
        add(write_scatter(directory, prefix + "coupling_tip_x_tauz", "Flapwise-torsion coupling", "u_x", "tau_z", e.t,
                          tip_series[0], tau_z));
    }

    if (!options.lnm_frequencies.empty()) {
        const LnmResult lnm = lnm_amplitudes(e, options.lnm_frequencies);
        std::vector<std::string> header{"component", "z_norm"};
        for (std::size_t k = 0; k < options.lnm_frequencies.size(); ++k) header.push_back("shape_" + std::to_string(k + 1));
        std::vector<std::vector<double>> rows;
        for (int c = 0; c < 3; ++c) {
            for (int i = 0; i < e.grid.n_z(); ++i) {
                std::vector<double> row{static_cast<double>(c), e.grid.z_norm()[static_cast<std::size_t>(i)]};
                for (Eigen::Index k = 0; k < lnm.shapes.cols(); ++k) row.push_back(lnm.shapes(e.grid.row(c, i), k));
                rows.push_back(std::move(row));
            }
        }
        csv::write(directory / (prefix + "lnm_shapes.csv"), header, rows);
        rows.clear();
        for (Eigen::Index k = 0; k < lnm.frequencies.size(); ++k) rows.push_back({lnm.frequencies[k], lnm.amplitudes[k]});
        csv::write(directory / (prefix + "lnm_amplitudes.csv"), {"omega", "amplitude"}, rows);
        svg::Plot p;
        p.title = "Harmonic shapes (flapwise component)";
        p.x_label = "z / L_b";
        p.y_label = "shape";
        for (Eigen::Index k = 0; k < lnm.shapes.cols(); ++k) {
            svg::Line l;
            l.x = e.grid.z_norm();
            for (int i = 0; i < e.grid.n_z(); ++i) l.y.push_back(lnm.shapes(e.grid.row(0, i), k));
            l.label = "shape " + std::to_string(k + 1);
            l.color = svg::palette(static_cast<std::size_t>(k));
            p.lines.push_back(std::move(l));
        }
        svg::write(directory / (prefix + "lnm_shapes.svg"), p);
        add({prefix + "lnm_shapes.csv", prefix + "lnm_amplitudes.csv", prefix + "lnm_shapes.svg"});
    }
    return written;
}

// ---------------------------------------------------------------------------
// pipeline

namespace {

struct Models {
    ModalBasis basis;
    SensorSet sensors;
    NoiseModel noise;
    AzimuthalRomModel rom;
    std::optional<TorsionModel> torsion;
    std::vector<int> obs_stations;
};

struct CaseOutput {
    json summary;
    std::vector<std::string> artifacts;
};

template <class E>
void rethrow_as(const Error& e, const std::string& context) {
    if (dynamic_cast<const E*>(&e) != nullptr) throw E(context + e.what());
}

[[noreturn]] void rethrow_with_stage(const Error& e, const std::string& stage) {
    const std::string ctx = "stage " + stage + ": ";
    rethrow_as<IoError>(e, ctx);
    rethrow_as<SchemaError>(e, ctx);
    rethrow_as<ValidationError>(e, ctx);
    rethrow_as<ArgumentError>(e, ctx);
    rethrow_as<NumericalError>(e, ctx);
    rethrow_as<StateError>(e, ctx);
    throw Error(ctx + e.what());
}

CaseOutput estimate_case(const LoadedCase& loaded, const Models& m, const PipelineConfig& cfg, std::size_t index,
                         const fs::path& out_dir) {
    const auto& e = loaded.ensemble;
    const auto& grid = e.grid;
    const int n = m.basis.order();
    const int n_z = grid.n_z();
    const auto n_t = static_cast<std::size_t>(e.n_t());
    const std::string name = loaded.manifest.name;

    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(index)};
    std::mt19937_64 rng(seq);
    const SparseEstimator estimator(m.sensors, m.noise, cfg.mode);

    enum Source { sparse = 0, rom = 1, fused = 2 };
    constexpr const char* source_names[3] = {"sparse", "rom", "fused"};
    Eigen::MatrixXd reduced_sq = Eigen::MatrixXd::Zero(n, 3);
    std::array<Eigen::MatrixXd, 3> field_sq;
    for (auto& f : field_sq) f = Eigen::MatrixXd::Zero(3, n_z);
    Eigen::MatrixXd tau_sq;
    Eigen::MatrixXd tau_sum;
    Eigen::MatrixXd tau_sum_sq;
    const bool do_torsion = m.torsion && loaded.torsion;
    if (do_torsion) {
        tau_sq = Eigen::MatrixXd::Zero(3, n_z);
        tau_sum = Eigen::MatrixXd::Zero(3, n_z);
        tau_sum_sq = Eigen::MatrixXd::Zero(3, n_z);
    }
    int regularized = 0;

    const auto& obs = m.obs_stations;
    std::vector<std::string> header{"t", "theta"};
    for (int s : obs) {
        const std::string z = station_label(grid.z_norm()[static_cast<std::size_t>(s)]);
        for (const char* c : kComponents) {
            for (const char* what : {"true", "sparse", "rom", "fused", "fused_std"}) {
                header.push_back(std::string(what) + "_" + c + "_" + z);
            }
        }
    }
    for (const char* s : {"trace_sparse", "trace_rom", "trace_fused"}) header.push_back(s);
    std::vector<std::vector<double>> rows;
    rows.reserve(n_t);
    Eigen::MatrixXd a_hist(n, static_cast<Eigen::Index>(n_t));
    Eigen::MatrixXd a_fused_hist(n, static_cast<Eigen::Index>(n_t));

    for (std::size_t k = 0; k < n_t; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        const Eigen::VectorXd truth = e.D.col(kk);
        const Eigen::VectorXd a_ref = project(truth, m.basis);
        const Eigen::VectorXd y = observe(truth, m.sensors, &m.noise, rng);
        const GaussianReduced meas = estimator(y);
        const GaussianReduced prior = evaluate_rom(m.rom, e.theta[k], e.u_filt[k], e.condition.ti);
        const FusionResult fr = fuse(prior, meas);
        regularized += fr.regularized ? 1 : 0;
        a_hist.col(kk) = a_ref;
        a_fused_hist.col(kk) = fr.posterior.mean;

        const Eigen::VectorXd* means[3] = {&meas.mean, &prior.mean, &fr.posterior.mean};
        Eigen::VectorXd fields[3];
        for (int s = 0; s < 3; ++s) {
            reduced_sq.col(s) += (*means[s] - a_ref).array().square().matrix();
            fields[s] = m.basis.mean_field + m.basis.modes * *means[s];
            const Eigen::VectorXd err = fields[s] - truth;
            for (int c = 0; c < 3; ++c) {
                field_sq[static_cast<std::size_t>(s)].row(c) += err.segment(c * n_z, n_z).array().square().matrix().transpose();
            }
        }
        if (do_torsion) {
            const Eigen::VectorXd tau_true = loaded.torsion->D.col(kk);
            const Eigen::VectorXd tau_est = infer_torsion(fr.posterior.mean, *m.torsion, e.condition.u_mean, e.condition.ti);
            const Eigen::VectorXd err = tau_est - tau_true;
            for (int c = 0; c < 3; ++c) {
                tau_sq.row(c) += err.segment(c * n_z, n_z).array().square().matrix().transpose();
                tau_sum.row(c) += tau_true.segment(c * n_z, n_z).transpose();
                tau_sum_sq.row(c) += tau_true.segment(c * n_z, n_z).array().square().matrix().transpose();
            }
        }

        std::vector<double> row{e.t[k], e.theta[k]};
        for (int s : obs) {
            for (int c = 0; c < 3; ++c) {
                const int r = grid.row(c, s);
                const double var = m.basis.modes.row(r) * fr.posterior.covariance * m.basis.modes.row(r).transpose();
                row.insert(row.end(), {truth[r], fields[0][r], fields[1][r], fields[2][r], std::sqrt(std::max(var, 0.0))});
            }
        }
        row.insert(row.end(), {meas.covariance.trace(), prior.covariance.trace(), fr.posterior.covariance.trace()});
        rows.push_back(std::move(row));
    }

    CaseOutput out;
    const std::string recon_file = "reconstruction_" + name + ".csv";
    csv::write(out_dir / recon_file, header, rows);
    out.artifacts.push_back(recon_file);

    const double inv_t = 1.0 / static_cast<double>(n_t);
    json s;
    s["name"] = name;
    s["u_mean"] = e.condition.u_mean;
    s["ti"] = e.condition.ti;
    s["seed"] = e.condition.seed;
    s["n_t"] = n_t;
    s["regularized_steps"] = regularized;
    json reduced;
    json reduced_total;
    for (int src = 0; src < 3; ++src) {
        const Eigen::VectorXd r = (reduced_sq.col(src) * inv_t).cwiseSqrt();
        reduced[source_names[src]] = to_std(r);
        reduced_total[source_names[src]] = std::sqrt(reduced_sq.col(src).sum() * inv_t);
    }
    s["reduced_rmse"] = reduced;
    s["reduced_rmse_total"] = reduced_total;

    json field;
    field["z_norm"] = grid.z_norm();
    json at_obs;
    std::vector<double> obs_z;
    for (int st : obs) obs_z.push_back(grid.z_norm()[static_cast<std::size_t>(st)]);
    at_obs["z_norm"] = obs_z;
    for (int c = 0; c < 3; ++c) {
        json comp;
        json comp_obs;
        for (int src = 0; src < 3; ++src) {
            const Eigen::VectorXd r = (field_sq[static_cast<std::size_t>(src)].row(c).transpose() * inv_t).cwiseSqrt();
            comp[source_names[src]] = to_std(r);
            std::vector<double> ro;
            for (int st : obs) ro.push_back(r[st]);
            comp_obs[source_names[src]] = ro;
        }
        field[kComponents[c]] = comp;
        at_obs[kComponents[c]] = comp_obs;
    }
    s["field_rmse"] = field;
    s["observation_rmse"] = at_obs;

    if (do_torsion) {
        json tj;
        for (int c = 0; c < 3; ++c) {
            std::vector<double> rmse;
            std::vector<double> r2;
            for (int i = 0; i < n_z; ++i) {
                rmse.push_back(std::sqrt(tau_sq(c, i) * inv_t));
                const double mean = tau_sum(c, i) * inv_t;
                const double ss_tot = tau_sum_sq(c, i) - static_cast<double>(n_t) * mean * mean;
                r2.push_back(ss_tot > 0.0 ? 1.0 - tau_sq(c, i) / ss_tot : std::nan(""));
            }
            tj[kComponents[c]] = {{"rmse", rmse}, {"r_squared", r2}};
        }
        s["torsion"] = tj;
    }
    out.summary = s;

    // Traces at the outermost observation station, flapwise.
    if (!obs.empty()) {
        const int st = obs.back();
        const int r = grid.row(0, st);
        const std::size_t stride = plot_stride(n_t);
        std::vector<std::vector<double>> trows;
        svg::Line lt{{}, {}, "true", svg::palette(7), false};
        svg::Line ls{{}, {}, "sparse", svg::palette(0), false};
        svg::Line lr{{}, {}, "ROM", svg::palette(2), false};
        svg::Line lf{{}, {}, "fused", svg::palette(1), false};
        for (std::size_t k = 0; k < n_t; k += stride) {
            const auto kk = static_cast<Eigen::Index>(k);
            const auto& row = rows[k];
            const std::size_t base = 2 + (obs.size() - 1) * 15;
            (void)kk;
            trows.push_back({e.t[k], e.D(r, kk), row[base + 1], row[base + 2], row[base + 3]});
            for (auto* l : {&lt, &ls, &lr, &lf}) l->x.push_back(e.t[k]);
            lt.y.push_back(e.D(r, kk));
            ls.y.push_back(row[base + 1]);
            lr.y.push_back(row[base + 2]);
            lf.y.push_back(row[base + 3]);
        }
        const std::string stem = "trace_" + name;
        csv::write(out_dir / (stem + ".csv"), {"t", "true", "sparse", "rom", "fused"}, trows);
        svg::Plot p;
        p.title = "Flapwise displacement at " + station_label(grid.z_norm()[static_cast<std::size_t>(st)]);
        p.x_label = "t (s)";
        p.y_label = "u_x (m)";
        p.lines = {ls, lr, lt, lf};
        svg::write(out_dir / (stem + ".svg"), p);
        out.artifacts.push_back(stem + ".csv");
        out.artifacts.push_back(stem + ".svg");

        // Distribution of true vs fused on shared Freedman-Diaconis bins.
        const auto truth_series = row_vector(e.D, r);
        const Histogram h = freedman_diaconis(truth_series);
        std::vector<double> fused_counts(h.counts.size(), 0.0);
        const double lo = h.edges.front();
        const double span = h.edges.back() - lo;
        for (std::size_t k = 0; k < n_t; ++k) {
            const double v = rows[k][2 + (obs.size() - 1) * 15 + 3];
            if (v < lo || v > h.edges.back()) continue;
            auto b = static_cast<std::size_t>(std::floor((v - lo) / span * static_cast<double>(h.counts.size())));
            b = std::min(b, h.counts.size() - 1);
            fused_counts[b] += 1.0;
        }
        std::vector<std::vector<double>> hrows;
        for (std::size_t b = 0; b < h.counts.size(); ++b) hrows.push_back({h.edges[b], h.edges[b + 1], h.counts[b], fused_counts[b]});
        const std::string hstem = "hist_" + name;
        csv::write(out_dir / (hstem + ".csv"), {"edge_lo", "edge_hi", "count_true", "count_fused"}, hrows);
        svg::Plot hp;
        hp.title = "Flapwise distribution at " + station_label(grid.z_norm()[static_cast<std::size_t>(st)]);
        hp.x_label = "u_x (m)";
        hp.y_label = "count";
        hp.bars.push_back({h.edges, h.counts, "true", svg::palette(7)});
        hp.bars.push_back({h.edges, fused_counts, "fused", svg::palette(1)});
        svg::write(out_dir / (hstem + ".svg"), hp);
        out.artifacts.push_back(hstem + ".csv");
        out.artifacts.push_back(hstem + ".svg");
    }

    // Modal coupling of the reference coefficients.
    std::vector<std::pair<int, int>> pairs;
    for (const auto& pr : {std::pair{0, 1}, std::pair{0, n - 1}, std::pair{1, n - 1}}) {
        if (pr.first < pr.second && pr.second < n && std::find(pairs.begin(), pairs.end(), pr) == pairs.end()) {
            pairs.push_back(pr);
        }
    }
    for (const auto& [a, b] : pairs) {
        const std::string stem = "coupling_modal_" + name + "_a" + std::to_string(a + 1) + "a" + std::to_string(b + 1);
        const auto names = write_scatter(out_dir, stem, "Modal coupling", "a_" + std::to_string(a + 1),
                                         "a_" + std::to_string(b + 1), e.t, row_vector(a_hist, a), row_vector(a_hist, b));
        out.artifacts.insert(out.artifacts.end(), names.begin(), names.end());
    }

    ReportOptions ro;
    ro.lnm_frequencies = cfg.lnm_frequencies;
    const auto report = write_case_report(loaded, out_dir, "report_" + name + "_", ro);
    out.artifacts.insert(out.artifacts.end(), report.begin(), report.end());
    return out;
}

std::vector<std::string> write_rom_plots(const AzimuthalRomModel& rom, std::span<const BinStatistics> stats,
                                         const fs::path& dir) {
    std::vector<std::string> written;
    for (const auto& st : stats) {
        const std::string cond = condition_label(st.condition.u_mean, st.condition.ti);
        for (int i = 0; i < rom.dim; ++i) {
            std::vector<std::vector<double>> rows;
            svg::Line mean_line{{}, {}, "ROM mean", svg::palette(1), false};
            svg::Line bin_line{{}, {}, "bin mean", svg::palette(0), true};
            svg::Band band{{}, {}, {}, svg::palette(1)};
            for (int b = 0; b < st.n_theta; ++b) {
                const double theta = azimuth_bin_center(b, st.n_theta);
                const GaussianReduced g = evaluate_rom(rom, theta, st.condition.u_mean, st.condition.ti);
                const double sd = std::sqrt(std::max(g.covariance(i, i), 0.0));
                const double bm = st.empty(b) ? std::nan("") : st.means[static_cast<std::size_t>(b)][i];
                rows.push_back({theta, bm, g.mean[i], g.mean[i] - sd, g.mean[i] + sd});
                mean_line.x.push_back(theta);
                mean_line.y.push_back(g.mean[i]);
                bin_line.x.push_back(theta);
                bin_line.y.push_back(bm);
                band.x.push_back(theta);
                band.lower.push_back(g.mean[i] - sd);
                band.upper.push_back(g.mean[i] + sd);
            }
            const std::string stem = "rom_" + cond + "_a" + std::to_string(i + 1);
            csv::write(dir / (stem + ".csv"), {"theta", "bin_mean", "rom_mean", "rom_lower", "rom_upper"}, rows);
            svg::Plot p;
            p.title = "Azimuthal model of a_" + std::to_string(i + 1) + " (" + cond + ")";
            p.x_label = "theta (rad)";
            p.y_label = "a_" + std::to_string(i + 1);
            p.bands.push_back(band);
            p.lines = {mean_line, bin_line};
            svg::write(dir / (stem + ".svg"), p);
            written.push_back(stem + ".csv");
            written.push_back(stem + ".svg");
        }
    }
    return written;
}

} // namespace

PipelineResult run_pipeline(const PipelineConfig& input) {
    PipelineConfig cfg = input;
    cfg.validate();
    const fs::path out_dir = cfg.output_dir;
    fs::create_directories(out_dir);
    fs::remove(out_dir / "FAILED");
    Artifacts art(out_dir);
    std::string stage;

    auto run_stage = [&](const std::string& name, auto&& fn) {
        stage = name;
        try {
            fn();
        } catch (const Error& e) {
            std::ofstream marker(out_dir / "FAILED", std::ios::trunc);
            marker << "stage: " << name << '\n' << e.what() << '\n';
            rethrow_with_stage(e, name);
        } catch (const std::exception& e) {
            std::ofstream marker(out_dir / "FAILED", std::ios::trunc);
            marker << "stage: " << name << '\n' << e.what() << '\n';
            throw Error("stage " + name + ": " + e.what());
        }
    };

    if (cfg.synthetic) {
        run_stage("synth", [&] {
            const auto [train, eval] = generate_synthetic_cases(*cfg.synthetic, out_dir / "cases", cfg.seed);
            cfg.training.insert(cfg.training.end(), train.begin(), train.end());
            cfg.evaluation.insert(cfg.evaluation.end(), eval.begin(), eval.end());
        });
    }

    std::vector<LoadedCase> training;
    std::vector<LoadedCase> evaluation;
    run_stage("load", [&] {
        for (const auto& p : cfg.training) training.push_back(load_case(p));
        for (const auto& p : cfg.evaluation) evaluation.push_back(load_case(p));
        const BladeGrid& grid = training.front().grid;
        for (const auto* list : {&training, &evaluation}) {
            for (const auto& c : *list) {
                if (!(c.grid == grid)) throw ValidationError("case " + c.manifest.name + " uses a different grid");
            }
        }
        if (cfg.n_sensors > grid.n_z()) {
            throw ValidationError("n_P = " + std::to_string(cfg.n_sensors) + " exceeds the station count " +
                                  std::to_string(grid.n_z()));
        }
        std::set<std::string> names;
        for (const auto& c : evaluation) {
            if (!names.insert(c.manifest.name).second) throw ValidationError("duplicate evaluation case name " + c.manifest.name);
        }
    });

    auto reached = [&](PipelineStage st) { return static_cast<int>(cfg.stop_after) <= static_cast<int>(st); };
    auto finish = [&] {
        json listing;
        auto names = art.list();
        names.push_back("artifacts.json");
        std::sort(names.begin(), names.end());
        listing["artifacts"] = names;
        art.document("artifacts.json", listing);
        return PipelineResult{art.list()};
    };

    Models m;
    const BladeGrid grid = training.front().grid;
    run_stage("decompose", [&] {
        Eigen::Index cols = 0;
        for (const auto& c : training) cols += c.ensemble.D.cols();
        Eigen::MatrixXd d(grid.n_dof(), cols);
        Eigen::Index at = 0;
        for (const auto& c : training) {
            d.middleCols(at, c.ensemble.D.cols()) = c.ensemble.D;
            at += c.ensemble.D.cols();
        }
        m.basis = pod_fit(d, grid, cfg.n_modes);
        write_modes_csv(art.path("modes.csv"), m.basis);
        write_energies_csv(art.path("energies.csv"), m.basis);
        art.add(std::vector<std::string>{"modes.csv", "energies.csv"});
    });
    if (reached(PipelineStage::decompose)) return finish();

    run_stage("sensors", [&] {
        m.sensors = place_sensors(m.basis, cfg.n_sensors, cfg.pivot);
        m.noise = noise_from_json_text(cfg.noise_json, cfg.n_sensors);
        write_sensors_csv(art.path("sensors.csv"), m.sensors, grid);
        art.add("sensors.csv");
        for (double z : cfg.observation_stations) m.obs_stations.push_back(grid.nearest_station(z));
    });
    if (reached(PipelineStage::sensors)) return finish();

    std::vector<BinStatistics> stats;
    run_stage("fit-rom", [&] {
        std::map<std::pair<double, double>, std::vector<const LoadedCase*>> groups;
        for (const auto& c : training) groups[{c.ensemble.condition.ti, c.ensemble.condition.u_mean}].push_back(&c);
        for (const auto& [key, cases] : groups) {
            Eigen::Index cols = 0;
            for (const auto* c : cases) cols += c->ensemble.D.cols();
            Eigen::MatrixXd a(m.basis.order(), cols);
            std::vector<double> theta;
            Eigen::Index at = 0;
            for (const auto* c : cases) {
                a.middleCols(at, c->ensemble.D.cols()) = project_all(c->ensemble.D, m.basis);
                at += c->ensemble.D.cols();
                theta.insert(theta.end(), c->ensemble.theta.begin(), c->ensemble.theta.end());
            }
            BinStatistics st = bin_statistics(a, theta, cfg.n_theta, cfg.covariance);
            st.condition = cases.front()->ensemble.condition;
            stats.push_back(std::move(st));
        }
        m.rom = fit_rom(stats, cfg.n_harmonics);
        save_rom_json(art.path("rom.json"), m.rom);
        art.add("rom.json");
        art.add(write_rom_plots(m.rom, stats, out_dir));
    });
    if (reached(PipelineStage::fit_rom)) return finish();

    const bool have_torsion =
        std::all_of(training.begin(), training.end(), [](const LoadedCase& c) { return c.torsion.has_value(); });
    if (have_torsion) {
        run_stage("torsion", [&] {
            const int j = cfg.torsion_modes > 0 ? cfg.torsion_modes : cfg.n_modes + 1;
            Eigen::Index cols = 0;
            for (const auto& c : training) cols += c.torsion->D.cols();
            Eigen::MatrixXd tau(grid.n_dof(), cols);
            Eigen::Index at = 0;
            for (const auto& c : training) {
                tau.middleCols(at, c.torsion->D.cols()) = c.torsion->D;
                at += c.torsion->D.cols();
            }
            TorsionModel tm;
            tm.basis = pod_fit(tau, grid, j);
            std::map<std::pair<double, double>, std::vector<const LoadedCase*>> groups;
            for (const auto& c : training) groups[{c.ensemble.condition.u_mean, c.ensemble.condition.ti}].push_back(&c);
            for (const auto& [key, cases] : groups) {
                Eigen::Index n_cols = 0;
                for (const auto* c : cases) n_cols += c->ensemble.D.cols();
                Eigen::MatrixXd a(m.basis.order(), n_cols);
                Eigen::MatrixXd b(j, n_cols);
                Eigen::Index pos = 0;
                for (const auto* c : cases) {
                    a.middleCols(pos, c->ensemble.D.cols()) = project_all(c->ensemble.D, m.basis);
                    b.middleCols(pos, c->ensemble.D.cols()) = project_all(c->torsion->D, tm.basis);
                    pos += c->ensemble.D.cols();
                }
                TorsionMap map = fit_torsion_map(a, b);
                map.u_mean = key.first;
                map.ti = key.second;
                tm.maps.push_back(std::move(map));
            }
            write_modes_csv(art.path("torsion_modes.csv"), tm.basis);
            save_torsion_json(art.path("torsion.json"), "torsion_modes.csv", tm);
            art.add(std::vector<std::string>{"torsion_modes.csv", "torsion.json"});
            m.torsion = std::move(tm);
        });
    }
    if (reached(PipelineStage::torsion)) return finish();

    std::vector<CaseOutput> outputs(evaluation.size());
    run_stage("estimate", [&] {
        const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
        const std::size_t limit = cfg.workers > 0 ? static_cast<std::size_t>(cfg.workers) : hw;
        for (std::size_t start = 0; start < evaluation.size(); start += limit) {
            std::vector<std::future<CaseOutput>> futures;
            const std::size_t end = std::min(evaluation.size(), start + limit);
            for (std::size_t i = start; i < end; ++i) {
                futures.push_back(std::async(std::launch::async, [&, i] {
                    return estimate_case(evaluation[i], m, cfg, i, out_dir);
                }));
            }
            for (std::size_t i = start; i < end; ++i) outputs[i] = futures[i - start].get();
        }
    });

    run_stage("estimate-summary", [&] {
        json summary;
        summary["N"] = cfg.n_modes;
        summary["n_P"] = cfg.n_sensors;
        summary["n_theta"] = cfg.n_theta;
        summary["n_F"] = cfg.n_harmonics;
        summary["estimation_mode"] = to_string(cfg.mode);
        summary["seed"] = cfg.seed;
        summary["sensor_stations"] = m.sensors.station_indices;
        summary["sensor_z_norm"] = m.sensors.locations_norm;
        summary["cases"] = json::array();
        json totals = {{"sparse", 0.0}, {"rom", 0.0}, {"fused", 0.0}};
        for (auto& o : outputs) {
            for (const char* src : {"sparse", "rom", "fused"}) {
                totals[src] = totals[src].get<double>() + o.summary["reduced_rmse_total"][src].get<double>();
            }
            summary["cases"].push_back(o.summary);
            art.add(o.artifacts);
        }
        for (const char* src : {"sparse", "rom", "fused"}) {
            totals[src] = totals[src].get<double>() / static_cast<double>(outputs.size());
        }
        summary["mean_reduced_rmse_total"] = totals;
        art.document("error_summary.json", summary);
    });
    if (reached(PipelineStage::estimate)) return finish();

    run_stage("report", [&] {

        std::vector<std::vector<double>> rows;
        for (Eigen::Index k = 0; k < m.basis.spectrum.size(); ++k) {
            rows.push_back({static_cast<double>(k + 1), m.basis.spectrum[k] / m.basis.total_energy});
        }
        art.table("energy_fraction.csv", {"n", "fraction"}, rows);
        svg::Plot p;
        p.title = "Modal energy fraction";
        p.x_label = "mode";
        p.y_label = "fraction";
        p.log_y = true;
        svg::Line l;
        l.markers = true;
        for (const auto& r : rows) {
            l.x.push_back(r[0]);
            l.y.push_back(r[1]);
        }
        p.lines.push_back(l);
        art.plot("energy_fraction.svg", p);
    });
    return finish();
}

} // namespace bladerom
