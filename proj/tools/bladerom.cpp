#include "bladerom/errors.hpp"
#include "bladerom/pipeline.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

using namespace bladerom;

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct GlobalOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool pivot_scalar = false;
};

PipelineConfig resolve_config(const GlobalOptions& g) {
    PipelineConfig c;
    if (!g.config.empty()) {
        c = load_pipeline_config(g.config);
    } else {
        c.synthetic = SyntheticCasesConfig{};
    }
    if (g.seed) c.seed = *g.seed;
    if (!g.out.empty()) c.output_dir = g.out;
    if (g.pivot_scalar) c.pivot = PivotUnit::scalar;
    return c;
}

int run_synth(const GlobalOptions& g) {
    PipelineConfig c = resolve_config(g);
    const SyntheticCasesConfig sc = c.synthetic.value_or(SyntheticCasesConfig{});
    const auto [train, eval] = generate_synthetic_cases(sc, c.output_dir, c.seed);
    for (const auto& p : train) std::cout << "training " << p.string() << '\n';
    for (const auto& p : eval) std::cout << "evaluation " << p.string() << '\n';
    return 0;
}

int run_stages(const GlobalOptions& g, PipelineStage last) {
    PipelineConfig c = resolve_config(g);
    c.stop_after = last;
    const PipelineResult r = run_pipeline(c);
    std::cout << "wrote " << r.artifacts.size() << " artifacts to " << c.output_dir.string() << '\n';
    return 0;
}

int run_report(const GlobalOptions& g, const std::vector<std::string>& manifests) {
    PipelineConfig c = resolve_config(g);
    std::vector<std::filesystem::path> cases(manifests.begin(), manifests.end());
    if (cases.empty()) cases = c.evaluation;
    if (cases.empty()) throw ValidationError("report: no case manifests given");
    std::filesystem::create_directories(c.output_dir);
    ReportOptions options;
    options.lnm_frequencies = c.lnm_frequencies;
    std::size_t count = 0;
    for (const auto& p : cases) {
        if (!std::filesystem::is_regular_file(p)) throw ValidationError("case manifest not found: " + p.string());
        const LoadedCase loaded = load_case(p);
        count += write_case_report(loaded, c.output_dir, loaded.manifest.name + "_", options).size();
    }
    std::cout << "wrote " << count << " report files to " << c.output_dir.string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blade deflection estimation: POD sparse sensing fused with an azimuthal reduced-order model"};
    app.require_subcommand(1);
    GlobalOptions g;
    std::uint64_t seed = 0;
    app.add_option("--config", g.config, "Pipeline configuration JSON")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides the configuration)");
    app.add_option("--out", g.out, "Output directory (overrides the configuration)");
    app.add_flag("--pivot-scalar", g.pivot_scalar, "Pivot on single degrees of freedom instead of stations");
    app.fallthrough();

    auto* synth = app.add_subcommand("synth", "Generate synthetic cases from the configuration's synthetic block");
    auto* decompose = app.add_subcommand("decompose", "POD of the training cases: modes.csv, energies.csv");
    auto* sensors = app.add_subcommand("sensors", "Decompose and place sensors: sensors.csv");
    auto* fit_rom = app.add_subcommand("fit-rom", "Decompose, place sensors and fit the azimuthal model: rom.json");
    auto* torsion = app.add_subcommand("torsion", "All model fits including the torsion maps: torsion.json");
    auto* estimate = app.add_subcommand("estimate", "Model fits plus streaming estimation of the evaluation cases");
    auto* report = app.add_subcommand("report", "Dataset analysis plots (PSD, histograms, couplings) of case files");
    auto* pipeline = app.add_subcommand("pipeline", "Every stage, including summary plots");
    std::vector<std::string> report_cases;
    report->add_option("manifests", report_cases, "Case manifests (default: the configuration's evaluation cases)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }
    if (seed_opt->count() > 0) g.seed = seed;

    try {
        if (*synth) return run_synth(g);
        if (*decompose) return run_stages(g, PipelineStage::decompose);
        if (*sensors) return run_stages(g, PipelineStage::sensors);
        if (*fit_rom) return run_stages(g, PipelineStage::fit_rom);
        if (*torsion) return run_stages(g, PipelineStage::torsion);
        if (*estimate) return run_stages(g, PipelineStage::estimate);
        if (*report) return run_report(g, report_cases);
        if (*pipeline) return run_stages(g, PipelineStage::report);
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return 0;
}
