#pragma once

#include "bladerom/azimuthal_rom.hpp"
#include "bladerom/dataset.hpp"
#include "bladerom/sensing.hpp"
#include "bladerom/spectral.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bladerom {

/// Cases produced by the synthetic twin before the pipeline runs. They are
/// written under <output_dir>/cases and appended to the case lists.
struct SyntheticCasesConfig {
    int n_z = 25;
    double length_m = 63.0;
    std::vector<double> wind_speeds{8.0, 11.0, 14.0};
    double ti = 0.1;
    int training_seeds = 2;
    int evaluation_seeds = 1;
    double duration_s = 40.0;
    double f_s = kDefaultSamplingHz;
    double omega = 1.0;
    double field_noise_sigma = 0.0;
    bool torsion = true;
};

/// Pipeline stages in execution order.
enum class PipelineStage { decompose, sensors, fit_rom, torsion, estimate, report };

struct PipelineConfig {
    std::vector<std::filesystem::path> training;
    std::vector<std::filesystem::path> evaluation;
    int n_modes = 4;
    int n_sensors = 4;
    int n_theta = kDefaultSectors;
    int n_harmonics = kDefaultHarmonics;
    /// Noise configuration in the form accepted by noise_from_json_text.
    std::string noise_json = R"({"sigma": 0.1})";
    EstimationMode mode = EstimationMode::gram_corrected;
    CovarianceConvention covariance = CovarianceConvention::centered;
    PivotUnit pivot = PivotUnit::station;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;
    std::vector<double> observation_stations{0.44, 0.68, 0.88};
    /// Torsion truncation; 0 selects n_modes + 1.
    int torsion_modes = 0;
    /// Frequencies (rad/s) for harmonic shape extraction in the report; empty skips it.
    std::vector<double> lnm_frequencies;
    /// Maximum number of evaluation cases processed at once; 0 uses the hardware count.
    int workers = 0;
    std::optional<SyntheticCasesConfig> synthetic;
    /// Last stage to run; later stages are skipped.
    PipelineStage stop_after = PipelineStage::report;

    /// Fail-fast checks of values and referenced files. Throws ValidationError.
    void validate() const;
};

/// Parses a pipeline JSON file. Relative paths are resolved against the
/// file's directory. Throws IoError, SchemaError or ValidationError.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct PipelineResult {
    /// Paths of every artifact written, relative to the output directory, sorted.
    std::vector<std::string> artifacts;
};

/// decompose -> place -> fit ROM -> torsion -> streaming estimate -> report,
/// ending after `stop_after`. The estimate stage writes the per-case outputs
/// and error_summary.json; artifacts.json always lists what was written. A
/// stage failure writes FAILED (stage name and message) into the output
/// directory and rethrows the error with the stage name prepended.
PipelineResult run_pipeline(const PipelineConfig& config);

/// Generates the configured synthetic cases under `directory`; returns the
/// training and evaluation manifest paths.
std::pair<std::vector<std::filesystem::path>, std::vector<std::filesystem::path>>
generate_synthetic_cases(const SyntheticCasesConfig& config, const std::filesystem::path& directory,
                         std::uint64_t seed);

struct ReportOptions {
    SavgolOptions smoothing{};
    std::vector<double> lnm_frequencies;
};

/// Dataset analysis artifacts of one case: tip-displacement PSDs (raw and
/// smoothed), histograms, flapwise/edgewise coupling scatter, and optional
/// harmonic shapes. Every SVG has a CSV twin. Returns the files written,
/// relative to `directory`, each prefixed with `prefix`.
std::vector<std::string> write_case_report(const LoadedCase& loaded, const std::filesystem::path& directory,
                                           const std::string& prefix, const ReportOptions& options = {});

} // namespace bladerom
