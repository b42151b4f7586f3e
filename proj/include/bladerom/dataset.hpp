#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bladerom {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Default sampling frequency of displacement, azimuth and wind channels (Hz).
inline constexpr double kDefaultSamplingHz = 160.0;
/// Default exponential smoothing factor of the hub wind-speed channel.
inline constexpr double kDefaultWindAlpha = 0.2;

/// Spanwise stations of the blade, normalised by blade length.
///
/// Fields are stacked per component: a field vector has 3*n_z entries laid out
/// as (all x stations, all y stations, all z stations).
class BladeGrid {
public:
    BladeGrid() = default;
    /// Throws ValidationError unless z_norm is strictly increasing from 0 to 1
    /// with at least two stations and length_m > 0.
    BladeGrid(std::vector<double> z_norm, double length_m);

    [[nodiscard]] const std::vector<double>& z_norm() const { return z_norm_; }
    [[nodiscard]] double length_m() const { return length_m_; }
    [[nodiscard]] int n_z() const { return static_cast<int>(z_norm_.size()); }
    /// Number of scalar values per field (3 * n_z).
    [[nodiscard]] int n_dof() const { return 3 * n_z(); }
    /// Row of component `component` (0=x, 1=y, 2=z) at `station` in a stacked field.
    [[nodiscard]] int row(int component, int station) const { return component * n_z() + station; }
    /// Station whose z_norm is closest to `z` (lower index on ties).
    [[nodiscard]] int nearest_station(double z) const;
    /// True when station spacing is uniform to 1e-9.
    [[nodiscard]] bool is_uniform() const;

    friend bool operator==(const BladeGrid&, const BladeGrid&) = default;

private:
    std::vector<double> z_norm_;
    double length_m_ = 1.0;
};

/// Operating condition a snapshot record was acquired under.
struct ConditionKey {
    double u_mean = 0.0; ///< mean hub-height wind speed (m/s)
    double ti = 0.0;     ///< turbulence intensity (fraction)
    long seed = 0;       ///< realisation identifier

    /// Throws ValidationError unless u_mean > 0 and ti in (0,1).
    void validate() const;
};

/// Time-ordered displacement snapshots with synchronous metadata channels.
struct SnapshotEnsemble {
    BladeGrid grid;
    Eigen::MatrixXd D;          ///< 3*n_z x n_t stacked fields (m)
    std::vector<double> t;      ///< time (s)
    std::vector<double> theta;  ///< azimuth in [0, 2*pi) (rad)
    std::vector<double> omega;  ///< rotor speed (rad/s)
    std::vector<double> u_raw;  ///< raw hub wind speed (m/s)
    std::vector<double> u_filt; ///< smoothed hub wind speed (m/s)
    ConditionKey condition;
    double f_s = kDefaultSamplingHz;

    [[nodiscard]] int n_t() const { return static_cast<int>(D.cols()); }
    /// Throws ValidationError when any invariant is broken.
    void validate() const;
};

/// Contents of a case manifest; file paths are stored as written (relative to
/// the manifest's directory unless absolute).
struct CaseManifest {
    std::string name;
    double L_b = 1.0;
    double f_s = kDefaultSamplingHz;
    double u_mean = 0.0;
    double ti = 0.0;
    long seed = 0;
    std::string grid_file;
    std::string snapshot_file;
    std::optional<std::string> torsion_file;
    double wind_alpha = kDefaultWindAlpha;
};

/// A loaded case: manifest, grid, displacement ensemble and, when the manifest
/// references one, the sectional-rotation ensemble on the same grid and clock.
struct LoadedCase {
    CaseManifest manifest;
    BladeGrid grid;
    SnapshotEnsemble ensemble;
    std::optional<SnapshotEnsemble> torsion;
};

CaseManifest read_manifest(const std::filesystem::path& manifest_path);

/// Loads and validates a case. Missing files raise IoError (with path); header
/// or column-count problems raise SchemaError naming the column; azimuth out of
/// range raises ValidationError with the row index. u_filt is computed with
/// smooth_wind when the snapshot file has no u_filt column.
LoadedCase load_case(const std::filesystem::path& manifest_path);

/// Writes manifest, grid CSV, snapshot CSV and optional torsion CSV into
/// `directory`, using "<name>_grid.csv", "<name>_snapshots.csv",
/// "<name>_torsion.csv" and "manifest.json". Returns the manifest path.
std::filesystem::path save_case(const std::filesystem::path& directory, const std::string& name,
                                const SnapshotEnsemble& ensemble,
                                const SnapshotEnsemble* torsion = nullptr,
                                double wind_alpha = kDefaultWindAlpha);

/// Exponential smoothing: out[0] = raw[0], out[k] = alpha*raw[k] + (1-alpha)*out[k-1].
std::vector<double> smooth_wind(std::span<const double> raw, double alpha);

/// Sector of a uniform partition of [0, 2*pi) into n_theta bins.
int azimuth_bin(double theta, int n_theta);

/// Centre angle of sector `bin`.
double azimuth_bin_center(int bin, int n_theta);

/// Wraps any angle to [0, 2*pi).
double wrap_angle(double theta);

/// Snapshot-file column names for component prefix ("u" or "tau") and n_z.
std::vector<std::string> field_column_names(const std::string& prefix, int n_z);

} // namespace bladerom
