#pragma once

#include "bladerom/dataset.hpp"
#include "bladerom/gaussian.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace bladerom {

/// Number of uniform azimuthal sectors used for binning by default.
inline constexpr int kDefaultSectors = 72;
/// Default Fourier harmonic order of the azimuthal model.
inline constexpr int kDefaultHarmonics = 6;

enum class CovarianceConvention {
    centered,           ///< (1/n) sum (a - mean)(a - mean)^T
    raw_second_moment,  ///< (1/n) A A^T, without removing the bin mean
};

/// Per-sector sample statistics of modal coefficients for one condition.
struct BinStatistics {
    ConditionKey condition;
    int n_theta = 0;
    std::vector<int> counts;
    std::vector<Eigen::VectorXd> means;       ///< NaN-filled for empty sectors
    std::vector<Eigen::MatrixXd> covariances; ///< NaN-filled for empty sectors

    [[nodiscard]] bool empty(int bin) const { return counts[static_cast<std::size_t>(bin)] == 0; }
    [[nodiscard]] int dim() const;
};

/// Bins the columns of `a_series` (N x n_t) by azimuth and computes per-sector
/// mean and covariance (population normalisation 1/n).
BinStatistics bin_statistics(const Eigen::MatrixXd& a_series, std::span<const double> theta, int n_theta,
                             CovarianceConvention convention = CovarianceConvention::centered);

/// Fourier least-squares fit. Coefficients are ordered c_0, c_1, s_1, ..., c_nF, s_nF.
struct FourierFit {
    Eigen::VectorXd coefficients;
    double residual_norm = 0.0;
};

/// Evaluates a coefficient vector ordered as in FourierFit at angle theta.
double fourier_eval(const Eigen::Ref<const Eigen::VectorXd>& coefficients, double theta);

/// Regressors {1, cos k theta, sin k theta} for k = 1..n_F.
Eigen::VectorXd fourier_row(double theta, int n_harmonics);

/// Ordinary least squares on the harmonic regressors at the given angles.
/// Throws ArgumentError when fewer than 1 + 2 n_F samples are supplied.
FourierFit fit_fourier(std::span<const double> angles, std::span<const double> values, int n_harmonics);

/// Coefficient tables of one operating condition.
struct RomCondition {
    double u_mean = 0.0;
    double ti = 0.0;
    Eigen::MatrixXd mean_coeffs; ///< N x (1 + 2 n_F)
    Eigen::MatrixXd cov_coeffs;  ///< N(N+1)/2 x (1 + 2 n_F), row-major upper triangle
};

/// Fourier stochastic model of modal coefficients over azimuth, per condition.
struct AzimuthalRomModel {
    int n_harmonics = kDefaultHarmonics;
    int n_theta = kDefaultSectors;
    int dim = 0;
    std::vector<RomCondition> conditions;
};

/// One Fourier fit per mean entry and per unique covariance entry of every
/// condition; empty sectors are excluded from the regression.
AzimuthalRomModel fit_rom(std::span<const BinStatistics> stats, int n_harmonics);

/// Gaussian prior at azimuth `theta` for the given wind speed and turbulence
/// intensity: nearest TI label, linear interpolation of the coefficient tables
/// between bracketing wind-speed bins (clamped at the ends). The covariance is
/// symmetrised and eigenvalue-clipped at zero. Throws StateError on an empty model.
GaussianReduced evaluate_rom(const AzimuthalRomModel& model, double theta, double u_filt, double ti);

/// Index of entry (i, j), i <= j, in the row-major upper-triangular ordering.
int upper_index(int i, int j, int n);

void save_rom_json(const std::filesystem::path& path, const AzimuthalRomModel& model);
AzimuthalRomModel load_rom_json(const std::filesystem::path& path);

} // namespace bladerom
