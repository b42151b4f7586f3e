#pragma once

#include <optional>
#include <span>
#include <vector>

namespace bladerom {

struct SavgolOptions {
    int window = 33;
    int polyorder = 3;

    /// Throws ArgumentError for an even window or window < polyorder + 2.
    void validate() const;
};

struct PsdOptions {
    /// Segment length in samples; 0 uses the whole record as one segment.
    int segment_length = 0;
    double overlap = 0.5;
    std::optional<SavgolOptions> smoothing;
};

/// One-sided power spectral density on a normalised frequency axis.
struct Spectrum {
    std::vector<double> f_hat; ///< f / f_1P
    std::vector<double> power; ///< density per Hz, non-negative
    double df_hz = 0.0;
};

/// Welch periodogram (Hann window, per-segment mean removal, density scaling)
/// with optional Savitzky-Golay smoothing of the estimate. Negative smoothed
/// values are clamped to zero. Throws ArgumentError when the signal is shorter
/// than the smoothing window, f_s or f_1P is not positive, or the options are
/// inconsistent.
Spectrum psd(std::span<const double> signal, double f_s, double f_1p, const PsdOptions& options = {});

/// Savitzky-Golay filter; edges are handled by evaluating the polynomial
/// fitted to the first/last full window.
std::vector<double> savgol_filter(std::span<const double> values, const SavgolOptions& options);

struct Histogram {
    std::vector<double> edges;  ///< bins + 1 increasing edges
    std::vector<double> counts; ///< samples per bin
};

/// Histogram with the Freedman-Diaconis bin width 2 IQR n^(-1/3). Degenerate
/// spreads fall back to a single bin. At most `max_bins` bins.
Histogram freedman_diaconis(std::span<const double> values, int max_bins = 200);

/// Linear-interpolation quantile of unsorted data, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Indices of the `count` largest strict local maxima of `power`, skipping
/// index 0, in decreasing order of power.
std::vector<std::size_t> largest_peaks(std::span<const double> power, std::size_t count);

} // namespace bladerom
