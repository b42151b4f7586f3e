#include "bladerom/spectral.hpp"

#include "bladerom/errors.hpp"

#include <Eigen/Dense>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

namespace bladerom {

namespace {

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class RealFft {
public:
    explicit RealFft(int n) : n_(n) {
        in_ = fftw_alloc_real(static_cast<std::size_t>(n));
        out_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
        std::lock_guard lock(planner_mutex());
        plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
    }
    ~RealFft() {
        {
            std::lock_guard lock(planner_mutex());
            fftw_destroy_plan(plan_);
        }
        fftw_free(in_);
        fftw_free(out_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    double* input() { return in_; }
    void execute() { fftw_execute(plan_); }
    [[nodiscard]] double power(int k) const { return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1]; }

private:
    int n_;
    double* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

} // namespace

void SavgolOptions::validate() const {
    if (polyorder < 0) throw ArgumentError("savgol: polyorder must be non-negative");
    if (window % 2 == 0) throw ArgumentError("savgol: window must be odd, got " + std::to_string(window));
    if (window < polyorder + 2) {
        throw ArgumentError("savgol: window " + std::to_string(window) + " < polyorder + 2");
    }
}

std::vector<double> savgol_filter(std::span<const double> values, const SavgolOptions& options) {
    options.validate();
    const int m = options.window;
    const int h = m / 2;
    const int n = static_cast<int>(values.size());
    if (n < m) throw ArgumentError("savgol: input shorter than window");

    Eigen::MatrixXd a(m, options.polyorder + 1);
    for (int i = 0; i < m; ++i) {
        double p = 1.0;
        for (int j = 0; j <= options.polyorder; ++j) {
            a(i, j) = p;
            p *= static_cast<double>(i - h);
        }
    }
    // Row x of `fit` holds the weights that evaluate the window fit at offset x - h.
    const Eigen::MatrixXd pinv = a.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(m, m));
    const Eigen::MatrixXd fit = a * pinv;

    std::vector<double> out(values.size());
    const Eigen::Map<const Eigen::VectorXd> v(values.data(), n);
    for (int i = 0; i < n; ++i) {
        int start = i - h;
        start = std::clamp(start, 0, n - m);
        out[static_cast<std::size_t>(i)] = fit.row(i - start).dot(v.segment(start, m));
    }
    return out;
}

Spectrum psd(std::span<const double> signal, double f_s, double f_1p, const PsdOptions& options) {
    if (!(f_s > 0.0) || !(f_1p > 0.0)) throw ArgumentError("psd: f_s and f_1P must be positive");
    const int n = static_cast<int>(signal.size());
    if (options.smoothing) {
        options.smoothing->validate();
        if (n < options.smoothing->window) throw ArgumentError("psd: signal shorter than the smoothing window");
    }
    if (n < 2) throw ArgumentError("psd: need at least two samples");
    const int len = options.segment_length > 0 ? std::min(options.segment_length, n) : n;
    if (!(options.overlap >= 0.0 && options.overlap < 1.0)) throw ArgumentError("psd: overlap outside [0,1)");
    const int step = std::max(1, len - static_cast<int>(std::floor(options.overlap * len)));

    std::vector<double> window(static_cast<std::size_t>(len));
    double w2 = 0.0;
    for (int i = 0; i < len; ++i) {
        window[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / len);
        w2 += window[static_cast<std::size_t>(i)] * window[static_cast<std::size_t>(i)];
    }
    const int n_freq = len / 2 + 1;
    std::vector<double> acc(static_cast<std::size_t>(n_freq), 0.0);
    RealFft fft(len);
    int segments = 0;
    for (int start = 0; start + len <= n; start += step) {
        double mean = 0.0;
        for (int i = 0; i < len; ++i) mean += signal[static_cast<std::size_t>(start + i)];
        mean /= len;
        double* in = fft.input();
        for (int i = 0; i < len; ++i) in[i] = (signal[static_cast<std::size_t>(start + i)] - mean) * window[static_cast<std::size_t>(i)];
        fft.execute();
        for (int k = 0; k < n_freq; ++k) acc[static_cast<std::size_t>(k)] += fft.power(k);
        ++segments;
    }

    Spectrum out;
    out.df_hz = f_s / len;
    out.f_hat.resize(static_cast<std::size_t>(n_freq));
    out.power.resize(static_cast<std::size_t>(n_freq));
    const double scale = 1.0 / (f_s * w2 * segments);
    for (int k = 0; k < n_freq; ++k) {
        const bool edge = k == 0 || (len % 2 == 0 && k == n_freq - 1);
        out.f_hat[static_cast<std::size_t>(k)] = k * out.df_hz / f_1p;
        out.power[static_cast<std::size_t>(k)] = acc[static_cast<std::size_t>(k)] * scale * (edge ? 1.0 : 2.0);
    }
    if (options.smoothing) {
        if (n_freq < options.smoothing->window) throw ArgumentError("psd: spectrum shorter than the smoothing window");
        out.power = savgol_filter(out.power, *options.smoothing);
        for (auto& p : out.power) p = std::max(p, 0.0);
    }
    return out;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ArgumentError("quantile: empty input");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Histogram freedman_diaconis(std::span<const double> values, int max_bins) {
    if (values.empty()) throw ArgumentError("histogram: empty input");
    std::vector<double> v(values.begin(), values.end());
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    const double iqr = quantile(v, 0.75) - quantile(v, 0.25);
    int bins = 1;
    if (hi > lo && iqr > 0.0) {
        const double width = 2.0 * iqr / std::cbrt(static_cast<double>(v.size()));
        bins = std::clamp(static_cast<int>(std::ceil((hi - lo) / width)), 1, std::max(1, max_bins));
    }
    Histogram h;
    const double span = hi > lo ? hi - lo : 1.0;
    const double base = hi > lo ? lo : lo - 0.5;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b) h.edges[static_cast<std::size_t>(b)] = base + span * b / bins;
    h.counts.assign(static_cast<std::size_t>(bins), 0.0);
    for (double x : v) {
        int b = static_cast<int>(std::floor((x - base) / span * bins));
        b = std::clamp(b, 0, bins - 1);
        h.counts[static_cast<std::size_t>(b)] += 1.0;
    }
    return h;
}

std::vector<std::size_t> largest_peaks(std::span<const double> power, std::size_t count) {
    std::vector<std::size_t> peaks;
    for (std::size_t k = 1; k + 1 < power.size(); ++k) {
        if (power[k] > power[k - 1] && power[k] >= power[k + 1]) peaks.push_back(k);
    }
    std::stable_sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return power[a] > power[b]; });
    if (peaks.size() > count) peaks.resize(count);
    return peaks;
}

} // namespace bladerom
