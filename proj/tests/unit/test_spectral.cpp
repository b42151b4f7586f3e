#include "bladerom/errors.hpp"
#include "bladerom/spectral.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numeric>
#include <random>

using namespace bladerom;

namespace {

/// Direct O(n^2) one-sided periodogram with a periodic Hann window.
std::vector<double> naive_psd(const std::vector<double>& x, double f_s) {
    const auto n = x.size();
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    std::vector<double> w(n);
    double w2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::pow(std::sin(M_PI * static_cast<double>(i) / static_cast<double>(n)), 2);
        w2 += w[i] * w[i];
    }
    std::vector<double> out(n / 2 + 1);
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += (x[i] - mean) * w[i] * std::polar(1.0, -2.0 * M_PI * static_cast<double>(k * i) / n);
        }
        const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
        out[k] = std::norm(acc) / (f_s * w2) * (edge ? 1.0 : 2.0);
    }
    return out;
}

} // namespace

TEST(Psd, MatchesDirectTransform) {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> nd;
    for (std::size_t n : {64u, 75u}) {
        std::vector<double> x(n);
        for (auto& v : x) v = nd(rng) + 3.0;
        const auto s = psd(x, 20.0, 0.5);
        const auto ref = naive_psd(x, 20.0);
        ASSERT_EQ(s.power.size(), ref.size());
        for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(s.power[k], ref[k], 1e-12 * (1.0 + ref[k]));
        EXPECT_DOUBLE_EQ(s.df_hz, 20.0 / static_cast<double>(n));
        EXPECT_DOUBLE_EQ(s.f_hat[3], 3.0 * s.df_hz / 0.5);
    }
}

TEST(Psd, BinCentredToneIntegratesToHalfSquaredAmplitude) {
    const int n = 1024;
    const double f_s = 32.0;
    const double amp = 1.7;
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = amp * std::cos(2.0 * M_PI * 40.0 * i / n + 0.3);
    const auto s = psd(x, f_s, 1.0);
    const double total = std::accumulate(s.power.begin(), s.power.end(), 0.0) * s.df_hz;
    EXPECT_NEAR(total, amp * amp / 2.0, 1e-10);
    EXPECT_EQ(largest_peaks(s.power, 1).front(), 40u);
}

TEST(Psd, WelchSegmentsAverage) {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> nd;
    std::vector<double> x(4096);
    for (auto& v : x) v = nd(rng);
    PsdOptions opt;
    opt.segment_length = 256;
    const auto s = psd(x, 10.0, 1.0, opt);
    EXPECT_EQ(s.power.size(), 129u);
    // White noise of unit variance: flat one-sided density 2 / f_s.
    double mean = 0.0;
    for (std::size_t k = 1; k + 1 < s.power.size(); ++k) mean += s.power[k];
    mean /= static_cast<double>(s.power.size() - 2);
    EXPECT_NEAR(mean, 0.2, 0.02);
}

TEST(Psd, SmoothedIsNonNegativeAndValidated) {
    std::vector<double> x(400);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.3 * static_cast<double>(i)) + (i % 7 == 0 ? 2.0 : 0.0);
    PsdOptions opt;
    opt.smoothing = SavgolOptions{};
    const auto s = psd(x, 10.0, 1.0, opt);
    for (double p : s.power) EXPECT_GE(p, 0.0);
    EXPECT_THROW(psd(std::vector<double>(20, 1.0), 10.0, 1.0, opt), ArgumentError);
    EXPECT_THROW(psd(x, 0.0, 1.0), ArgumentError);
    EXPECT_THROW(psd(x, 10.0, -1.0), ArgumentError);
    PsdOptions bad;
    bad.overlap = 1.0;
    EXPECT_THROW(psd(x, 10.0, 1.0, bad), ArgumentError);
}

TEST(Psd, RotorToneLandsOnUnitFrequency) {
    const double f_s = 20.0;
    const double f_1p = 0.2;
    std::vector<double> x(6000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * M_PI * f_1p * static_cast<double>(i) / f_s);
    const auto s = psd(x, f_s, f_1p);
    const auto k = largest_peaks(s.power, 1).front();
    EXPECT_LE(std::abs(s.f_hat[k] - 1.0), s.df_hz / f_1p);
}

TEST(Psd, ConstantSignalHasOnlyDc) {
    const auto s = psd(std::vector<double>(500, 4.2), 10.0, 1.0);
    for (std::size_t k = 1; k < s.power.size(); ++k) EXPECT_LE(s.power[k], 1e-20);
}

TEST(Psd, SmoothingPreservesTotalPower) {
    std::mt19937_64 rng(44);
    std::normal_distribution<double> nd;
    std::vector<double> x(20000);
    double prev = 0.0;
    for (auto& v : x) {
        prev = 0.7 * prev + nd(rng);
        v = prev;
    }
    const auto raw = psd(x, 20.0, 0.2);
    PsdOptions opt;
    opt.smoothing = SavgolOptions{};
    const auto smooth = psd(x, 20.0, 0.2, opt);
    const double p_raw = std::accumulate(raw.power.begin(), raw.power.end(), 0.0);
    const double p_smooth = std::accumulate(smooth.power.begin(), smooth.power.end(), 0.0);
    EXPECT_NEAR(p_smooth / p_raw, 1.0, 0.05);
}

TEST(Savgol, PreservesPolynomialsUpToOrder) {
    std::vector<double> x(60);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i) * 0.1;
        x[i] = 1.0 - 2.0 * t + 0.5 * t * t - 0.03 * t * t * t;
    }
    const auto y = savgol_filter(x, {11, 3});
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-10);
}

TEST(Savgol, MovingAverageForOrderZero) {
    const std::vector<double> x{1, 2, 6, 3, 8, 1, 0};
    const auto y = savgol_filter(x, {3, 0});
    EXPECT_NEAR(y[2], 11.0 / 3.0, 1e-14);
    EXPECT_NEAR(y[3], 17.0 / 3.0, 1e-14);
    // Edges reuse the first and last full window.
    EXPECT_NEAR(y[0], 3.0, 1e-14);
    EXPECT_NEAR(y[6], 3.0, 1e-14);
}

TEST(Savgol, OptionChecks) {
    const std::vector<double> x(40, 1.0);
    EXPECT_THROW(savgol_filter(x, {10, 3}), ArgumentError);
    EXPECT_THROW(savgol_filter(x, {5, 4}), ArgumentError);
    EXPECT_THROW(savgol_filter(std::vector<double>(5, 1.0), {33, 3}), ArgumentError);
}

TEST(Quantile, LinearInterpolation) {
    const std::vector<double> v{4.0, 1.0, 3.0, 2.0};
    EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(quantile(v, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(quantile(v, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile(v, 0.25), 1.75);
    EXPECT_THROW(quantile({}, 0.5), ArgumentError);
}

TEST(Histogram, FreedmanDiaconisWidth) {
    std::mt19937_64 rng(43);
    std::normal_distribution<double> nd;
    std::vector<double> x(8000);
    for (auto& v : x) v = nd(rng);
    const auto h = freedman_diaconis(x);
    EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), 0.0), 8000.0);
    ASSERT_EQ(h.edges.size(), h.counts.size() + 1);
    const double width = 2.0 * (quantile(x, 0.75) - quantile(x, 0.25)) / std::cbrt(8000.0);
    EXPECT_LE(h.edges[1] - h.edges[0], width);
    EXPECT_GT(h.edges[1] - h.edges[0], 0.9 * width);
    for (std::size_t i = 1; i < h.edges.size(); ++i) EXPECT_GT(h.edges[i], h.edges[i - 1]);

    const auto one = freedman_diaconis(std::vector<double>(10, 2.0));
    EXPECT_EQ(one.counts, (std::vector<double>{10.0}));
    EXPECT_LT(one.edges[0], 2.0);
    EXPECT_GT(one.edges[1], 2.0);
    EXPECT_LE(freedman_diaconis(x, 5).counts.size(), 5u);
}

TEST(Peaks, LargestLocalMaxima) {
    const std::vector<double> p{9.0, 1.0, 3.0, 2.0, 5.0, 5.0, 1.0, 4.0, 0.0};
    EXPECT_EQ(largest_peaks(p, 2), (std::vector<std::size_t>{4, 7}));
    EXPECT_EQ(largest_peaks(p, 10), (std::vector<std::size_t>{4, 7, 2}));
}
