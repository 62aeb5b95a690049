#include "oracles.hpp"

#include "pulselabel/quality.hpp"
#include "pulselabel/signal.hpp"
#include "pulselabel/simulator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace pulselabel;

namespace {

// Brute-force approximate entropy straight from the definition.
double apen_reference(const std::vector<double>& x, int m, double r) {
    auto phi = [&](int mm) {
        const std::size_t n = x.size() - static_cast<std::size_t>(mm) + 1;
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t c = 0;
            for (std::size_t j = 0; j < n; ++j) {
                double dmax = 0.0;
                for (int k = 0; k < mm; ++k) dmax = std::max(dmax, std::abs(x[i + k] - x[j + k]));
                c += dmax <= r;
            }
            s += std::log(static_cast<double>(c) / static_cast<double>(n));
        }
        return s / static_cast<double>(n);
    };
    return phi(m) - phi(m + 1);
}

}  // namespace

TEST(ShannonEntropy, UniformOverBinsIsLogBins) {
    std::vector<double> x;
    for (int b = 0; b < 16; ++b) {
        for (int k = 0; k < 10; ++k) x.push_back(b + 0.5);
    }
    x.push_back(0.0);
    x.push_back(16.0);  // span [0, 16]
    // 162 values: bins 0 and 15 hold 11, the rest 10.
    double ref = 0.0;
    for (int b = 0; b < 16; ++b) {
        const double p = (b == 0 || b == 15 ? 11.0 : 10.0) / 162.0;
        ref -= p * std::log(p);
    }
    EXPECT_NEAR(quality::shannon_entropy(x), ref, 1e-12);
}

TEST(ShannonEntropy, ConstantIsZero) {
    EXPECT_DOUBLE_EQ(quality::shannon_entropy(std::vector<double>(50, 3.0)), 0.0);
}

TEST(ApproximateEntropy, MatchesDefinition) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    std::vector<double> x(120);
    for (double& v : x) v = g(rng);
    EXPECT_NEAR(quality::approximate_entropy(x, 2, 0.2), apen_reference(x, 2, 0.2), 1e-12);
    std::vector<double> periodic;
    for (int i = 0; i < 90; ++i) periodic.push_back(i % 3);
    EXPECT_NEAR(quality::approximate_entropy(periodic, 2, 0.1), apen_reference(periodic, 2, 0.1),
                1e-12);
}

TEST(SpectralEntropy, PureToneNearZeroNoiseNearOne) {
    std::vector<double> tone(256);
    for (std::size_t n = 0; n < tone.size(); ++n) tone[n] = std::sin(2 * std::numbers::pi * 16 * n / 256.0);
    EXPECT_LT(quality::spectral_entropy(tone), 1e-6);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    std::vector<double> noise(4096);
    for (double& v : noise) v = g(rng);
    EXPECT_GT(quality::spectral_entropy(noise), 0.9);
    EXPECT_LE(quality::spectral_entropy(noise), 1.0);
    EXPECT_DOUBLE_EQ(quality::spectral_entropy(std::vector<double>(64, 2.0)), 0.0);
}

TEST(CycleIndices, IdenticalCyclesHaveZeroVariation) {
    const double fs = 20.0;
    signal::PpgWindow w{"S", 0, fs, {}};
    for (int n = 0; n < 1200; ++n) w.samples.push_back(std::sin(2 * std::numbers::pi * 1.0 * n / fs));
    const auto filtered = signal::bandpass_filter(w);
    const auto peaks = signal::detect_peaks(filtered);
    const auto seg = quality::segment_cycles(filtered, peaks);
    ASSERT_TRUE(seg.usable);
    EXPECT_GE(seg.cycles.size(), quality::kMinCycles);
    for (const auto& c : seg.cycles) {
        EXPECT_LT(c.begin, c.peak);
        EXPECT_LT(c.peak, c.end);
    }
    EXPECT_NEAR(quality::skewness_variation(filtered, seg), 0.0, 0.02);
    EXPECT_NEAR(quality::kurtosis_variation(filtered, seg), 0.0, 0.05);
}

TEST(Assess, NeverThrowsOnGarbage) {
    signal::PpgWindow w{"S", 0, 20.0, std::vector<double>(1200, 0.0)};
    const auto q = quality::assess(w);
    EXPECT_FALSE(q.usable);
}

TEST(Assess, WalkingScoresWorseThanSitting) {
    const auto prof = sim::make_profile("S01", 42);
    std::vector<double> sit[5], walk[5];
    for (int i = 0; i < 20; ++i) {
        for (auto [ctx, out] : {std::pair{Context::Sit, sit}, std::pair{Context::Walk, walk}}) {
            sim::WindowOverrides ov;
            ov.activity = ctx;
            const auto w = sim::generate_window(prof, static_cast<std::size_t>(i), ov);
            const auto q = quality::assess({"S01", 0, w.payload.fs, w.payload.ppg});
            if (!q.usable) continue;
            out[0].push_back(q.skewness_var);
            out[1].push_back(q.kurtosis_var);
            out[2].push_back(q.apen_var);
            out[3].push_back(q.shannon_entropy);
            out[4].push_back(q.spectral_entropy);
        }
    }
    for (int k = 0; k < 5; ++k) {
        ASSERT_GE(sit[k].size(), 10U);
        ASSERT_GE(walk[k].size(), 10U);
        EXPECT_LT(oracle::median(sit[k]), oracle::median(walk[k])) << "index " << k;
    }
}
