#include "oracles.hpp"

#include "pulselabel/butterworth.hpp"
#include "pulselabel/errors.hpp"
#include "pulselabel/signal.hpp"
#include "pulselabel/spectrum.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace pulselabel;

TEST(Spectrum, MatchesDirectDft) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    std::vector<double> x(250);
    for (double& v : x) v = g(rng);
    const auto p = power_spectrum(x);
    ASSERT_EQ(p.size(), x.size() / 2 + 1);
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double ref = oracle::dft_power(x, static_cast<double>(k) / 250.0);
        EXPECT_NEAR(p[k], ref, 1e-8 * std::max(1.0, ref)) << "bin " << k;
    }
}

TEST(Spectrum, DirectPowerAtOffBinFrequency) {
    std::vector<double> x(101);
    for (std::size_t n = 0; n < x.size(); ++n) x[n] = std::sin(0.3 * static_cast<double>(n));
    const double f = 0.0317;
    EXPECT_NEAR(dft_power_at(x, f), oracle::dft_power(x, f), 1e-9);
}

TEST(Butterworth, ResponseMatchesAnalyticPrototype) {
    const auto sos = signal::butterworth_bandpass(3, 0.7, 3.5, 20.0);
    ASSERT_EQ(sos.size(), 3U);
    for (double f : {0.1, 0.5, 0.7, 1.0, 2.0, 3.5, 5.0, 8.0}) {
        const double got = std::norm(signal::sos_response(sos, f, 20.0));
        const double ref = oracle::butterworth_bandpass_mag2(3, 0.7, 3.5, 20.0, f);
        EXPECT_NEAR(10 * std::log10(got), 10 * std::log10(ref), 0.01) << f << " Hz";
    }
}

TEST(Butterworth, EdgesAreHalfPower) {
    const auto sos = signal::butterworth_bandpass(2, 1.0, 4.0, 50.0);
    EXPECT_NEAR(std::abs(signal::sos_response(sos, 1.0, 50.0)), std::sqrt(0.5), 1e-9);
    EXPECT_NEAR(std::abs(signal::sos_response(sos, 4.0, 50.0)), std::sqrt(0.5), 1e-9);
}

TEST(Butterworth, RejectsBadEdges) {
    EXPECT_THROW(signal::butterworth_bandpass(3, 3.5, 0.7, 20.0), ConfigError);
    EXPECT_THROW(signal::butterworth_bandpass(3, 0.7, 10.0, 20.0), ConfigError);
    EXPECT_THROW(signal::butterworth_bandpass(0, 0.7, 3.5, 20.0), ConfigError);
    EXPECT_THROW(signal::butterworth_bandpass(3, 0.0, 3.5, 20.0), ConfigError);
}

TEST(Butterworth, FiltfiltHasZeroPhaseAndSquaredGain) {
    const double fs = 20.0, f = 1.3;
    const auto sos = signal::butterworth_bandpass(3, 0.7, 3.5, fs);
    std::vector<double> x(4000);
    for (std::size_t n = 0; n < x.size(); ++n) x[n] = std::sin(2 * std::numbers::pi * f * n / fs);
    const auto y = signal::sos_filtfilt(sos, x, 90);
    const double g2 = std::norm(signal::sos_response(sos, f, fs));
    // Interior samples: scaled copy of the input, no lag.
    for (std::size_t n = 1000; n < 3000; n += 37) EXPECT_NEAR(y[n], g2 * x[n], 1e-3);
}

TEST(Butterworth, StepStateGivesFlatStart) {
    // With step-steady initial state, a constant input through a band-pass
    // stays at zero output from the first sample.
    const auto sos = signal::butterworth_bandpass(2, 0.5, 3.0, 20.0);
    const auto zi = signal::sos_step_state(sos);
    ASSERT_EQ(zi.size(), sos.size());
    const auto y = signal::sos_filtfilt(sos, std::vector<double>(400, 5.0), 60);
    for (double v : y) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(MovingAverage, ShrinksAtEdges) {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const auto y = signal::moving_average(x, 3);
    EXPECT_DOUBLE_EQ(y[0], 1.5);
    EXPECT_DOUBLE_EQ(y[2], 3.0);
    EXPECT_DOUBLE_EQ(y[4], 4.5);
}

TEST(FilterSpec, ValidatesAgainstNyquist) {
    signal::FilterSpec s;
    EXPECT_NO_THROW(s.validate(20.0));
    EXPECT_THROW(s.validate(6.0), ConfigError);
}

TEST(Window, ValidationNamesTheProblem) {
    signal::PpgWindow w{"S", 0, 20.0, std::vector<double>(100, 0.0)};
    EXPECT_THROW(signal::validate_window(w), ValidationError);  // 5 s is too short
    w.samples.assign(1200, 0.0);
    w.samples[7] = std::nan("");
    EXPECT_THROW(signal::validate_window(w), ValidationError);
    w.samples[7] = 0.0;
    w.fs = -1;
    EXPECT_THROW(signal::validate_window(w), ValidationError);
}
