#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

namespace pulselabel::signal {

// One second-order section, a[0] == 1. Transposed direct form II.
struct Biquad {
    std::array<double, 3> b{1.0, 0.0, 0.0};
    std::array<double, 3> a{1.0, 0.0, 0.0};
};

using SosCascade = std::vector<Biquad>;

// Digital Butterworth band-pass of the given prototype order (the cascade has
// `order` sections, overall order 2*order), designed by the bilinear transform
// with pre-warped band edges. Throws ConfigError unless
// 0 < low_hz < high_hz < fs/2 and order >= 1.
SosCascade butterworth_bandpass(int order, double low_hz, double high_hz, double fs);

// Complex frequency response of the cascade at f_hz.
std::complex<double> sos_response(const SosCascade& sos, double f_hz, double fs);

// Single forward pass with zero initial state.
std::vector<double> sos_filter(const SosCascade& sos, std::span<const double> x);

// Steady-state initial conditions for a unit step, per section (z1, z2).
std::vector<std::array<double, 2>> sos_step_state(const SosCascade& sos);

// Forward-backward (zero-phase) filtering with odd-reflection padding of
// `pad` samples at both ends and step-response initial conditions.
// Effective magnitude response is |H|^2.
std::vector<double> sos_filtfilt(const SosCascade& sos, std::span<const double> x,
                                 std::size_t pad);

}  // namespace pulselabel::signal
