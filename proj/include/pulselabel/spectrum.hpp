#pragma once

#include <span>
#include <vector>

namespace pulselabel {

// One-sided power spectrum |X_k|^2 for k = 0..n/2 of a real sequence.
// Backed by FFTW; safe to call from multiple threads.
std::vector<double> power_spectrum(std::span<const double> x);

// Power of x at a single frequency (cycles per sample) by direct summation.
double dft_power_at(std::span<const double> x, double cycles_per_sample);

}  // namespace pulselabel
