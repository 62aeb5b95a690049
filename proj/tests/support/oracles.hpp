#pragma once

// Independent reference implementations used only by tests. Nothing here
// calls into the library under test.

#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

// |X(f)|^2 by direct summation, f in cycles per sample.
double dft_power(const std::vector<double>& x, double cycles_per_sample);

// Magnitude-squared response of an analog Butterworth band-pass prototype of
// order n after bilinear pre-warping, at f_hz.
double butterworth_bandpass_mag2(int n, double low_hz, double high_hz, double fs, double f_hz);

// Fraction of x farther than d (Euclidean) from every point of u.
double coverage(const std::vector<std::vector<double>>& x,
                const std::vector<std::vector<double>>& u, double d);

struct Hrv {
    double bpm, ibi, sdnn, sdsd, rmssd, pnn20, pnn50, mad, sd1, sd2, area, ratio;
};
// Contiguous NN series, population deviations.
Hrv hrv(const std::vector<double>& nn);

double median(std::vector<double> v);

// Runs a program to completion; returns its exit status (128 + signal when
// killed) and captures stdout and stderr.
struct ProcessResult {
    int status = -1;
    std::string out;
    std::string err;
};
ProcessResult run(const std::vector<std::string>& argv);

std::string temp_dir(const std::string& tag);

}  // namespace oracle
