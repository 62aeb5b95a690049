#include "pulselabel/spectrum.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

namespace pulselabel {

namespace {
// FFTW planning is not thread-safe; execution is.
std::mutex g_plan_mutex;
}  // namespace

std::vector<double> power_spectrum(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    const std::size_t bins = n / 2 + 1;
    std::vector<double> in(x.begin(), x.end());
    std::vector<fftw_complex> out(bins);

    fftw_plan plan;
    {
        std::lock_guard lock(g_plan_mutex);
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out.data(),
                                    FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(g_plan_mutex);
        fftw_destroy_plan(plan);
    }

    std::vector<double> power(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    }
    return power;
}

double dft_power_at(std::span<const double> x, double cycles_per_sample) {
    const double w = 2.0 * std::numbers::pi * cycles_per_sample;
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double phase = w * static_cast<double>(i);
        re += x[i] * std::cos(phase);
        im -= x[i] * std::sin(phase);
    }
    return re * re + im * im;
}

}  // namespace pulselabel
