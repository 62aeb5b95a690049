#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

// Small descriptive-statistics helpers. All deviations are population
// (divide by n).
namespace pulselabel::stats {

inline double mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

// Shifted-data variance: exactly zero when all values are equal.
inline double variance(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double k = x[0];
    double s = 0.0, s2 = 0.0;
    for (double v : x) {
        s += v - k;
        s2 += (v - k) * (v - k);
    }
    const double n = static_cast<double>(x.size());
    return std::max(0.0, (s2 - s * s / n) / n);
}

inline double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

inline double median(std::vector<double> x) {
    if (x.empty()) return 0.0;
    const std::size_t mid = x.size() / 2;
    std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid), x.end());
    const double upper = x[mid];
    if (x.size() % 2 == 1) return upper;
    const double lower = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

// Linear-interpolated quantile (q in [0,1]) of a sample.
inline double quantile(std::vector<double> x, double q) {
    if (x.empty()) return 0.0;
    std::sort(x.begin(), x.end());
    const double pos = q * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, x.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return x[lo] + (x[hi] - x[lo]) * frac;
}

struct Moments {
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
};

inline Moments central_moments(std::span<const double> x) {
    Moments m;
    if (x.empty()) return m;
    const double mu = mean(x);
    for (double v : x) {
        const double d = v - mu;
        const double d2 = d * d;
        m.m2 += d2;
        m.m3 += d2 * d;
        m.m4 += d2 * d2;
    }
    const double n = static_cast<double>(x.size());
    m.m2 /= n;
    m.m3 /= n;
    m.m4 /= n;
    return m;
}

}  // namespace pulselabel::stats
