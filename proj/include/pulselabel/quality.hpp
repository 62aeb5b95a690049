#pragma once

#include "pulselabel/signal.hpp"

#include <span>
#include <vector>

// PPG signal-quality indices. For every index, lower means more reliable.
namespace pulselabel::quality {

// Trough-to-trough heart cycles, one around each interior peak. A cycle is
// the half-open sample range [begin, end).
struct HeartCycle {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t peak = 0;
};

struct HeartCycleSegmentation {
    std::vector<HeartCycle> cycles;
    bool usable = false;  // at least kMinCycles cycles
};

inline constexpr std::size_t kMinCycles = 3;
inline constexpr std::size_t kShannonBins = 16;

struct QualityReport {
    double skewness_var = 0.0;
    double kurtosis_var = 0.0;
    double apen_var = 0.0;
    double shannon_entropy = 0.0;
    double spectral_entropy = 0.0;
    bool usable = false;
    std::size_t cycles = 0;
    std::size_t degenerate_cycles = 0;  // zero-variance cycles scored as 0
};

HeartCycleSegmentation segment_cycles(const signal::PpgWindow& filtered,
                                      const signal::PeakTrain& peaks);

// Per-cycle statistic, then the population standard deviation across cycles.
// Fisher skewness; excess kurtosis; ApEn with m = 2, r = 0.2 * cycle std.
double skewness_variation(const signal::PpgWindow& filtered, const HeartCycleSegmentation& seg);
double kurtosis_variation(const signal::PpgWindow& filtered, const HeartCycleSegmentation& seg);
double apen_variation(const signal::PpgWindow& filtered, const HeartCycleSegmentation& seg);

// Approximate entropy of one sequence (self-matches counted).
double approximate_entropy(std::span<const double> x, int m, double r);

// Entropy in nats of a `bins`-bin amplitude histogram spanning [min, max].
double shannon_entropy(std::span<const double> x, std::size_t bins = kShannonBins);

// Normalized (0..1) entropy of the one-sided periodogram of the mean-removed
// signal, DC excluded. Zero-power input scores 0.
double spectral_entropy(std::span<const double> x);

// Entropy indices are taken on the raw window; cycle-variation indices on the
// band-passed window segmented at `peaks`.
QualityReport assess(const signal::PpgWindow& raw, const signal::PpgWindow& filtered,
                     const signal::PeakTrain* peaks);

// Runs the signal chain itself; never throws on poor signal.
QualityReport assess(const signal::PpgWindow& raw, const signal::FilterSpec& spec = {});

}  // namespace pulselabel::quality
