#include "pulselabel/quality.hpp"

#include "pulselabel/errors.hpp"
#include "pulselabel/spectrum.hpp"
#include "pulselabel/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace pulselabel::quality {

namespace {

constexpr int kApenM = 2;
constexpr double kApenRFactor = 0.2;

std::span<const double> cycle_view(const signal::PpgWindow& w, const HeartCycle& c) {
    return std::span<const double>(w.samples).subspan(c.begin, c.end - c.begin);
}

// Population std across cycles of a per-cycle statistic. `stat` returns
// nullopt for cycles it cannot score (skipped).
double variation(const signal::PpgWindow& filtered, const HeartCycleSegmentation& seg,
                 const std::function<std::optional<double>(std::span<const double>)>& stat) {
    if (!seg.usable) return 0.0;
    std::vector<double> values;
    values.reserve(seg.cycles.size());
    for (const auto& c : seg.cycles) {
        if (auto v = stat(cycle_view(filtered, c))) values.push_back(*v);
    }
    return stats::stddev(values);
}

std::optional<double> cycle_skewness(std::span<const double> x) {
    const auto m = stats::central_moments(x);
    if (!(m.m2 > 0.0)) return 0.0;
    return m.m3 / std::pow(m.m2, 1.5);
}

std::optional<double> cycle_kurtosis(std::span<const double> x) {
    const auto m = stats::central_moments(x);
    if (!(m.m2 > 0.0)) return 0.0;
    return m.m4 / (m.m2 * m.m2) - 3.0;
}

std::optional<double> cycle_apen(std::span<const double> x) {
    if (x.size() < static_cast<std::size_t>(kApenM + 1)) return std::nullopt;
    const double sd = stats::stddev(x);
    if (!(sd > 0.0)) return 0.0;
    return approximate_entropy(x, kApenM, kApenRFactor * sd);
}

std::size_t count_degenerate(const signal::PpgWindow& filtered,
                             const HeartCycleSegmentation& seg) {
    std::size_t n = 0;
    for (const auto& c : seg.cycles) {
        if (!(stats::variance(cycle_view(filtered, c)) > 0.0)) ++n;
    }
    return n;
}

}  // namespace

HeartCycleSegmentation segment_cycles(const signal::PpgWindow& filtered,
                                      const signal::PeakTrain& peaks) {
    HeartCycleSegmentation seg;
    const auto& x = filtered.samples;
    const auto& p = peaks.indices;
    if (p.size() < 2) return seg;

    std::vector<std::size_t> troughs;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        if (p[i + 1] >= x.size() || p[i] >= p[i + 1]) return seg;
        const auto first = x.begin() + static_cast<std::ptrdiff_t>(p[i]);
        const auto last = x.begin() + static_cast<std::ptrdiff_t>(p[i + 1]) + 1;
        troughs.push_back(static_cast<std::size_t>(std::min_element(first, last) - x.begin()));
    }
    for (std::size_t j = 1; j + 1 < p.size(); ++j) {
        HeartCycle c{troughs[j - 1], troughs[j], p[j]};
        if (c.end > c.begin) seg.cycles.push_back(c);
    }
    seg.usable = seg.cycles.size() >= kMinCycles;
    return seg;
}

double skewness_variation(const signal::PpgWindow& filtered, const HeartCycleSegmentation& seg) {
    return variation(filtered, seg, cycle_skewness);
}

double kurtosis_variation(const signal::PpgWindow& filtered, const HeartCycleSegmentation& seg) {
    return variation(filtered, seg, cycle_kurtosis);
}

double apen_variation(const signal::PpgWindow& filtered, const HeartCycleSegmentation& seg) {
    return variation(filtered, seg, cycle_apen);
}

double approximate_entropy(std::span<const double> x, int m, double r) {
    const auto n = x.size();
    auto phi = [&](std::size_t len) {
        if (n < len) return 0.0;
        const std::size_t templates = n - len + 1;
        double sum = 0.0;
        for (std::size_t i = 0; i < templates; ++i) {
            std::size_t matches = 0;
            for (std::size_t j = 0; j < templates; ++j) {
                bool close = true;
                for (std::size_t k = 0; k < len && close; ++k) {
                    close = std::abs(x[i + k] - x[j + k]) <= r;
                }
                if (close) ++matches;
            }
            sum += std::log(static_cast<double>(matches) / static_cast<double>(templates));
        }
        return sum / static_cast<double>(templates);
    };
    const auto mm = static_cast<std::size_t>(m);
    return phi(mm) - phi(mm + 1);
}

double shannon_entropy(std::span<const double> x, std::size_t bins) {
    if (x.empty()) throw std::invalid_argument("shannon_entropy of an empty window");
    if (bins == 0) throw ConfigError("histogram needs at least one bin");
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    const double lo = *mn;
    const double range = *mx - lo;
    if (!(range > 0.0)) return 0.0;

    std::vector<std::size_t> counts(bins, 0);
    for (double v : x) {
        auto b = static_cast<std::size_t>((v - lo) / range * static_cast<double>(bins));
        counts[std::min(b, bins - 1)]++;
    }
    const double n = static_cast<double>(x.size());
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    return h;
}

double spectral_entropy(std::span<const double> x) {
    if (x.size() < 4) return 0.0;
    const double mu = stats::mean(x);
    std::vector<double> centered(x.begin(), x.end());
    for (double& v : centered) v -= mu;
    const auto power = power_spectrum(centered);

    double total = 0.0;
    for (std::size_t k = 1; k < power.size(); ++k) total += power[k];
    const std::size_t m = power.size() - 1;
    if (!(total > 0.0) || m < 2) return 0.0;

    double h = 0.0;
    for (std::size_t k = 1; k < power.size(); ++k) {
        const double p = power[k] / total;
        if (p > 0.0) h -= p * std::log(p);
    }
    return std::clamp(h / std::log(static_cast<double>(m)), 0.0, 1.0);
}

QualityReport assess(const signal::PpgWindow& raw, const signal::PpgWindow& filtered,
                     const signal::PeakTrain* peaks) {
    QualityReport r;
    if (!raw.samples.empty()) {
        r.shannon_entropy = shannon_entropy(raw.samples);
        r.spectral_entropy = spectral_entropy(raw.samples);
    }
    if (peaks == nullptr) return r;
    const auto seg = segment_cycles(filtered, *peaks);
    r.cycles = seg.cycles.size();
    r.usable = seg.usable;
    if (!seg.usable) return r;
    r.skewness_var = skewness_variation(filtered, seg);
    r.kurtosis_var = kurtosis_variation(filtered, seg);
    r.apen_var = apen_variation(filtered, seg);
    r.degenerate_cycles = count_degenerate(filtered, seg);
    return r;
}

QualityReport assess(const signal::PpgWindow& raw, const signal::FilterSpec& spec) {
    signal::PpgWindow filtered = signal::bandpass_filter(raw, spec);
    try {
        const auto peaks = signal::detect_peaks(filtered);
        return assess(raw, filtered, &peaks);
    } catch (const QualityTooLow&) {
        return assess(raw, filtered, nullptr);
    }
}

}  // namespace pulselabel::quality
