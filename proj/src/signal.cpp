#include "pulselabel/signal.hpp"

#include "pulselabel/butterworth.hpp"
#include "pulselabel/errors.hpp"
#include "pulselabel/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pulselabel::signal {

namespace {

constexpr double kRejectFraction = 0.30;
constexpr std::size_t kMedianHistory = 5;
constexpr double kBrInterpHz = 4.0;
constexpr double kBrLowHz = 0.1;
constexpr double kBrHighHz = 0.4;
constexpr std::size_t kBrMinFftSize = 1024;

// Regions strictly above `threshold`, reduced to their argmax. Candidates on
// the window boundary are dropped because their true maximum may lie outside.
std::vector<std::size_t> threshold_peaks(const std::vector<double>& x,
                                         const std::vector<double>& threshold) {
    std::vector<std::size_t> peaks;
    const std::size_t n = x.size();
    std::size_t i = 0;
    while (i < n) {
        if (!(x[i] > threshold[i])) {
            ++i;
            continue;
        }
        std::size_t best = i;
        while (i < n && x[i] > threshold[i]) {
            if (x[i] > x[best]) best = i;
            ++i;
        }
        if (best != 0 && best != n - 1) peaks.push_back(best);
    }
    return peaks;
}

double refine_peak(const std::vector<double>& x, std::size_t i) {
    if (i == 0 || i + 1 >= x.size()) return static_cast<double>(i);
    const double l = x[i - 1], c = x[i], r = x[i + 1];
    const double denom = l - 2.0 * c + r;
    if (!(denom < 0.0)) return static_cast<double>(i);
    const double delta = std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
    return static_cast<double>(i) + delta;
}

}  // namespace

void validate_window(const PpgWindow& window) {
    if (!(window.fs > 0.0) || !std::isfinite(window.fs)) {
        throw ValidationError("fs", "sampling rate must be positive");
    }
    const double min_len = window.fs * kMinWindowSeconds;
    if (static_cast<double>(window.samples.size()) < min_len) {
        throw ValidationError("ppg", "window shorter than " +
                                         std::to_string(static_cast<int>(kMinWindowSeconds)) +
                                         " s");
    }
    for (double v : window.samples) {
        if (!std::isfinite(v)) throw ValidationError("ppg", "non-finite sample");
    }
}

void FilterSpec::validate(double fs) const {
    if (order < 1) throw ConfigError("filter order must be >= 1");
    if (!(low_cut_hz > 0.0 && low_cut_hz < high_cut_hz && high_cut_hz < fs / 2.0)) {
        throw ConfigError("filter cutoffs must satisfy 0 < low < high < fs/2");
    }
}

PeakTrain PeakTrain::from_indices(std::vector<std::size_t> indices, double fs) {
    PeakTrain p;
    p.times_ms.reserve(indices.size());
    for (std::size_t i : indices) p.times_ms.push_back(static_cast<double>(i) * 1000.0 / fs);
    p.indices = std::move(indices);
    return p;
}

NnSeries NnSeries::from_intervals(std::vector<double> intervals_ms) {
    NnSeries s;
    double t = 0.0;
    for (double v : intervals_ms) {
        t += v;
        s.beat_times_ms.push_back(t);
    }
    s.intervals_ms = std::move(intervals_ms);
    return s;
}

bool NnSeries::adjacent(std::size_t i) const {
    if (i == 0 || i >= intervals_ms.size()) return false;
    const double start = beat_times_ms[i] - intervals_ms[i];
    return std::abs(start - beat_times_ms[i - 1]) <= 1e-6 * std::max(1.0, std::abs(start));
}

std::array<double, FeatureVector::kSize> FeatureVector::to_array() const {
    return {bpm,    ibi_ms, sdnn_ms, sdsd_ms,    rmssd_ms,      pnn20, pnn50,
            mad_ms, sd1_ms, sd2_ms,  s_area_ms2, sd1_sd2_ratio, br_hz};
}

FeatureVector FeatureVector::from_array(const std::array<double, kSize>& v) {
    FeatureVector f;
    f.bpm = v[0];
    f.ibi_ms = v[1];
    f.sdnn_ms = v[2];
    f.sdsd_ms = v[3];
    f.rmssd_ms = v[4];
    f.pnn20 = v[5];
    f.pnn50 = v[6];
    f.mad_ms = v[7];
    f.sd1_ms = v[8];
    f.sd2_ms = v[9];
    f.s_area_ms2 = v[10];
    f.sd1_sd2_ratio = v[11];
    f.br_hz = v[12];
    f.br_valid = v[12] > 0.0;
    return f;
}

const std::array<std::string_view, FeatureVector::kSize>& FeatureVector::names() {
    static const std::array<std::string_view, kSize> n{
        "bpm",    "ibi_ms", "sdnn_ms", "sdsd_ms",    "rmssd_ms",      "pnn20", "pnn50",
        "mad_ms", "sd1_ms", "sd2_ms",  "s_area_ms2", "sd1_sd2_ratio", "br_hz"};
    return n;
}

PpgWindow bandpass_filter(const PpgWindow& window, const FilterSpec& spec) {
    spec.validate(window.fs);
    const auto sos =
        butterworth_bandpass(spec.order, spec.low_cut_hz, spec.high_cut_hz, window.fs);
    // Pad by three periods of the low cutoff so edge transients settle.
    const auto pad = static_cast<std::size_t>(3.0 * std::ceil(window.fs / spec.low_cut_hz));
    PpgWindow out = window;
    out.samples = sos_filtfilt(sos, window.samples, pad);
    return out;
}

std::vector<double> moving_average(const std::vector<double>& x, std::size_t kernel) {
    const std::size_t n = x.size();
    if (kernel <= 1 || n == 0) return x;
    const std::size_t left = (kernel - 1) / 2;
    const std::size_t right = kernel - 1 - left;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= left ? i - left : 0;
        const std::size_t hi = std::min(n - 1, i + right);
        double s = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) s += x[j];
        out[i] = s / static_cast<double>(hi - lo + 1);
    }
    return out;
}

PpgWindow moving_average(const PpgWindow& window, double length_s) {
    const double k = std::round(length_s * window.fs);
    if (!(k >= 1.0)) throw ConfigError("moving-average kernel shorter than one sample");
    PpgWindow out = window;
    out.samples = moving_average(window.samples, static_cast<std::size_t>(k));
    return out;
}

PeakTrain detect_peaks(const PpgWindow& filtered) {
    const auto& x = filtered.samples;
    if (x.size() < 3) throw QualityTooLow("window too short for peak detection");
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    const double range = *mx - *mn;
    if (!(range > 0.0) || !std::isfinite(range)) throw QualityTooLow("flat window, no peaks");

    const auto kernel = static_cast<std::size_t>(std::max(1.0, std::round(0.75 * filtered.fs)));
    const std::vector<double> base = moving_average(x, kernel);
    const double duration_s = filtered.duration_s();

    std::vector<std::size_t> best;
    double best_sd = std::numeric_limits<double>::infinity();
    std::vector<double> threshold(x.size());
    for (int pct = 5; pct <= 300; pct += 5) {
        const double lift = range * pct / 100.0;
        for (std::size_t i = 0; i < x.size(); ++i) threshold[i] = base[i] + lift;
        auto peaks = threshold_peaks(x, threshold);
        if (peaks.size() < 2) continue;
        const double bpm = 60.0 * static_cast<double>(peaks.size()) / duration_s;
        if (bpm < 42.0 || bpm > 210.0) continue;
        std::vector<double> rr;
        rr.reserve(peaks.size() - 1);
        for (std::size_t i = 1; i < peaks.size(); ++i) {
            rr.push_back(static_cast<double>(peaks[i] - peaks[i - 1]));
        }
        const double sd = stats::stddev(rr);
        if (sd < best_sd) {
            best_sd = sd;
            best = std::move(peaks);
        }
    }
    if (best.size() < 2) throw QualityTooLow("no threshold yields a plausible heart rate");

    PeakTrain train;
    train.indices = best;
    train.times_ms.reserve(best.size());
    for (std::size_t i : best) train.times_ms.push_back(refine_peak(x, i) * 1000.0 / filtered.fs);
    return train;
}

NnSeries extract_nn(const PeakTrain& peaks) {
    if (peaks.size() < 2) throw QualityTooLow("fewer than two peaks");

    std::vector<double> raw;
    for (std::size_t i = 1; i < peaks.size(); ++i) {
        raw.push_back(peaks.times_ms[i] - peaks.times_ms[i - 1]);
    }
    auto in_range = [](double v) { return v >= kMinNnMs && v <= kMaxNnMs; };

    // Until the first acceptance, compare against the median of all
    // plausible intervals so a single early artefact cannot anchor the rule.
    std::vector<double> plausible;
    std::copy_if(raw.begin(), raw.end(), std::back_inserter(plausible), in_range);
    const double seed_median = stats::median(plausible);

    NnSeries nn;
    std::vector<double> history;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double v = raw[i];
        const double ref = history.empty() ? seed_median : stats::median(history);
        const bool ok = in_range(v) && ref > 0.0 && std::abs(v - ref) <= kRejectFraction * ref;
        if (!ok) {
            ++nn.rejected;
            continue;
        }
        nn.intervals_ms.push_back(v);
        nn.beat_times_ms.push_back(peaks.times_ms[i + 1]);
        history.push_back(v);
        if (history.size() > kMedianHistory) history.erase(history.begin());
    }
    if (nn.size() < 2) throw QualityTooLow("fewer than two accepted NN intervals");
    return nn;
}

std::optional<double> breathing_rate_hz(const NnSeries& nn) {
    if (nn.size() < 2) return std::nullopt;
    const auto& t = nn.beat_times_ms;
    const auto& v = nn.intervals_ms;
    const double step_ms = 1000.0 / kBrInterpHz;

    std::vector<double> series;
    std::size_t seg = 0;
    for (double tq = t.front(); tq <= t.back(); tq += step_ms) {
        while (seg + 1 < t.size() && t[seg + 1] < tq) ++seg;
        if (seg + 1 >= t.size()) {
            series.push_back(v.back());
            continue;
        }
        const double span = t[seg + 1] - t[seg];
        const double w = span > 0.0 ? (tq - t[seg]) / span : 0.0;
        series.push_back(v[seg] + w * (v[seg + 1] - v[seg]));
    }
    if (series.size() < 4) return std::nullopt;
    const double mu = stats::mean(series);
    for (double& s : series) s -= mu;

    std::size_t nfft = kBrMinFftSize;
    while (nfft < series.size()) nfft *= 2;
    const double df = kBrInterpHz / static_cast<double>(nfft);
    const auto k_lo = static_cast<std::size_t>(std::ceil(kBrLowHz / df));
    const auto k_hi = static_cast<std::size_t>(std::floor(kBrHighHz / df));

    double best_power = 0.0;
    std::size_t best_k = 0;
    for (std::size_t k = k_lo; k <= k_hi; ++k) {
        const double w = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(nfft);
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < series.size(); ++i) {
            re += series[i] * std::cos(w * static_cast<double>(i));
            im -= series[i] * std::sin(w * static_cast<double>(i));
        }
        const double p = re * re + im * im;
        if (p > best_power) {
            best_power = p;
            best_k = k;
        }
    }
    if (best_k == 0 || !(best_power > 1e-12)) return std::nullopt;
    return static_cast<double>(best_k) * df;
}

FeatureVector hrv_features(const NnSeries& nn) {
    if (nn.size() < 4) throw QualityTooLow("fewer than four NN intervals");
    const auto& iv = nn.intervals_ms;

    FeatureVector f;
    f.ibi_ms = stats::mean(iv);
    f.bpm = 60000.0 / f.ibi_ms;
    f.sdnn_ms = stats::stddev(iv);

    std::vector<double> diffs;
    for (std::size_t i = 1; i < iv.size(); ++i) {
        if (nn.adjacent(i)) diffs.push_back(iv[i] - iv[i - 1]);
    }
    if (!diffs.empty()) {
        f.sdsd_ms = stats::stddev(diffs);
        double sq = 0.0;
        std::size_t over20 = 0, over50 = 0;
        for (double d : diffs) {
            sq += d * d;
            if (std::abs(d) > 20.0) ++over20;
            if (std::abs(d) > 50.0) ++over50;
        }
        const double n = static_cast<double>(diffs.size());
        f.rmssd_ms = std::sqrt(sq / n);
        f.pnn20 = static_cast<double>(over20) / n;
        f.pnn50 = static_cast<double>(over50) / n;
    }

    const double med = stats::median(iv);
    std::vector<double> dev;
    dev.reserve(iv.size());
    for (double v : iv) dev.push_back(std::abs(v - med));
    f.mad_ms = stats::median(dev);

    f.sd1_ms = f.sdsd_ms / std::numbers::sqrt2;
    f.sd2_ms = std::sqrt(std::max(0.0, 2.0 * f.sdnn_ms * f.sdnn_ms -
                                           0.5 * f.sdsd_ms * f.sdsd_ms));
    f.s_area_ms2 = std::numbers::pi * f.sd1_ms * f.sd2_ms;
    f.sd1_sd2_ratio = f.sd2_ms > 0.0 ? f.sd1_ms / f.sd2_ms : 0.0;

    if (auto br = breathing_rate_hz(nn)) {
        f.br_hz = *br;
        f.br_valid = true;
    } else {
        f.br_hz = 0.0;
        f.br_valid = false;
    }
    return f;
}

WindowAnalysis analyze_window(const PpgWindow& window, const FilterSpec& spec) {
    validate_window(window);
    WindowAnalysis a;
    a.filtered = bandpass_filter(window, spec);
    try {
        a.peaks = detect_peaks(a.filtered);
        a.nn = extract_nn(*a.peaks);
        a.features = hrv_features(*a.nn);
    } catch (const QualityTooLow& e) {
        a.failure = e.what();
    }
    return a;
}

FeatureVector process_window(const PpgWindow& window, const FilterSpec& spec) {
    auto a = analyze_window(window, spec);
    if (!a.features) throw QualityTooLow(a.failure);
    return *a.features;
}

}  // namespace pulselabel::signal
