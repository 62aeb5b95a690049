#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pulselabel::signal {

// One PPG recording. `samples` are raw sensor amplitudes at `fs` Hz.
struct PpgWindow {
    std::string subject_id;
    std::int64_t t_start_ms = 0;
    double fs = 20.0;
    std::vector<double> samples;

    double duration_s() const { return static_cast<double>(samples.size()) / fs; }
};

// Minimum analysable window length.
inline constexpr double kMinWindowSeconds = 30.0;

// Throws ValidationError if fs <= 0, the window is shorter than
// kMinWindowSeconds, or any sample is non-finite.
void validate_window(const PpgWindow& window);

struct FilterSpec {
    int order = 3;
    double low_cut_hz = 0.7;
    double high_cut_hz = 3.5;

    // Throws ConfigError unless 0 < low < high < fs/2 and order >= 1.
    void validate(double fs) const;
};

// Peak positions in one window. `times_ms` are offsets from the window start,
// refined to sub-sample precision where the detector could do so.
struct PeakTrain {
    std::vector<std::size_t> indices;
    std::vector<double> times_ms;

    static PeakTrain from_indices(std::vector<std::size_t> indices, double fs);
    std::size_t size() const { return indices.size(); }
};

// Accepted inter-beat intervals. beat_times_ms[i] is the time of the beat that
// closes interval i; two intervals are adjacent when the second starts where
// the first ends (no rejected interval between them).
struct NnSeries {
    std::vector<double> intervals_ms;
    std::vector<double> beat_times_ms;
    std::size_t rejected = 0;

    // Contiguous series; beat times are the running sum of the intervals.
    static NnSeries from_intervals(std::vector<double> intervals_ms);
    bool adjacent(std::size_t i) const;  // interval i follows i-1 directly
    std::size_t size() const { return intervals_ms.size(); }
};

// Allowed instantaneous rate after rejection, 42..210 bpm.
inline constexpr double kMinNnMs = 60000.0 / 210.0;
inline constexpr double kMaxNnMs = 60000.0 / 42.0;

struct FeatureVector {
    static constexpr std::size_t kSize = 13;

    double bpm = 0.0;
    double ibi_ms = 0.0;
    double sdnn_ms = 0.0;
    double sdsd_ms = 0.0;
    double rmssd_ms = 0.0;
    double pnn20 = 0.0;
    double pnn50 = 0.0;
    double mad_ms = 0.0;
    double sd1_ms = 0.0;
    double sd2_ms = 0.0;
    double s_area_ms2 = 0.0;
    double sd1_sd2_ratio = 0.0;
    double br_hz = 0.0;
    // False when no breathing peak could be resolved; br_hz is then 0.
    bool br_valid = true;

    std::array<double, kSize> to_array() const;
    static FeatureVector from_array(const std::array<double, kSize>& values);
    static const std::array<std::string_view, kSize>& names();
};

PpgWindow bandpass_filter(const PpgWindow& window, const FilterSpec& spec = {});

// Centered uniform kernel of round(length_s * fs) samples; the kernel shrinks
// at the edges instead of padding with zeros.
PpgWindow moving_average(const PpgWindow& window, double length_s = 0.75);
std::vector<double> moving_average(const std::vector<double>& x, std::size_t kernel);

// Adaptive-threshold detector on a band-passed window. The threshold rides on
// a 0.75 s moving average of the signal. Throws
// QualityTooLow when no threshold yields at least two peaks at a plausible rate.
PeakTrain detect_peaks(const PpgWindow& filtered);

// Intervals between successive peaks; rejects intervals outside
// [kMinNnMs, kMaxNnMs] or more than 30% away from the running median of the
// last five accepted ones. Throws QualityTooLow with < 2 surviving intervals.
NnSeries extract_nn(const PeakTrain& peaks);

// Requires at least four intervals (QualityTooLow otherwise).
FeatureVector hrv_features(const NnSeries& nn);

// Breathing rate from the interpolated tachogram, or nullopt when no spectral
// peak exists in the 0.1-0.4 Hz band.
std::optional<double> breathing_rate_hz(const NnSeries& nn);

// All intermediate stages of the pipeline, for callers (quality assessment)
// that need more than the features.
struct WindowAnalysis {
    PpgWindow filtered;  // band-passed
    std::optional<PeakTrain> peaks;
    std::optional<NnSeries> nn;
    std::optional<FeatureVector> features;
    std::string failure;  // reason when features are absent
};

WindowAnalysis analyze_window(const PpgWindow& window, const FilterSpec& spec = {});

// filter -> peaks -> NN -> features. Propagates QualityTooLow.
FeatureVector process_window(const PpgWindow& window, const FilterSpec& spec = {});

}  // namespace pulselabel::signal
