#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pulselabel {

using Vec3 = std::array<double, 3>;

// Self-reported (and simulated) physical context. The activity classifier
// folds LyingDown and Other into its "Others" class.
enum class Context { Sit, Stand, Walk, Jog, LyingDown, Other };
inline constexpr std::size_t kContextCount = 6;

enum class Emotion { Sad, Mad, Neutral, Happy };

std::string_view to_string(Context c);
std::string_view to_string(Emotion e);
std::optional<Context> context_from_string(std::string_view s);
std::optional<Emotion> emotion_from_string(std::string_view s);

// Stress answer options, index = ordinal value 0..4.
inline constexpr std::array<std::string_view, 5> kStressOptions{
    "not at all", "a little bit", "some", "a lot", "extremely"};

// Wire-level sample: one window of PPG plus 3-axis motion channels.
struct SamplePayload {
    std::string sample_id;  // optional on the wire; derived when empty
    std::string subject_id;
    std::int64_t t_start_ms = 0;
    double fs = 20.0;
    std::optional<double> duration_s;
    std::vector<double> ppg;
    std::vector<Vec3> acc;
    std::vector<Vec3> gyro;
    std::vector<Vec3> grav;

    std::int64_t t_end_ms() const {
        return t_start_ms + static_cast<std::int64_t>(
                                static_cast<double>(ppg.size()) * 1000.0 / fs + 0.5);
    }
};

}  // namespace pulselabel
