#pragma once

#include "pulselabel/types.hpp"

#include <string>
#include <vector>

namespace pulselabel::activity {

// Three-axis motion channels, time-aligned with the PPG window.
struct MotionWindow {
    double fs = 20.0;
    std::vector<Vec3> acc;
    std::vector<Vec3> gyro;
    std::vector<Vec3> grav;

    static MotionWindow from_payload(const SamplePayload& p);
    std::size_t size() const { return acc.size(); }
};

inline constexpr double kSubwindowSeconds = 10.0;
inline constexpr double kBandLowHz = 0.5;
inline constexpr double kBandHighHz = 3.0;

// Feature layout, repeated for acc, gyro, grav in that order:
//   x, y, z:  mean, std, min, max, rms           (15)
//   magnitude mean, magnitude std                  (2)
//   corr xy, corr xz, corr yz                      (3)
//   zero crossings of the mean-removed magnitude   (1)
//   0.5-3 Hz energy summed over the three axes     (1)
// Energies are mean squares, so a unit sine in band contributes 0.5.
inline constexpr std::size_t kFeaturesPerSensor = 22;
inline constexpr std::size_t kMotionFeatureCount = 3 * kFeaturesPerSensor;

using MotionFeatures = std::vector<double>;

const std::vector<std::string>& motion_feature_names();

// Throws ValidationError on unequal lengths, non-finite values or fs <= 0.
void validate_motion(const MotionWindow& m);

// One vector per whole 10 s subwindow; a trailing partial subwindow is
// dropped. Throws ValidationError when the window is shorter than 10 s.
std::vector<MotionFeatures> extract_motion_features(const MotionWindow& m);

}  // namespace pulselabel::activity
