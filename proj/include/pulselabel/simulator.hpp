#pragma once

#include "pulselabel/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

// Seeded desk-scale stand-in for a wearer and their phone: synthetic PPG and
// motion windows with known heart rate, activity and latent stress, plus a
// scripted EMA responder.
namespace pulselabel::sim {

// AR(1) latent stress on [0, 1] (clamped when read), one step per period.
struct StressProcess {
    double mean = 0.35;
    double phi = 0.5;  // per-period persistence; 0.5 is a 15 min half-life
    double sd = 0.2;   // stationary standard deviation
};

struct ResponderModel {
    double base_rate = 0.65;
    std::array<double, 24> hour_factor{};  // multiplies base_rate
    std::array<double, kContextCount> context_rate{};
    std::array<double, kContextCount> median_latency_s{};
    double latency_sigma = 0.6;  // log-normal shape
    double stress_speedup = 0.5;  // latency *= 1 - stress_speedup * stress

    static ResponderModel defaults();
};

struct SubjectProfile {
    std::string subject_id = "S01";
    std::uint64_t seed = 1;
    std::int64_t t0_ms = 0;
    double period_s = 900.0;
    double window_s = 120.0;
    double fs = 20.0;

    double base_hr_bpm = 68.0;
    double hrv_amp_ms = 40.0;   // sinusoidal IBI modulation amplitude
    double resp_hz = 0.22;      // modulation (breathing) frequency at rest
    double stress_hr_bpm = 10.0;  // HR elevation at maximum stress
    double hr_jitter_bpm = 1.5;   // independent per-window variation
    double amp_jitter = 0.15;
    double resp_jitter_hz = 0.01;
    double ppg_gain = 1.0;

    std::array<double, kContextCount> noise_amp{};   // PPG motion-noise scale
    std::array<double, kContextCount> hr_offset_bpm{};
    double walk_cadence_hz = 1.8;
    double jog_cadence_hz = 2.7;
    double orientation_jitter = 0.0;  // per-subject wrist tilt

    StressProcess stress;
    ResponderModel responder = ResponderModel::defaults();

    // Materialized per-period state covering the horizon.
    std::vector<Context> schedule;
    std::vector<double> stress_latent;

    std::size_t slots() const { return schedule.size(); }
    std::int64_t slot_start_ms(std::size_t slot) const;
};

struct ProfileOptions {
    double days = 3.0;
    double period_s = 900.0;
    double window_s = 120.0;
    std::optional<Context> fixed_activity;  // constant schedule when set
    std::optional<StressProcess> stress;
};

// Default profile with a daily routine: sleep lying down at night, mostly
// sitting with walking/standing bouts by day, occasional evening jogs.
SubjectProfile make_profile(std::string subject_id, std::uint64_t seed,
                            const ProfileOptions& options = {});

// Ground truth attached to a generated window.
struct SimulatedWindow {
    SamplePayload payload;
    Context activity = Context::Sit;
    double true_bpm = 0.0;
    double stress = 0.0;  // latent, clamped to [0, 1]
    std::vector<double> beat_times_ms;
};

// Window starting at slot `slot`. Deterministic per (seed, slot).
SimulatedWindow generate_window(const SubjectProfile& profile, std::size_t slot);

// Overrides for single-purpose windows (tests and calibration).
struct WindowOverrides {
    std::optional<double> hr_bpm;
    std::optional<double> hrv_amp_ms;
    std::optional<double> resp_hz;
    std::optional<double> noise_scale;  // replaces noise_amp[activity]
    std::optional<Context> activity;
    std::optional<double> window_s;
    bool deterministic_rhythm = false;  // no per-window jitter
};

SimulatedWindow generate_window(const SubjectProfile& profile, std::size_t slot,
                                const WindowOverrides& overrides);

// Five-level stress answer from the latent value.
int quantize_stress(double latent);

struct ScriptedResponse {
    double latency_s = 0.0;
    int stress = 0;
    Emotion emotion = Emotion::Neutral;
    Context activity = Context::Sit;
};

// Scripted answer to a query dispatched at `dispatched_at_ms` while the
// subject is in `context` with latent stress `stress`. nullopt = no answer.
std::optional<ScriptedResponse> respond(const SubjectProfile& profile,
                                        std::int64_t dispatched_at_ms, Context context,
                                        double stress);

// Replay dataset: one header line, then one JSON object per sample in
// timestamp order, each with the responder's pre-drawn script.
struct DatasetOptions {
    std::size_t subjects = 4;
    double days = 3.0;
    std::uint64_t seed = 1;
    double period_s = 900.0;
    double window_s = 120.0;
    bool store_profiles = true;
};

std::vector<SubjectProfile> make_cohort(const DatasetOptions& options);

// Returns the number of sample lines written.
std::size_t write_dataset(const std::vector<SubjectProfile>& cohort,
                          const std::filesystem::path& path);

}  // namespace pulselabel::sim
