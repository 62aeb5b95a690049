#include "pulselabel/simulator.hpp"

#include "pulselabel/errors.hpp"
#include "pulselabel/hashing.hpp"
#include "pulselabel/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <numbers>
#include <random>

namespace pulselabel::sim {

namespace {

constexpr double kGravity = 9.81;
constexpr double kQuantum = 1e-4;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t idx(Context c) { return static_cast<std::size_t>(c); }

double quantize(double v) { return std::round(v / kQuantum) * kQuantum; }

std::mt19937_64 slot_rng(std::uint64_t seed, std::size_t slot, std::uint64_t stream) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(slot * 0x9e37ULL + stream)));
}

int hour_of_day(std::int64_t t_ms) {
    const std::int64_t day_ms = 24LL * 3600 * 1000;
    const std::int64_t in_day = ((t_ms % day_ms) + day_ms) % day_ms;
    return static_cast<int>(in_day / (3600LL * 1000));
}

// Activity mix by hour of day, order Sit, Stand, Walk, Jog, LyingDown, Other.
std::array<double, kContextCount> daytime_mix(int hour) {
    if (hour >= 7 && hour < 9) return {0.30, 0.25, 0.25, 0.00, 0.00, 0.20};
    if (hour >= 12 && hour < 13) return {0.40, 0.15, 0.30, 0.00, 0.00, 0.15};
    if (hour >= 17 && hour < 19) return {0.30, 0.10, 0.25, 0.15, 0.00, 0.20};
    if (hour >= 19) return {0.45, 0.10, 0.10, 0.00, 0.15, 0.20};
    return {0.60, 0.12, 0.15, 0.00, 0.00, 0.13};
}

Vec3 base_orientation(Context c) {
    switch (c) {
        case Context::Sit: return {0.20, 0.30, 0.93};
        case Context::Stand: return {0.95, 0.10, 0.25};
        case Context::Walk: return {0.90, 0.20, 0.35};
        case Context::Jog: return {0.60, 0.30, 0.74};
        case Context::LyingDown: return {0.10, 0.97, 0.20};
        case Context::Other: return {0.50, 0.50, 0.70};
    }
    return {0.0, 0.0, 1.0};
}

Vec3 normalized(Vec3 v, double length) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    for (double& x : v) x = x / n * length;
    return v;
}

// Asymmetric double-Gaussian beat: fast systolic rise, slower fall, and a
// smaller diastolic wave. `dt` is seconds from the systolic peak, `period`
// the beat's interval in seconds.
double pulse_shape(double dt, double period) {
    const double rise = 0.04 * period;
    const double fall = 0.08 * period;
    const double sigma = dt < 0.0 ? rise : fall;
    const double systolic = std::exp(-dt * dt / (2.0 * sigma * sigma));
    const double d = dt - 0.30 * period;
    const double dia_sigma = 0.06 * period;
    const double diastolic = 0.25 * std::exp(-d * d / (2.0 * dia_sigma * dia_sigma));
    return systolic + diastolic;
}

std::vector<double> smoothed_noise(std::mt19937_64& rng, std::size_t n, std::size_t kernel) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> w(n + kernel);
    for (double& v : w) v = g(rng);
    std::vector<double> out(n);
    const double scale = std::sqrt(static_cast<double>(kernel));
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < kernel; ++j) s += w[i + j];
        out[i] = s / scale;
    }
    return out;
}

}  // namespace

ResponderModel ResponderModel::defaults() {
    ResponderModel m;
    for (int h = 0; h < 24; ++h) {
        double f = 1.0;
        if (h < 7) f = 0.15;
        else if (h < 9) f = 0.45;
        else if (h == 13) f = 1.1;
        else if (h == 14) f = 1.35;
        else if (h == 15) f = 1.25;
        else if (h >= 22) f = 0.6;
        m.hour_factor[static_cast<std::size_t>(h)] = f;
    }
    m.context_rate = {1.0, 1.0, 0.85, 0.5, 0.9, 0.9};
    m.median_latency_s = {90.0, 75.0, 120.0, 200.0, 420.0, 110.0};
    return m;
}

std::int64_t SubjectProfile::slot_start_ms(std::size_t slot) const {
    return t0_ms + static_cast<std::int64_t>(slot) * static_cast<std::int64_t>(period_s * 1000.0);
}

SubjectProfile make_profile(std::string subject_id, std::uint64_t seed,
                            const ProfileOptions& options) {
    SubjectProfile p;
    p.subject_id = std::move(subject_id);
    p.seed = seed;
    p.period_s = options.period_s;
    p.window_s = options.window_s;
    p.noise_amp = {0.03, 0.085, 0.30, 0.50, 0.03, 0.15};
    p.hr_offset_bpm = {0.0, 5.0, 18.0, 45.0, -5.0, 6.0};
    if (options.stress) p.stress = *options.stress;

    std::mt19937_64 rng(splitmix64(seed ^ 0x5eedULL));
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    // Per-subject physiology and gait, drawn once.
    p.base_hr_bpm = 66.0 + 6.0 * g(rng);
    p.hrv_amp_ms = std::max(15.0, 40.0 + 8.0 * g(rng));
    p.resp_hz = std::clamp(0.22 + 0.02 * g(rng), 0.16, 0.28);
    p.walk_cadence_hz = 1.8 + 0.1 * g(rng);
    p.jog_cadence_hz = 2.7 + 0.1 * g(rng);
    p.orientation_jitter = 0.06;

    const auto slots = static_cast<std::size_t>(std::llround(options.days * 86400.0 / p.period_s));
    p.schedule.resize(slots);
    p.stress_latent.resize(slots);

    Context prev = Context::LyingDown;
    for (std::size_t k = 0; k < slots; ++k) {
        Context c;
        if (options.fixed_activity) {
            c = *options.fixed_activity;
        } else {
            const int h = hour_of_day(p.slot_start_ms(k));
            if (h >= 23 || h < 7) {
                c = u(rng) < 0.03 ? Context::Other : Context::LyingDown;
            } else {
                const auto mix = daytime_mix(h);
                if (prev != Context::LyingDown && mix[idx(prev)] > 0.0 && u(rng) < 0.55) {
                    c = prev;
                } else {
                    std::discrete_distribution<int> pick(mix.begin(), mix.end());
                    c = static_cast<Context>(pick(rng));
                }
            }
        }
        p.schedule[k] = c;
        prev = c;
    }

    const auto& sp = p.stress;
    double z = sp.mean + sp.sd * g(rng);
    const double innovation = sp.sd * std::sqrt(std::max(0.0, 1.0 - sp.phi * sp.phi));
    for (std::size_t k = 0; k < slots; ++k) {
        if (k > 0) z = sp.mean + sp.phi * (z - sp.mean) + innovation * g(rng);
        p.stress_latent[k] = z;
    }
    return p;
}

int quantize_stress(double latent) {
    const double z = std::clamp(latent, 0.0, 1.0);
    return std::clamp(static_cast<int>(std::lround(z * 4.0)), 0, 4);
}

SimulatedWindow generate_window(const SubjectProfile& profile, std::size_t slot) {
    return generate_window(profile, slot, WindowOverrides{});
}

SimulatedWindow generate_window(const SubjectProfile& profile, std::size_t slot,
                                const WindowOverrides& ov) {
    if (slot >= profile.slots() && !ov.activity) {
        throw ConfigError("slot " + std::to_string(slot) + " outside the simulated horizon");
    }
    auto rng = slot_rng(profile.seed, slot, 1);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    SimulatedWindow out;
    const Context act = ov.activity ? *ov.activity : profile.schedule[slot];
    const double stress =
        slot < profile.slots() ? std::clamp(profile.stress_latent[slot], 0.0, 1.0) : 0.0;
    out.activity = act;
    out.stress = stress;

    const double fs = profile.fs;
    const double window_s = ov.window_s.value_or(profile.window_s);
    const auto n = static_cast<std::size_t>(std::llround(window_s * fs));
    const bool jitter = !ov.deterministic_rhythm;

    double hr = ov.hr_bpm.value_or(profile.base_hr_bpm + profile.hr_offset_bpm[idx(act)] +
                                   profile.stress_hr_bpm * stress);
    double amp = ov.hrv_amp_ms.value_or(profile.hrv_amp_ms * (1.0 - 0.5 * stress));
    double resp = ov.resp_hz.value_or(profile.resp_hz + 0.08 * stress);
    const double j_hr = g(rng), j_amp = g(rng), j_resp = g(rng);
    if (jitter) {
        if (!ov.hr_bpm) hr += profile.hr_jitter_bpm * j_hr;
        if (!ov.hrv_amp_ms) amp *= std::max(0.2, 1.0 + profile.amp_jitter * j_amp);
        if (!ov.resp_hz) resp += profile.resp_jitter_hz * j_resp;
    }
    resp = std::clamp(resp, 0.12, 0.38);
    hr = std::clamp(hr, 40.0, 200.0);
    const double base_ibi_ms = 60000.0 / hr;
    const double resp_phase = kTwoPi * u(rng);

    // Beat times from the modulated interval, starting before the window so
    // the first in-window beat is unbiased.
    std::vector<double> beats;
    std::vector<double> periods;
    double t = -2000.0 - u(rng) * base_ibi_ms;
    const double end_ms = window_s * 1000.0 + 2000.0;
    while (t < end_ms) {
        const double ibi = base_ibi_ms + amp * std::sin(kTwoPi * resp * t / 1000.0 + resp_phase);
        beats.push_back(t);
        periods.push_back(ibi);
        t += ibi;
    }
    double ibi_sum = 0.0;
    std::size_t ibi_count = 0;
    for (std::size_t b = 0; b < beats.size(); ++b) {
        if (beats[b] >= 0.0 && beats[b] < window_s * 1000.0) {
            out.beat_times_ms.push_back(beats[b]);
            if (b + 1 < beats.size() && beats[b + 1] < window_s * 1000.0) {
                ibi_sum += beats[b + 1] - beats[b];
                ++ibi_count;
            }
        }
    }
    out.true_bpm = ibi_count > 0 ? 60000.0 / (ibi_sum / static_cast<double>(ibi_count)) : hr;

    // Clean pulse waveform plus a slow respiratory baseline.
    std::vector<double> ppg(n, 0.0);
    std::size_t first_beat = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ts = static_cast<double>(i) / fs;
        const double tms = ts * 1000.0;
        while (first_beat + 1 < beats.size() && beats[first_beat] + 2.0 * periods[first_beat] < tms) {
            ++first_beat;
        }
        double v = 0.0;
        for (std::size_t b = first_beat; b < beats.size() && beats[b] < tms + periods[b]; ++b) {
            v += pulse_shape((tms - beats[b]) / 1000.0, periods[b] / 1000.0);
        }
        ppg[i] = v + 0.02 * std::sin(kTwoPi * resp * ts + resp_phase);
    }

    // Motion channels and the PPG artefacts they induce.
    auto mrng = slot_rng(profile.seed, slot, 2);
    std::normal_distribution<double> mg(0.0, 1.0);
    std::uniform_real_distribution<double> mu(0.0, 1.0);

    auto srng = std::mt19937_64(splitmix64(profile.seed ^ 0x7117ULL ^ (idx(act) + 1)));
    std::normal_distribution<double> sg(0.0, 1.0);
    Vec3 dir = base_orientation(act);
    for (double& d : dir) d += profile.orientation_jitter * sg(srng);
    dir = normalized(dir, kGravity);

    double cadence = 0.0, lin_amp = 0.0, gyro_amp = 0.0, sway = 0.0, gyro_noise = 0.0;
    switch (act) {
        case Context::Sit: sway = 0.03; gyro_noise = 0.02; break;
        case Context::Stand: sway = 0.12; gyro_noise = 0.06; break;
        case Context::Walk:
            cadence = profile.walk_cadence_hz; lin_amp = 1.6; gyro_amp = 1.2;
            sway = 0.25; gyro_noise = 0.15; break;
        case Context::Jog:
            cadence = profile.jog_cadence_hz; lin_amp = 4.5; gyro_amp = 2.5;
            sway = 0.6; gyro_noise = 0.3; break;
        case Context::LyingDown: sway = 0.015; gyro_noise = 0.01; break;
        case Context::Other: sway = 0.7; gyro_noise = 0.5; break;
    }
    const double phase0 = kTwoPi * mu(mrng);
    const std::size_t smooth_k = act == Context::Other || act == Context::Stand ? 15 : 3;
    std::array<std::vector<double>, 3> acc_noise, gyro_wander;
    for (int a = 0; a < 3; ++a) {
        acc_noise[a] = smoothed_noise(mrng, n, smooth_k);
        gyro_wander[a] = smoothed_noise(mrng, n, smooth_k);
    }

    out.payload.acc.resize(n);
    out.payload.gyro.resize(n);
    out.payload.grav.resize(n);
    std::vector<double> motion_mag(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double ts = static_cast<double>(i) / fs;
        const double swing = cadence > 0.0 ? std::sin(kTwoPi * 0.5 * cadence * ts + phase0) : 0.0;
        Vec3 gv = dir;
        if (cadence > 0.0) {
            // Arm swing tilts the gravity vector.
            gv[0] += 0.25 * kGravity * swing;
            gv[2] -= 0.15 * kGravity * swing;
            gv = normalized(gv, kGravity);
        }
        Vec3 lin{};
        const double step = cadence > 0.0 ? std::sin(kTwoPi * cadence * ts + phase0) : 0.0;
        const double step2 = cadence > 0.0 ? std::sin(2.0 * kTwoPi * cadence * ts + 2.0 * phase0) : 0.0;
        lin[0] = lin_amp * (0.8 * step + 0.3 * step2) + sway * acc_noise[0][i];
        lin[1] = lin_amp * 0.4 * step + sway * acc_noise[1][i];
        lin[2] = lin_amp * (0.6 * step - 0.2 * step2) + sway * acc_noise[2][i];
        Vec3 gy{};
        gy[0] = gyro_amp * swing + gyro_noise * gyro_wander[0][i];
        gy[1] = 0.3 * gyro_amp * swing + gyro_noise * gyro_wander[1][i];
        gy[2] = gyro_noise * gyro_wander[2][i];

        for (int a = 0; a < 3; ++a) {
            out.payload.grav[i][a] = quantize(gv[a]);
            out.payload.acc[i][a] = quantize(gv[a] + lin[a]);
            out.payload.gyro[i][a] = quantize(gy[a]);
        }
        motion_mag[i] = std::sqrt(lin[0] * lin[0] + lin[1] * lin[1] + lin[2] * lin[2]);
    }

    // PPG motion/noise artefact: white sensor noise, band-limited wander and a
    // component following the linear acceleration.
    const double noise = ov.noise_scale.value_or(profile.noise_amp[idx(act)]);
    if (noise > 0.0) {
        const double mag_mean =
            std::accumulate(motion_mag.begin(), motion_mag.end(), 0.0) / static_cast<double>(n);
        const double mag_scale = lin_amp > 0.0 ? 1.0 / lin_amp : 0.0;
        auto prng = slot_rng(profile.seed, slot, 3);
        std::normal_distribution<double> pg(0.0, 1.0);
        const auto wander = smoothed_noise(prng, n, 8);
        // Slow hydrostatic baseline shifts while the arm moves.
        const auto drift = smoothed_noise(prng, n, 40);
        const double drift_amp = cadence > 0.0 ? 1.5 : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ppg[i] += noise * (0.6 * pg(prng) + 0.8 * wander[i] + drift_amp * drift[i] +
                               1.6 * mag_scale * (motion_mag[i] - mag_mean));
        }
    }

    out.payload.subject_id = profile.subject_id;
    out.payload.t_start_ms = profile.slot_start_ms(slot);
    out.payload.fs = fs;
    out.payload.ppg.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.payload.ppg[i] = quantize(10.0 + profile.ppg_gain * ppg[i]);
    }
    return out;
}

std::optional<ScriptedResponse> respond(const SubjectProfile& profile,
                                        std::int64_t dispatched_at_ms, Context context,
                                        double stress) {
    const auto& m = profile.responder;
    const std::string key = profile.subject_id + "/respond/" + std::to_string(dispatched_at_ms);
    std::mt19937_64 rng(splitmix64(fnv1a64(key) ^ profile.seed));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);

    const int hour = hour_of_day(dispatched_at_ms);
    const double rate = std::clamp(
        m.base_rate * m.hour_factor[static_cast<std::size_t>(hour)] * m.context_rate[idx(context)],
        0.0, 1.0);
    const double draw = u(rng);
    if (!(draw < rate)) return std::nullopt;

    const double z = std::clamp(stress, 0.0, 1.0);
    ScriptedResponse r;
    const double median = m.median_latency_s[idx(context)] * (1.0 - m.stress_speedup * z);
    r.latency_s = std::max(1.0, median * std::exp(m.latency_sigma * g(rng)));
    r.stress = quantize_stress(stress);
    r.activity = context;

    const double level = static_cast<double>(r.stress);
    const std::array<double, 4> w{0.05 + 0.06 * level, 0.03 + 0.05 * level, 0.40,
                                  std::max(0.05, 0.50 - 0.11 * level)};
    std::discrete_distribution<int> pick(w.begin(), w.end());
    r.emotion = static_cast<Emotion>(pick(rng));
    return r;
}

std::vector<SubjectProfile> make_cohort(const DatasetOptions& options) {
    std::vector<SubjectProfile> cohort;
    for (std::size_t s = 0; s < options.subjects; ++s) {
        char id[16];
        std::snprintf(id, sizeof id, "S%02zu", s + 1);
        ProfileOptions po;
        po.days = options.days;
        po.period_s = options.period_s;
        po.window_s = options.window_s;
        cohort.push_back(make_profile(id, splitmix64(options.seed * 1000 + s), po));
    }
    return cohort;
}

std::size_t write_dataset(const std::vector<SubjectProfile>& cohort,
                          const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write dataset " + path.string());

    nlohmann::json header{{"format", "pulselabel.dataset"}, {"version", 1}};
    auto& subjects = header["subjects"] = nlohmann::json::array();
    for (const auto& p : cohort) subjects.push_back(p.subject_id);
    out << header.dump() << '\n';

    std::size_t max_slots = 0;
    for (const auto& p : cohort) max_slots = std::max(max_slots, p.slots());

    std::size_t lines = 0;
    for (std::size_t slot = 0; slot < max_slots; ++slot) {
        for (const auto& p : cohort) {
            if (slot >= p.slots()) continue;
            const auto w = generate_window(p, slot);
            nlohmann::json line{{"type", "sample"}, {"payload", io::to_json(w.payload)}};
            const auto script = respond(p, w.payload.t_end_ms(), w.activity, w.stress);
            nlohmann::json js{{"respond", script.has_value()}};
            if (script) {
                js["latency_s"] = script->latency_s;
                js["stress"] = script->stress;
                js["emotion"] = to_string(script->emotion);
                js["activity"] = to_string(script->activity);
            }
            line["script"] = js;
            line["truth"] = {{"activity", to_string(w.activity)},
                             {"bpm", w.true_bpm},
                             {"stress", w.stress}};
            out << line.dump() << '\n';
            ++lines;
        }
    }
    return lines;
}

}  // namespace pulselabel::sim
