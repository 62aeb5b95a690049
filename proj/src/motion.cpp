#include "pulselabel/motion.hpp"

#include "pulselabel/errors.hpp"
#include "pulselabel/spectrum.hpp"
#include "pulselabel/stats.hpp"

#include <algorithm>
#include <cmath>
#include <span>

namespace pulselabel::activity {

namespace {

double pearson(std::span<const double> a, std::span<const double> b) {
    const double ma = stats::mean(a), mb = stats::mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0, peak_a = 0.0, peak_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        peak_a = std::max(peak_a, std::abs(a[i]));
        peak_b = std::max(peak_b, std::abs(b[i]));
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    // Constant channels have no defined correlation; report 0. The mean of a
    // constant is not exact in floating point, so compare against its scale.
    const double n = static_cast<double>(a.size());
    const double tiny = 1e-24 * n;
    if (!(saa > tiny * peak_a * peak_a) || !(sbb > tiny * peak_b * peak_b)) return 0.0;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double band_energy(std::span<const double> x, double fs) {
    const auto n = x.size();
    if (n < 2) return 0.0;
    const double mu = stats::mean(x);
    std::vector<double> c(x.begin(), x.end());
    for (double& v : c) v -= mu;
    const auto p = power_spectrum(c);
    const double nn = static_cast<double>(n) * static_cast<double>(n);
    double e = 0.0;
    for (std::size_t k = 1; k < p.size(); ++k) {
        const double f = static_cast<double>(k) * fs / static_cast<double>(n);
        if (f < kBandLowHz || f > kBandHighHz) continue;
        // One-sided bins carry both halves of the spectrum, except Nyquist.
        const bool nyquist = (n % 2 == 0) && k == n / 2;
        e += (nyquist ? 1.0 : 2.0) * p[k] / nn;
    }
    return e;
}

std::size_t zero_crossings(std::span<const double> x) {
    const double mu = stats::mean(x);
    std::size_t count = 0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        const bool a = x[i - 1] - mu >= 0.0;
        const bool b = x[i] - mu >= 0.0;
        if (a != b) ++count;
    }
    return count;
}

void sensor_features(std::span<const Vec3> s, double fs, MotionFeatures& out) {
    const auto n = s.size();
    std::array<std::vector<double>, 3> axis;
    std::vector<double> mag(n);
    for (auto& a : axis) a.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k) axis[k][i] = s[i][k];
        mag[i] = std::sqrt(s[i][0] * s[i][0] + s[i][1] * s[i][1] + s[i][2] * s[i][2]);
    }
    for (const auto& a : axis) {
        const auto [mn, mx] = std::minmax_element(a.begin(), a.end());
        double sq = 0.0;
        for (double v : a) sq += v * v;
        out.push_back(stats::mean(a));
        out.push_back(stats::stddev(a));
        out.push_back(*mn);
        out.push_back(*mx);
        out.push_back(std::sqrt(sq / static_cast<double>(n)));
    }
    out.push_back(stats::mean(mag));
    out.push_back(stats::stddev(mag));
    out.push_back(pearson(axis[0], axis[1]));
    out.push_back(pearson(axis[0], axis[2]));
    out.push_back(pearson(axis[1], axis[2]));
    out.push_back(static_cast<double>(zero_crossings(mag)));
    out.push_back(band_energy(axis[0], fs) + band_energy(axis[1], fs) + band_energy(axis[2], fs));
}

bool finite3(const Vec3& v) {
    return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

}  // namespace

MotionWindow MotionWindow::from_payload(const SamplePayload& p) {
    return MotionWindow{p.fs, p.acc, p.gyro, p.grav};
}

const std::vector<std::string>& motion_feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const char* sensor : {"acc", "gyro", "grav"}) {
            const std::string s(sensor);
            for (const char* ax : {"x", "y", "z"}) {
                for (const char* stat : {"mean", "std", "min", "max", "rms"}) {
                    v.push_back(s + "_" + ax + "_" + stat);
                }
            }
            for (const char* f : {"mag_mean", "mag_std", "corr_xy", "corr_xz", "corr_yz",
                                  "mag_zero_crossings", "band_energy"}) {
                v.push_back(s + "_" + f);
            }
        }
        return v;
    }();
    return names;
}

void validate_motion(const MotionWindow& m) {
    if (!(m.fs > 0.0) || !std::isfinite(m.fs)) throw ValidationError("fs", "must be positive");
    if (m.gyro.size() != m.acc.size()) throw ValidationError("gyro", "length differs from acc");
    if (m.grav.size() != m.acc.size()) throw ValidationError("grav", "length differs from acc");
    for (const auto* ch : {&m.acc, &m.gyro, &m.grav}) {
        if (!std::all_of(ch->begin(), ch->end(), finite3)) {
            const char* name = ch == &m.acc ? "acc" : ch == &m.gyro ? "gyro" : "grav";
            throw ValidationError(name, "non-finite value");
        }
    }
}

std::vector<MotionFeatures> extract_motion_features(const MotionWindow& m) {
    validate_motion(m);
    const auto sub = static_cast<std::size_t>(std::llround(kSubwindowSeconds * m.fs));
    if (sub == 0 || m.size() < sub) {
        throw ValidationError("acc", "window shorter than one 10 s subwindow");
    }
    const std::size_t count = m.size() / sub;
    std::vector<MotionFeatures> out(count);
    for (std::size_t w = 0; w < count; ++w) {
        auto& f = out[w];
        f.reserve(kMotionFeatureCount);
        const std::size_t off = w * sub;
        for (const auto* ch : {&m.acc, &m.gyro, &m.grav}) {
            sensor_features(std::span<const Vec3>(*ch).subspan(off, sub), m.fs, f);
        }
    }
    return out;
}

}  // namespace pulselabel::activity
