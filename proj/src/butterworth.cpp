#include "pulselabel/butterworth.hpp"

#include "pulselabel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace pulselabel::signal {

namespace {

using cplx = std::complex<double>;

std::vector<double> filter_with_state(const SosCascade& sos, std::span<const double> x,
                                      std::vector<std::array<double, 2>> state) {
    std::vector<double> y(x.begin(), x.end());
    for (std::size_t s = 0; s < sos.size(); ++s) {
        const auto& [b, a] = sos[s];
        double z1 = state[s][0];
        double z2 = state[s][1];
        for (double& v : y) {
            const double in = v;
            const double out = b[0] * in + z1;
            z1 = b[1] * in - a[1] * out + z2;
            z2 = b[2] * in - a[2] * out;
            v = out;
        }
    }
    return y;
}

}  // namespace

SosCascade butterworth_bandpass(int order, double low_hz, double high_hz, double fs) {
    if (order < 1) throw ConfigError("filter order must be >= 1");
    if (!(fs > 0.0)) throw ConfigError("sampling rate must be positive");
    if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < fs / 2.0)) {
        throw ConfigError("band edges must satisfy 0 < low < high < fs/2 (low=" +
                          std::to_string(low_hz) + ", high=" + std::to_string(high_hz) +
                          ", fs=" + std::to_string(fs) + ")");
    }
    const double pi = std::numbers::pi;
    const double two_fs = 2.0 * fs;
    const double wl = two_fs * std::tan(pi * low_hz / fs);
    const double wh = two_fs * std::tan(pi * high_hz / fs);
    const double bw = wh - wl;
    const double w0sq = wl * wh;

    // Analog low-pass prototype poles, left half plane.
    std::vector<cplx> proto;
    for (int m = -order + 1; m < order; m += 2) {
        proto.push_back(-std::exp(cplx(0.0, pi * m / (2.0 * order))));
    }

    // Low-pass to band-pass: each prototype pole splits into two.
    std::vector<cplx> analog;
    for (const cplx& p : proto) {
        const cplx half = p * bw / 2.0;
        const cplx root = std::sqrt(half * half - w0sq);
        analog.push_back(half + root);
        analog.push_back(half - root);
    }

    // Bilinear transform. `order` zeros at s = 0 map to z = +1, the same
    // number at infinity map to z = -1.
    cplx gain = std::pow(bw, order);
    cplx num = std::pow(cplx(two_fs, 0.0), order);
    cplx den = 1.0;
    std::vector<cplx> poles;
    for (const cplx& p : analog) {
        poles.push_back((two_fs + p) / (two_fs - p));
        den *= (two_fs - p);
    }
    gain *= num / den;

    // Pair poles into sections: complex conjugates first, then reals.
    std::vector<cplx> upper;
    std::vector<double> reals;
    for (const cplx& p : poles) {
        if (std::abs(p.imag()) > 1e-12) {
            if (p.imag() > 0) upper.push_back(p);
        } else {
            reals.push_back(p.real());
        }
    }
    std::sort(upper.begin(), upper.end(),
              [](const cplx& l, const cplx& r) { return std::abs(l) < std::abs(r); });
    std::sort(reals.begin(), reals.end());

    SosCascade sos;
    for (const cplx& p : upper) {
        Biquad q;
        q.b = {1.0, 0.0, -1.0};
        q.a = {1.0, -2.0 * p.real(), std::norm(p)};
        sos.push_back(q);
    }
    for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
        Biquad q;
        q.b = {1.0, 0.0, -1.0};
        q.a = {1.0, -(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]};
        sos.push_back(q);
    }
    const double k = gain.real();
    for (double& c : sos.front().b) c *= k;
    return sos;
}

std::complex<double> sos_response(const SosCascade& sos, double f_hz, double fs) {
    const cplx zinv = std::exp(cplx(0.0, -2.0 * std::numbers::pi * f_hz / fs));
    cplx h = 1.0;
    for (const auto& [b, a] : sos) {
        h *= (b[0] + b[1] * zinv + b[2] * zinv * zinv) /
             (a[0] + a[1] * zinv + a[2] * zinv * zinv);
    }
    return h;
}

std::vector<double> sos_filter(const SosCascade& sos, std::span<const double> x) {
    return filter_with_state(sos, x, std::vector<std::array<double, 2>>(sos.size()));
}

std::vector<std::array<double, 2>> sos_step_state(const SosCascade& sos) {
    std::vector<std::array<double, 2>> state(sos.size());
    double level = 1.0;  // steady input level seen by the current section
    for (std::size_t s = 0; s < sos.size(); ++s) {
        const auto& [b, a] = sos[s];
        const double dc = (b[0] + b[1] + b[2]) / (a[0] + a[1] + a[2]);
        const double out = level * dc;
        state[s] = {out - level * b[0], level * b[2] - a[2] * out};
        level = out;
    }
    return state;
}

std::vector<double> sos_filtfilt(const SosCascade& sos, std::span<const double> x,
                                 std::size_t pad) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    pad = std::min(pad, n - 1);

    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    const auto unit = sos_step_state(sos);
    auto scaled = [&unit](double level) {
        auto st = unit;
        for (auto& z : st) {
            z[0] *= level;
            z[1] *= level;
        }
        return st;
    };

    auto fwd = filter_with_state(sos, ext, scaled(ext.front()));
    std::reverse(fwd.begin(), fwd.end());
    auto bwd = filter_with_state(sos, fwd, scaled(fwd.front()));
    std::reverse(bwd.begin(), bwd.end());
    return {bwd.begin() + static_cast<std::ptrdiff_t>(pad),
            bwd.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

}  // namespace pulselabel::signal
