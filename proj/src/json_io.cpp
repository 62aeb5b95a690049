#include "pulselabel/json_io.hpp"

#include "pulselabel/errors.hpp"

#include <cmath>

namespace pulselabel {

std::string_view to_string(Context c) {
    switch (c) {
        case Context::Sit: return "sitting";
        case Context::Stand: return "standing";
        case Context::Walk: return "walking";
        case Context::Jog: return "jogging";
        case Context::LyingDown: return "lying_down";
        case Context::Other: return "other";
    }
    return "other";
}

std::string_view to_string(Emotion e) {
    switch (e) {
        case Emotion::Sad: return "sad";
        case Emotion::Mad: return "mad";
        case Emotion::Neutral: return "neutral";
        case Emotion::Happy: return "happy";
    }
    return "neutral";
}

std::optional<Context> context_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kContextCount; ++i) {
        const auto c = static_cast<Context>(i);
        if (to_string(c) == s) return c;
    }
    return std::nullopt;
}

std::optional<Emotion> emotion_from_string(std::string_view s) {
    for (auto e : {Emotion::Sad, Emotion::Mad, Emotion::Neutral, Emotion::Happy}) {
        if (to_string(e) == s) return e;
    }
    return std::nullopt;
}

namespace io {

namespace {

const json& require(const json& j, const char* field) {
    if (!j.is_object()) throw ValidationError("(body)", "expected a JSON object");
    auto it = j.find(field);
    if (it == j.end()) throw ValidationError(field, "missing");
    return *it;
}

double finite_number(const json& v, const std::string& field) {
    if (!v.is_number()) throw ValidationError(field, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(field, "non-finite value");
    return d;
}

std::vector<Vec3> triples(const json& j, const char* field) {
    const json& arr = require(j, field);
    if (!arr.is_array()) throw ValidationError(field, "expected an array of [x,y,z]");
    std::vector<Vec3> out;
    out.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const json& t = arr[i];
        if (!t.is_array() || t.size() != 3) {
            throw ValidationError(std::string(field) + "[" + std::to_string(i) + "]",
                                  "expected [x,y,z]");
        }
        out.push_back({finite_number(t[0], field), finite_number(t[1], field),
                       finite_number(t[2], field)});
    }
    return out;
}

json triples_json(const std::vector<Vec3>& v) {
    json arr = json::array();
    for (const auto& t : v) arr.push_back({t[0], t[1], t[2]});
    return arr;
}

}  // namespace

json to_json(const SamplePayload& p) {
    json j{{"subject_id", p.subject_id},
           {"t_start_ms", p.t_start_ms},
           {"fs", p.fs},
           {"ppg", p.ppg},
           {"acc", triples_json(p.acc)},
           {"gyro", triples_json(p.gyro)},
           {"grav", triples_json(p.grav)}};
    if (!p.sample_id.empty()) j["sample_id"] = p.sample_id;
    if (p.duration_s) j["duration_s"] = *p.duration_s;
    return j;
}

SamplePayload payload_from_json(const json& j, std::optional<double> declared_duration_s) {
    SamplePayload p;
    const json& sid = require(j, "subject_id");
    if (!sid.is_string() || sid.get<std::string>().empty()) {
        throw ValidationError("subject_id", "expected a non-empty string");
    }
    p.subject_id = sid.get<std::string>();
    const json& t = require(j, "t_start_ms");
    if (!t.is_number_integer()) throw ValidationError("t_start_ms", "expected an integer");
    p.t_start_ms = t.get<std::int64_t>();
    p.fs = finite_number(require(j, "fs"), "fs");
    if (!(p.fs > 0.0)) throw ValidationError("fs", "must be positive");

    if (auto it = j.find("sample_id"); it != j.end()) {
        if (!it->is_string()) throw ValidationError("sample_id", "expected a string");
        p.sample_id = it->get<std::string>();
    }
    if (auto it = j.find("duration_s"); it != j.end()) {
        p.duration_s = finite_number(*it, "duration_s");
    }

    const json& ppg = require(j, "ppg");
    if (!ppg.is_array()) throw ValidationError("ppg", "expected an array of numbers");
    p.ppg.reserve(ppg.size());
    for (const json& v : ppg) p.ppg.push_back(finite_number(v, "ppg"));
    p.acc = triples(j, "acc");
    p.gyro = triples(j, "gyro");
    p.grav = triples(j, "grav");

    const auto duration = p.duration_s ? p.duration_s : declared_duration_s;
    if (duration) {
        const auto expected = static_cast<std::size_t>(std::llround(*duration * p.fs));
        if (p.ppg.size() != expected) {
            throw ValidationError("ppg", "length " + std::to_string(p.ppg.size()) +
                                             " does not match fs x duration = " +
                                             std::to_string(expected));
        }
    }
    if (p.acc.size() != p.ppg.size()) throw ValidationError("acc", "length differs from ppg");
    if (p.gyro.size() != p.ppg.size()) throw ValidationError("gyro", "length differs from ppg");
    if (p.grav.size() != p.ppg.size()) throw ValidationError("grav", "length differs from ppg");
    return p;
}

json to_json(const signal::FeatureVector& f) {
    json j = json::object();
    const auto values = f.to_array();
    const auto& names = signal::FeatureVector::names();
    for (std::size_t i = 0; i < values.size(); ++i) j[std::string(names[i])] = values[i];
    j["br_valid"] = f.br_valid;
    return j;
}

signal::FeatureVector features_from_json(const json& j) {
    std::array<double, signal::FeatureVector::kSize> values{};
    const auto& names = signal::FeatureVector::names();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::string key(names[i]);
        values[i] = finite_number(require(j, key.c_str()), key);
    }
    auto f = signal::FeatureVector::from_array(values);
    f.br_valid = j.value("br_valid", f.br_hz > 0.0);
    return f;
}

json to_json(const quality::QualityReport& q) {
    return json{{"skewness_var", q.skewness_var},
                {"kurtosis_var", q.kurtosis_var},
                {"apen_var", q.apen_var},
                {"shannon_entropy", q.shannon_entropy},
                {"spectral_entropy", q.spectral_entropy},
                {"usable", q.usable},
                {"cycles", q.cycles},
                {"degenerate_cycles", q.degenerate_cycles}};
}

quality::QualityReport quality_from_json(const json& j) {
    quality::QualityReport q;
    q.skewness_var = j.at("skewness_var").get<double>();
    q.kurtosis_var = j.at("kurtosis_var").get<double>();
    q.apen_var = j.at("apen_var").get<double>();
    q.shannon_entropy = j.at("shannon_entropy").get<double>();
    q.spectral_entropy = j.at("spectral_entropy").get<double>();
    q.usable = j.at("usable").get<bool>();
    q.cycles = j.value("cycles", std::size_t{0});
    q.degenerate_cycles = j.value("degenerate_cycles", std::size_t{0});
    return q;
}

}  // namespace io
}  // namespace pulselabel
