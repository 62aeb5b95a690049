#include "pulselabel/config.hpp"

#include "pulselabel/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

namespace pulselabel {

using nlohmann::json;

namespace {

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{
        "window_s", "period_s",       "N_initial",       "K_regions",        "quota",
        "D",        "p_floor",        "quota_mode",      "seed",             "data_dir",
        "model_path", "store_payloads", "checkpoint_every", "min_group_count", "host",
        "port"};
    return keys;
}

std::string env_name(const std::string& key) {
    std::string out = "PULSELABEL_";
    for (char c : key) out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    return out;
}

// Environment values are strings; coerce them to the type the key expects.
json coerce(const std::string& key, const std::string& value) {
    static const std::set<std::string> strings{"quota_mode", "data_dir", "model_path", "host"};
    if (strings.count(key)) return value;
    if (key == "store_payloads") {
        if (value == "1" || value == "true") return true;
        if (value == "0" || value == "false") return false;
        throw ConfigError(env_name(key) + ": expected true/false");
    }
    try {
        return json::parse(value);
    } catch (const json::parse_error&) {
        throw ConfigError(env_name(key) + ": expected a number, got '" + value + "'");
    }
}

template <typename T>
T get(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key ") + key + " has the wrong type");
    }
}

}  // namespace

void ServiceConfig::validate() const {
    if (!(window_s >= signal::kMinWindowSeconds)) {
        throw ConfigError("window_s must be at least " + std::to_string(signal::kMinWindowSeconds));
    }
    if (!(period_s > 0.0)) throw ConfigError("period_s must be positive");
    if (!(coverage_d > 0.0)) throw ConfigError("D must be positive");
    if (port < 0 || port > 65535) throw ConfigError("port out of range");
    engine.validate();
}

json to_json(const ServiceConfig& c) {
    return {{"window_s", c.window_s},
            {"period_s", c.period_s},
            {"N_initial", c.engine.n_initial},
            {"K_regions", c.engine.k_regions},
            {"quota", c.engine.quota},
            {"D", c.coverage_d},
            {"p_floor", c.engine.p_floor},
            {"quota_mode", c.engine.quota_mode == query::QuotaMode::Zero ? "zero" : "floor"},
            {"seed", c.engine.seed},
            {"data_dir", c.data_dir},
            {"model_path", c.model_path},
            {"store_payloads", c.store_payloads},
            {"checkpoint_every", c.checkpoint_every},
            {"min_group_count", c.min_group_count},
            {"host", c.host},
            {"port", c.port}};
}

ServiceConfig config_from_json(const json& j, ServiceConfig c) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    const auto& keys = known_keys();
    for (const auto& [k, v] : j.items()) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
            throw ConfigError("unknown config key '" + k + "'");
        }
    }
    c.window_s = get(j, "window_s", c.window_s);
    c.period_s = get(j, "period_s", c.period_s);
    c.engine.n_initial = get(j, "N_initial", c.engine.n_initial);
    c.engine.k_regions = get(j, "K_regions", c.engine.k_regions);
    c.engine.quota = get(j, "quota", c.engine.quota);
    c.coverage_d = get(j, "D", c.coverage_d);
    c.engine.p_floor = get(j, "p_floor", c.engine.p_floor);
    const auto mode = get<std::string>(
        j, "quota_mode", c.engine.quota_mode == query::QuotaMode::Zero ? "zero" : "floor");
    if (mode != "zero" && mode != "floor") throw ConfigError("quota_mode must be zero or floor");
    c.engine.quota_mode = mode == "zero" ? query::QuotaMode::Zero : query::QuotaMode::Floor;
    c.engine.seed = get(j, "seed", c.engine.seed);
    c.data_dir = get(j, "data_dir", c.data_dir);
    c.model_path = get(j, "model_path", c.model_path);
    c.store_payloads = get(j, "store_payloads", c.store_payloads);
    c.checkpoint_every = get(j, "checkpoint_every", c.checkpoint_every);
    c.min_group_count = get(j, "min_group_count", c.min_group_count);
    c.host = get(j, "host", c.host);
    c.port = get(j, "port", c.port);
    c.validate();
    return c;
}

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (v == nullptr) return std::nullopt;
        return std::string(v);
    };
}

ServiceConfig load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
    json j = json::object();
    if (file) {
        std::ifstream in(*file);
        if (!in) throw ConfigError("cannot open config file " + file->string());
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config file " + file->string() + ": " + e.what());
        }
        if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    }
    for (const auto& key : known_keys()) {
        if (auto v = env(env_name(key))) j[key] = coerce(key, *v);
    }
    return config_from_json(j);
}

}  // namespace pulselabel
