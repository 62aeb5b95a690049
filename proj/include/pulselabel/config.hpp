#pragma once

#include "pulselabel/query_engine.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace pulselabel {

struct ServiceConfig {
    double window_s = 120.0;
    double period_s = 900.0;
    query::EngineConfig engine;
    double coverage_d = 1.5;
    std::string data_dir;    // empty: in-memory store
    std::string model_path;  // empty: train the default simulator model
    bool store_payloads = false;
    std::size_t checkpoint_every = 50;  // samples per subject between checkpoints
    std::size_t min_group_count = 20;   // activity groups below this are left out of reports
    std::string host = "127.0.0.1";
    int port = 8080;

    // Throws ConfigError.
    void validate() const;
};

// File keys (all optional): window_s, period_s, N_initial, K_regions, quota,
// D, p_floor, quota_mode ("zero" | "floor"), seed, data_dir, model_path,
// store_payloads, checkpoint_every, min_group_count, host, port.
nlohmann::json to_json(const ServiceConfig& c);
ServiceConfig config_from_json(const nlohmann::json& j, ServiceConfig base = {});

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

// Defaults, then the file (if any), then PULSELABEL_<KEY> variables, e.g.
// PULSELABEL_K_REGIONS=8 or PULSELABEL_SEED=7. Throws ConfigError.
ServiceConfig load_config(const std::optional<std::filesystem::path>& file,
                          const EnvLookup& env = process_env());

}  // namespace pulselabel
