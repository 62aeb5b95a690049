#pragma once

#include "pulselabel/service.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>

namespace pulselabel::replay {

struct ReplayOptions {
    // Wall-clock pacing: sleeps (gap between samples) / speed. 0 disables
    // pacing. Decisions never depend on it; the service clock is simulated.
    double speed = 0.0;
    bool sort = false;  // accept out-of-order lines by sorting on t_start_ms
    // Called after every ingest with the 1-based sample count (tests use it
    // to kill the process mid-run).
    std::function<void(std::size_t)> after_sample;
};

struct ReplayReport {
    std::size_t samples = 0;
    std::size_t duplicates = 0;      // already in the store (resumed run)
    std::size_t unusable = 0;        // no features
    std::size_t triggers = 0;        // decisions with trigger set
    std::size_t suppressed = 0;      // triggers dropped while a query was open
    std::size_t queries = 0;
    std::size_t scripted = 0;        // queries the script answers
    std::size_t labels = 0;          // accepted responses
    std::size_t stale = 0;
    double wall_s = 0.0;
};

nlohmann::json to_json(const ReplayReport& r);

// Feeds a dataset through `service`, setting `clock` to each sample's end
// time before ingesting it and to each scripted response's time before
// submitting it. Resuming into a store that already holds part of the
// stream is idempotent. Throws ValidationError naming the line on malformed
// or out-of-order input.
ReplayReport run(service::Service& service, service::ManualClock& clock,
                 const std::filesystem::path& dataset, const ReplayOptions& options = {});

}  // namespace pulselabel::replay
