#pragma once

#include "pulselabel/activity.hpp"
#include "pulselabel/quality.hpp"
#include "pulselabel/query_engine.hpp"
#include "pulselabel/signal.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace pulselabel::store {

struct ActivityPrediction {
    activity::ActivityLabel label = activity::ActivityLabel::Others;
    double confidence = 0.0;
};

// One ingested window with everything computed from it. Immutable once
// appended.
struct SampleRecord {
    std::uint64_t seq = 0;
    std::string sample_id;
    std::string subject_id;
    std::int64_t t_start_ms = 0;
    std::int64_t t_end_ms = 0;
    double fs = 0.0;
    std::size_t n_samples = 0;
    std::optional<signal::FeatureVector> features;  // absent when quality too low
    std::string failure;
    quality::QualityReport quality;
    ActivityPrediction activity;
    query::QueryDecision decision;
    bool suppressed = false;  // triggered while another query was open
    std::string ema_id;       // set when a query was dispatched
    std::int64_t processed_at_ms = 0;
    std::uint64_t payload_digest = 0;
    std::optional<nlohmann::json> payload;  // kept only with store_payloads
};

struct EmaQuery {
    std::uint64_t seq = 0;
    std::string ema_id;
    std::string subject_id;
    std::string sample_id;
    std::int64_t dispatched_at_ms = 0;
    std::int64_t expires_at_ms = 0;
};

enum class QueryStatus { Open, Answered, Expired };
std::string_view to_string(QueryStatus s);

struct EmaResponse {
    std::uint64_t seq = 0;
    std::string ema_id;
    std::string subject_id;
    std::int64_t responded_at_ms = 0;
    int stress = 0;
    Emotion emotion = Emotion::Neutral;
    Context activity = Context::Sit;
    double response_time_s = 0.0;
    std::optional<std::int64_t> client_elapsed_ms;  // UI time from first render; audit only
    std::string outcome;  // "accepted" or "stale"
};

nlohmann::json to_json(const SampleRecord& r);
SampleRecord sample_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EmaQuery& q);
EmaQuery query_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EmaResponse& r);
EmaResponse response_from_json(const nlohmann::json& j);

// Point-in-time copy of every collection, each in append order.
struct Snapshot {
    std::vector<SampleRecord> samples;
    std::vector<EmaQuery> queries;
    std::vector<EmaResponse> responses;

    std::vector<std::string> subjects() const;
};

// Append-only line-delimited JSON logs, one per collection, sharing one
// global sequence number. With an empty directory path everything stays in
// memory. A torn final line (crash mid-write) is discarded on open.
class Store {
public:
    Store() = default;
    explicit Store(std::filesystem::path dir);
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    // Each assigns the record's seq, appends and flushes.
    void append(SampleRecord& r);
    void append(EmaQuery& q);
    void append(EmaResponse& r);

    std::optional<SampleRecord> find_sample(const std::string& sample_id) const;
    std::optional<EmaQuery> find_query(const std::string& ema_id) const;
    std::optional<EmaResponse> find_response(const std::string& ema_id) const;

    Snapshot snapshot() const;
    std::uint64_t last_seq() const;
    const std::filesystem::path& dir() const { return dir_; }
    bool persistent() const { return !dir_.empty(); }

    // Engine checkpoints, written atomically (temp file + rename).
    void write_checkpoint(const std::string& subject_id, const nlohmann::json& j);
    std::map<std::string, nlohmann::json> read_checkpoints() const;

    // Lines dropped while loading because they were torn or unparsable.
    std::size_t repaired_lines() const { return repaired_; }

private:
    void load();
    void write_line(std::ofstream& out, const nlohmann::json& j);

    std::filesystem::path dir_;
    mutable std::mutex mu_;
    std::uint64_t seq_ = 0;
    std::vector<SampleRecord> samples_;
    std::vector<EmaQuery> queries_;
    std::vector<EmaResponse> responses_;
    std::map<std::string, std::size_t> sample_index_;
    std::map<std::string, std::size_t> query_index_;
    std::map<std::string, std::size_t> response_index_;
    std::ofstream samples_out_, queries_out_, responses_out_;
    std::size_t repaired_ = 0;
};

}  // namespace pulselabel::store
