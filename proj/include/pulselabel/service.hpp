#pragma once

#include "pulselabel/activity.hpp"
#include "pulselabel/config.hpp"
#include "pulselabel/query_engine.hpp"
#include "pulselabel/store.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace pulselabel::service {

class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_ms() const = 0;
};

class SystemClock : public Clock {
public:
    std::int64_t now_ms() const override;
};

// Settable clock for replay and tests.
class ManualClock : public Clock {
public:
    explicit ManualClock(std::int64_t t = 0) : t_(t) {}
    std::int64_t now_ms() const override { return t_.load(); }
    void set(std::int64_t t) { t_.store(t); }
    void advance(std::int64_t dt) { t_.fetch_add(dt); }

private:
    std::atomic<std::int64_t> t_;
};

// 26-character Crockford base32 id: 48-bit millisecond timestamp, then 80
// bits derived from (subject_id, t_start_ms). Sorts by time and is stable, so
// re-sending a window maps to the same id.
std::string make_sample_id(const std::string& subject_id, std::int64_t t_start_ms);
std::string make_ema_id(const std::string& sample_id);

struct IngestResult {
    store::SampleRecord record;
    std::optional<store::EmaQuery> query;
    bool duplicate = false;
};

struct ResponseInput {
    std::string ema_id;
    std::optional<std::int64_t> responded_at_ms;  // server clock when absent
    int stress = 0;
    Emotion emotion = Emotion::Neutral;
    Context activity = Context::Sit;
    std::optional<std::int64_t> client_elapsed_ms;
};

// Parses a response body. Throws ValidationError naming the field.
ResponseInput response_input_from_json(const nlohmann::json& j, const std::string& ema_id);

struct ResponseAck {
    std::string status;  // accepted | stale | duplicate
    store::EmaResponse response;
};

struct RestoreReport {
    std::size_t subjects_from_checkpoint = 0;
    std::size_t samples_replayed = 0;
    std::size_t labels_replayed = 0;
    std::size_t decision_mismatches = 0;
    std::size_t queries_recovered = 0;
};

// Simulator-trained activity model used when no model file is configured.
activity::ActivityModel train_default_model(std::uint64_t seed);

// Loads config.model_path, or trains the default model.
std::shared_ptr<const activity::ActivityModel> load_or_train_model(const ServiceConfig& config);

// The ingestion tier: runs the pipeline on each window, decides and
// dispatches EMA queries, accepts responses and persists everything.
// Thread-safe; work for one subject is serialized.
class Service {
public:
    Service(ServiceConfig config, std::shared_ptr<const activity::ActivityModel> model,
            std::shared_ptr<Clock> clock = std::make_shared<SystemClock>());
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Throws ValidationError for malformed payloads. A repeated sample_id
    // returns the stored record with duplicate = true.
    IngestResult ingest(SamplePayload payload);
    IngestResult ingest_json(const nlohmann::json& body);

    std::vector<store::EmaQuery> pending_queries(const std::string& subject_id) const;
    store::QueryStatus query_status(const std::string& ema_id) const;

    // Throws NotFound for an unknown ema_id and ValidationError for bad
    // fields.
    ResponseAck submit_response(const ResponseInput& input);

    store::Snapshot snapshot() const { return store_.snapshot(); }
    std::optional<query::QueryEngine> engine_snapshot(const std::string& subject_id) const;
    std::vector<std::string> subjects() const;

    void checkpoint_all();
    nlohmann::json health() const;

    const ServiceConfig& config() const { return config_; }
    const RestoreReport& restore_report() const { return restore_report_; }
    std::int64_t now_ms() const { return clock_->now_ms(); }

private:
    struct Subject {
        explicit Subject(query::QueryEngine e) : engine(std::move(e)) {}
        mutable std::mutex mu;
        query::QueryEngine engine;
        std::optional<store::EmaQuery> last_query;
        std::size_t since_checkpoint = 0;
    };

    Subject& subject(const std::string& subject_id);
    const Subject* find_subject(const std::string& subject_id) const;
    void write_checkpoint(Subject& s);
    void restore();
    bool is_open(const store::EmaQuery& q, std::int64_t now) const;

    ServiceConfig config_;
    std::shared_ptr<const activity::ActivityModel> model_;
    std::shared_ptr<Clock> clock_;
    store::Store store_;
    mutable std::mutex subjects_mu_;
    std::map<std::string, std::unique_ptr<Subject>> subjects_;
    RestoreReport restore_report_;
};

}  // namespace pulselabel::service
