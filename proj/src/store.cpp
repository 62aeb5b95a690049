#include "pulselabel/store.hpp"

#include "pulselabel/errors.hpp"
#include "pulselabel/json_io.hpp"

#include <cctype>
#include <cstdio>
#include <set>
#include <sstream>

namespace pulselabel::store {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSamplesFile = "samples.jsonl";
constexpr const char* kQueriesFile = "queries.jsonl";
constexpr const char* kResponsesFile = "responses.jsonl";
constexpr const char* kCheckpointDir = "checkpoints";

std::string file_safe(const std::string& id) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : id) {
        if (std::isalnum(c) || c == '-' || c == '_') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 15]);
        }
    }
    return out;
}

// Cuts a trailing partial line so later appends start on a fresh line.
// Returns true if anything was removed.
bool trim_torn_tail(const fs::path& p) {
    if (!fs::exists(p)) return false;
    const auto size = fs::file_size(p);
    if (size == 0) return false;
    std::ifstream in(p, std::ios::binary);
    std::string data(size, '\0');
    in.read(data.data(), static_cast<std::streamsize>(size));
    if (data.back() == '\n') return false;
    const auto nl = data.find_last_of('\n');
    in.close();
    fs::resize_file(p, nl == std::string::npos ? 0 : nl + 1);
    return true;
}

template <typename F>
void read_lines(const fs::path& p, std::size_t& repaired, F&& on_json) {
    std::ifstream in(p);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            on_json(json::parse(line));
        } catch (const std::exception&) {
            ++repaired;
        }
    }
}

json activity_json(const ActivityPrediction& a) {
    return {{"label", activity::to_string(a.label)}, {"confidence", a.confidence}};
}

}  // namespace

std::string_view to_string(QueryStatus s) {
    switch (s) {
        case QueryStatus::Open: return "open";
        case QueryStatus::Answered: return "answered";
        case QueryStatus::Expired: return "expired";
    }
    return "open";
}

json to_json(const SampleRecord& r) {
    json j{{"seq", r.seq},
           {"sample_id", r.sample_id},
           {"subject_id", r.subject_id},
           {"t_start_ms", r.t_start_ms},
           {"t_end_ms", r.t_end_ms},
           {"fs", r.fs},
           {"n_samples", r.n_samples},
           {"features", r.features ? io::to_json(*r.features) : json(nullptr)},
           {"failure", r.failure},
           {"quality", io::to_json(r.quality)},
           {"activity", activity_json(r.activity)},
           {"decision", query::to_json(r.decision)},
           {"suppressed", r.suppressed},
           {"ema_id", r.ema_id},
           {"processed_at_ms", r.processed_at_ms},
           {"payload_digest", r.payload_digest}};
    if (r.payload) j["payload"] = *r.payload;
    return j;
}

SampleRecord sample_record_from_json(const json& j) {
    SampleRecord r;
    r.seq = j.at("seq").get<std::uint64_t>();
    r.sample_id = j.at("sample_id").get<std::string>();
    r.subject_id = j.at("subject_id").get<std::string>();
    r.t_start_ms = j.at("t_start_ms").get<std::int64_t>();
    r.t_end_ms = j.at("t_end_ms").get<std::int64_t>();
    r.fs = j.at("fs").get<double>();
    r.n_samples = j.at("n_samples").get<std::size_t>();
    if (!j.at("features").is_null()) r.features = io::features_from_json(j["features"]);
    r.failure = j.value("failure", "");
    r.quality = io::quality_from_json(j.at("quality"));
    r.activity.label = activity::label_from_string(j.at("activity").at("label").get<std::string>());
    r.activity.confidence = j["activity"].at("confidence").get<double>();
    r.decision = query::decision_from_json(j.at("decision"));
    r.suppressed = j.value("suppressed", false);
    r.ema_id = j.value("ema_id", "");
    r.processed_at_ms = j.value("processed_at_ms", std::int64_t{0});
    r.payload_digest = j.value("payload_digest", std::uint64_t{0});
    if (j.contains("payload")) r.payload = j["payload"];
    return r;
}

json to_json(const EmaQuery& q) {
    return {{"seq", q.seq},
            {"ema_id", q.ema_id},
            {"subject_id", q.subject_id},
            {"sample_id", q.sample_id},
            {"dispatched_at_ms", q.dispatched_at_ms},
            {"expires_at_ms", q.expires_at_ms}};
}

EmaQuery query_from_json(const json& j) {
    EmaQuery q;
    q.seq = j.at("seq").get<std::uint64_t>();
    q.ema_id = j.at("ema_id").get<std::string>();
    q.subject_id = j.at("subject_id").get<std::string>();
    q.sample_id = j.at("sample_id").get<std::string>();
    q.dispatched_at_ms = j.at("dispatched_at_ms").get<std::int64_t>();
    q.expires_at_ms = j.at("expires_at_ms").get<std::int64_t>();
    return q;
}

json to_json(const EmaResponse& r) {
    json j{{"seq", r.seq},
            {"ema_id", r.ema_id},
            {"subject_id", r.subject_id},
            {"responded_at_ms", r.responded_at_ms},
            {"stress", r.stress},
            {"emotion", to_string(r.emotion)},
            {"activity", to_string(r.activity)},
            {"response_time_s", r.response_time_s},
            {"outcome", r.outcome}};
    if (r.client_elapsed_ms) j["client_elapsed_ms"] = *r.client_elapsed_ms;
    return j;
}

EmaResponse response_from_json(const json& j) {
    EmaResponse r;
    r.seq = j.at("seq").get<std::uint64_t>();
    r.ema_id = j.at("ema_id").get<std::string>();
    r.subject_id = j.at("subject_id").get<std::string>();
    r.responded_at_ms = j.at("responded_at_ms").get<std::int64_t>();
    r.stress = j.at("stress").get<int>();
    const auto e = emotion_from_string(j.at("emotion").get<std::string>());
    const auto a = context_from_string(j.at("activity").get<std::string>());
    if (!e || !a) throw ValidationError("response", "unknown emotion or activity");
    r.emotion = *e;
    r.activity = *a;
    r.response_time_s = j.at("response_time_s").get<double>();
    r.outcome = j.at("outcome").get<std::string>();
    if (j.contains("client_elapsed_ms")) r.client_elapsed_ms = j["client_elapsed_ms"].get<std::int64_t>();
    return r;
}

std::vector<std::string> Snapshot::subjects() const {
    std::set<std::string> s;
    for (const auto& r : samples) s.insert(r.subject_id);
    return {s.begin(), s.end()};
}

Store::Store(fs::path dir) : dir_(std::move(dir)) {
    if (dir_.empty()) return;
    fs::create_directories(dir_);
    fs::create_directories(dir_ / kCheckpointDir);
    load();
    samples_out_.open(dir_ / kSamplesFile, std::ios::app);
    queries_out_.open(dir_ / kQueriesFile, std::ios::app);
    responses_out_.open(dir_ / kResponsesFile, std::ios::app);
    if (!samples_out_ || !queries_out_ || !responses_out_) {
        throw std::runtime_error("cannot open store logs in " + dir_.string());
    }
}

void Store::load() {
    for (const char* f : {kSamplesFile, kQueriesFile, kResponsesFile}) {
        if (trim_torn_tail(dir_ / f)) ++repaired_;
    }
    read_lines(dir_ / kSamplesFile, repaired_, [&](const json& j) {
        auto r = sample_record_from_json(j);
        if (sample_index_.count(r.sample_id)) return;
        seq_ = std::max(seq_, r.seq);
        sample_index_[r.sample_id] = samples_.size();
        samples_.push_back(std::move(r));
    });
    read_lines(dir_ / kQueriesFile, repaired_, [&](const json& j) {
        auto q = query_from_json(j);
        if (query_index_.count(q.ema_id)) return;
        seq_ = std::max(seq_, q.seq);
        query_index_[q.ema_id] = queries_.size();
        queries_.push_back(std::move(q));
    });
    read_lines(dir_ / kResponsesFile, repaired_, [&](const json& j) {
        auto r = response_from_json(j);
        if (response_index_.count(r.ema_id)) return;
        seq_ = std::max(seq_, r.seq);
        response_index_[r.ema_id] = responses_.size();
        responses_.push_back(std::move(r));
    });
}

void Store::write_line(std::ofstream& out, const json& j) {
    if (!persistent()) return;
    out << j.dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("store write failed in " + dir_.string());
}

void Store::append(SampleRecord& r) {
    std::lock_guard lock(mu_);
    if (sample_index_.count(r.sample_id)) {
        throw std::logic_error("sample " + r.sample_id + " already stored");
    }
    r.seq = ++seq_;
    write_line(samples_out_, to_json(r));
    sample_index_[r.sample_id] = samples_.size();
    samples_.push_back(r);
}

void Store::append(EmaQuery& q) {
    std::lock_guard lock(mu_);
    if (query_index_.count(q.ema_id)) throw std::logic_error("query " + q.ema_id + " exists");
    q.seq = ++seq_;
    write_line(queries_out_, to_json(q));
    query_index_[q.ema_id] = queries_.size();
    queries_.push_back(q);
}

void Store::append(EmaResponse& r) {
    std::lock_guard lock(mu_);
    if (response_index_.count(r.ema_id)) {
        throw std::logic_error("response for " + r.ema_id + " exists");
    }
    r.seq = ++seq_;
    write_line(responses_out_, to_json(r));
    response_index_[r.ema_id] = responses_.size();
    responses_.push_back(r);
}

std::optional<SampleRecord> Store::find_sample(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sample_index_.find(id);
    if (it == sample_index_.end()) return std::nullopt;
    return samples_[it->second];
}

std::optional<EmaQuery> Store::find_query(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = query_index_.find(id);
    if (it == query_index_.end()) return std::nullopt;
    return queries_[it->second];
}

std::optional<EmaResponse> Store::find_response(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = response_index_.find(id);
    if (it == response_index_.end()) return std::nullopt;
    return responses_[it->second];
}

Snapshot Store::snapshot() const {
    std::lock_guard lock(mu_);
    return Snapshot{samples_, queries_, responses_};
}

std::uint64_t Store::last_seq() const {
    std::lock_guard lock(mu_);
    return seq_;
}

void Store::write_checkpoint(const std::string& subject_id, const json& j) {
    if (!persistent()) return;
    const auto final_path = dir_ / kCheckpointDir / (file_safe(subject_id) + ".json");
    const auto tmp = fs::path(final_path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << j.dump() << '\n';
        out.flush();
        if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    }
    fs::rename(tmp, final_path);
}

std::map<std::string, json> Store::read_checkpoints() const {
    std::map<std::string, json> out;
    if (!persistent()) return out;
    const auto cdir = dir_ / kCheckpointDir;
    if (!fs::exists(cdir)) return out;
    for (const auto& e : fs::directory_iterator(cdir)) {
        if (e.path().extension() != ".json") continue;
        std::ifstream in(e.path());
        try {
            json j = json::parse(in);
            auto id = j.at("engine").at("subject_id").get<std::string>();
            out.emplace(std::move(id), std::move(j));
        } catch (const std::exception&) {
            // A damaged checkpoint is ignored; the log replay rebuilds state.
        }
    }
    return out;
}

}  // namespace pulselabel::store
