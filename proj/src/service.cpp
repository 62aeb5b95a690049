#include "pulselabel/service.hpp"

#include "pulselabel/errors.hpp"
#include "pulselabel/hashing.hpp"
#include "pulselabel/json_io.hpp"
#include "pulselabel/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace pulselabel::service {

using nlohmann::json;

namespace {

constexpr char kCrockford[] = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";

void append_base32(std::string& out, unsigned __int128 value, int chars) {
    for (int i = chars - 1; i >= 0; --i) {
        out.push_back(kCrockford[static_cast<unsigned>((value >> (5 * i)) & 31U)]);
    }
}

void check_lengths(const SamplePayload& p, double default_duration_s) {
    if (p.subject_id.empty()) throw ValidationError("subject_id", "expected a non-empty string");
    if (!(p.fs > 0.0) || !std::isfinite(p.fs)) throw ValidationError("fs", "must be positive");
    const double duration = p.duration_s.value_or(default_duration_s);
    const auto expected = static_cast<std::size_t>(std::llround(duration * p.fs));
    if (p.ppg.size() != expected) {
        throw ValidationError("ppg", "length " + std::to_string(p.ppg.size()) +
                                         " does not match fs x duration = " +
                                         std::to_string(expected));
    }
    if (p.acc.size() != p.ppg.size()) throw ValidationError("acc", "length differs from ppg");
    if (p.gyro.size() != p.ppg.size()) throw ValidationError("gyro", "length differs from ppg");
    if (p.grav.size() != p.ppg.size()) throw ValidationError("grav", "length differs from ppg");
}

}  // namespace

std::int64_t SystemClock::now_ms() const {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string make_sample_id(const std::string& subject_id, std::int64_t t_start_ms) {
    const auto ts = static_cast<std::uint64_t>(std::max<std::int64_t>(0, t_start_ms)) &
                    0xFFFFFFFFFFFFULL;
    const std::uint64_t h1 = fnv1a64(subject_id + '\x1f' + std::to_string(t_start_ms));
    const std::uint64_t h2 = splitmix64(h1);
    const unsigned __int128 tail =
        (static_cast<unsigned __int128>(h1) << 16) | static_cast<unsigned __int128>(h2 & 0xFFFF);
    std::string id;
    id.reserve(26);
    append_base32(id, ts, 10);
    append_base32(id, tail, 16);
    return id;
}

std::string make_ema_id(const std::string& sample_id) { return "Q" + sample_id; }

ResponseInput response_input_from_json(const json& j, const std::string& ema_id) {
    if (!j.is_object()) throw ValidationError("(body)", "expected a JSON object");
    ResponseInput in;
    in.ema_id = ema_id;
    auto need = [&](const char* f) -> const json& {
        auto it = j.find(f);
        if (it == j.end()) throw ValidationError(f, "missing");
        return *it;
    };
    const json& s = need("stress");
    if (!s.is_number_integer()) throw ValidationError("stress", "expected an integer 0-4");
    const auto stress = s.get<std::int64_t>();
    if (stress < 0 || stress > 4) throw ValidationError("stress", "out of range 0-4");
    in.stress = static_cast<int>(stress);
    const json& e = need("emotion");
    const auto emotion = e.is_string() ? emotion_from_string(e.get<std::string>()) : std::nullopt;
    if (!emotion) throw ValidationError("emotion", "expected one of sad, mad, neutral, happy");
    in.emotion = *emotion;
    const json& a = need("activity");
    const auto act = a.is_string() ? context_from_string(a.get<std::string>()) : std::nullopt;
    if (!act) {
        throw ValidationError("activity",
                              "expected one of sitting, standing, walking, jogging, lying_down, "
                              "other");
    }
    in.activity = *act;
    if (auto it = j.find("responded_at_ms"); it != j.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw ValidationError("responded_at_ms", "expected an integer");
        in.responded_at_ms = it->get<std::int64_t>();
    }
    if (auto it = j.find("client_elapsed_ms"); it != j.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw ValidationError("client_elapsed_ms", "expected an integer");
        in.client_elapsed_ms = it->get<std::int64_t>();
    }
    return in;
}

activity::ActivityModel train_default_model(std::uint64_t seed) {
    sim::DatasetOptions o;
    o.subjects = 4;
    o.days = 1.0;
    o.seed = seed;
    const auto cohort = sim::make_cohort(o);
    return activity::train_activity_model(activity::simulated_corpus(cohort, 10), {}, seed);
}

std::shared_ptr<const activity::ActivityModel> load_or_train_model(const ServiceConfig& config) {
    if (!config.model_path.empty()) {
        return std::make_shared<const activity::ActivityModel>(
            activity::load_model(config.model_path));
    }
    return std::make_shared<const activity::ActivityModel>(train_default_model(config.engine.seed));
}

Service::Service(ServiceConfig config, std::shared_ptr<const activity::ActivityModel> model,
                 std::shared_ptr<Clock> clock)
    : config_(std::move(config)),
      model_(std::move(model)),
      clock_(std::move(clock)),
      store_(config_.data_dir) {
    config_.validate();
    if (!clock_) throw ConfigError("service needs a clock");
    restore();
}

Service::~Service() {
    try {
        checkpoint_all();
    } catch (...) {
        // Best effort; the logs alone are enough to rebuild.
    }
}

Service::Subject& Service::subject(const std::string& subject_id) {
    std::lock_guard lock(subjects_mu_);
    auto it = subjects_.find(subject_id);
    if (it == subjects_.end()) {
        it = subjects_
                 .emplace(subject_id, std::make_unique<Subject>(
                                          query::QueryEngine(subject_id, config_.engine)))
                 .first;
    }
    return *it->second;
}

const Service::Subject* Service::find_subject(const std::string& subject_id) const {
    std::lock_guard lock(subjects_mu_);
    auto it = subjects_.find(subject_id);
    return it == subjects_.end() ? nullptr : it->second.get();
}

bool Service::is_open(const store::EmaQuery& q, std::int64_t now) const {
    return now <= q.expires_at_ms && !store_.find_response(q.ema_id);
}

IngestResult Service::ingest_json(const json& body) {
    return ingest(io::payload_from_json(body, config_.window_s));
}

IngestResult Service::ingest(SamplePayload p) {
    check_lengths(p, config_.window_s);
    if (p.sample_id.empty()) p.sample_id = make_sample_id(p.subject_id, p.t_start_ms);

    auto existing = [&]() -> std::optional<IngestResult> {
        auto rec = store_.find_sample(p.sample_id);
        if (!rec) return std::nullopt;
        IngestResult r{*rec, std::nullopt, true};
        if (!rec->ema_id.empty()) r.query = store_.find_query(rec->ema_id);
        return r;
    };
    if (auto r = existing()) return *r;

    signal::PpgWindow window{p.subject_id, p.t_start_ms, p.fs, p.ppg};
    signal::validate_window(window);
    const auto motion = activity::MotionWindow::from_payload(p);
    activity::validate_motion(motion);

    store::SampleRecord rec;
    rec.sample_id = p.sample_id;
    rec.subject_id = p.subject_id;
    rec.t_start_ms = p.t_start_ms;
    rec.t_end_ms = p.t_end_ms();
    rec.fs = p.fs;
    rec.n_samples = p.ppg.size();

    const auto analysis = signal::analyze_window(window);
    rec.features = analysis.features;
    rec.failure = analysis.failure;
    rec.quality = quality::assess(window, analysis.filtered,
                                  analysis.peaks ? &*analysis.peaks : nullptr);
    if (model_) {
        const auto d = activity::predict_dominant(*model_, motion);
        rec.activity = {d.label, d.confidence};
    }
    const json payload_json = io::to_json(p);
    rec.payload_digest = fnv1a64(payload_json.dump());
    if (config_.store_payloads) rec.payload = payload_json;

    Subject& s = subject(p.subject_id);
    std::lock_guard lock(s.mu);
    if (auto r = existing()) return *r;

    const std::int64_t now = clock_->now_ms();
    rec.processed_at_ms = now;
    rec.decision = rec.features
                       ? s.engine.observe(rec.sample_id, rec.t_start_ms, rec.t_end_ms, *rec.features)
                       : s.engine.observe_unusable(rec.sample_id);

    std::optional<store::EmaQuery> query;
    if (rec.decision.trigger) {
        if (s.last_query && is_open(*s.last_query, now)) {
            rec.suppressed = true;
        } else {
            store::EmaQuery q;
            q.ema_id = make_ema_id(rec.sample_id);
            q.subject_id = rec.subject_id;
            q.sample_id = rec.sample_id;
            q.dispatched_at_ms = now;
            q.expires_at_ms = now + query::kLabelWindowMs;
            rec.ema_id = q.ema_id;
            query = q;
        }
    }
    store_.append(rec);
    if (query) {
        store_.append(*query);
        s.last_query = query;
    }
    if (++s.since_checkpoint >= config_.checkpoint_every) write_checkpoint(s);
    return IngestResult{std::move(rec), std::move(query), false};
}

std::vector<store::EmaQuery> Service::pending_queries(const std::string& subject_id) const {
    const Subject* s = find_subject(subject_id);
    if (s == nullptr) return {};
    std::lock_guard lock(s->mu);
    if (s->last_query && is_open(*s->last_query, clock_->now_ms())) return {*s->last_query};
    return {};
}

store::QueryStatus Service::query_status(const std::string& ema_id) const {
    const auto q = store_.find_query(ema_id);
    if (!q) throw NotFound("unknown ema_id " + ema_id);
    if (store_.find_response(ema_id)) return store::QueryStatus::Answered;
    return clock_->now_ms() > q->expires_at_ms ? store::QueryStatus::Expired
                                               : store::QueryStatus::Open;
}

ResponseAck Service::submit_response(const ResponseInput& in) {
    if (in.stress < 0 || in.stress > 4) throw ValidationError("stress", "out of range 0-4");
    const auto q = store_.find_query(in.ema_id);
    if (!q) throw NotFound("unknown ema_id " + in.ema_id);

    Subject& s = subject(q->subject_id);
    std::lock_guard lock(s.mu);
    if (auto prior = store_.find_response(in.ema_id)) return {"duplicate", *prior};

    store::EmaResponse r;
    r.ema_id = in.ema_id;
    r.subject_id = q->subject_id;
    r.responded_at_ms = in.responded_at_ms.value_or(clock_->now_ms());
    if (r.responded_at_ms < q->dispatched_at_ms) {
        throw ValidationError("responded_at_ms", "earlier than the query's dispatch");
    }
    r.stress = in.stress;
    r.emotion = in.emotion;
    r.activity = in.activity;
    r.response_time_s = static_cast<double>(r.responded_at_ms - q->dispatched_at_ms) / 1000.0;
    r.client_elapsed_ms = in.client_elapsed_ms;

    if (r.responded_at_ms > q->expires_at_ms) {
        r.outcome = "stale";
    } else {
        query::LabelRecord label{in.ema_id,    q->sample_id, r.responded_at_ms,
                                 in.stress,    in.emotion,   in.activity};
        const auto outcome = s.engine.register_label(label);
        r.outcome = outcome == query::LabelOutcome::Accepted ? "accepted" : "stale";
    }
    store_.append(r);
    return {r.outcome, r};
}

std::optional<query::QueryEngine> Service::engine_snapshot(const std::string& subject_id) const {
    const Subject* s = find_subject(subject_id);
    if (s == nullptr) return std::nullopt;
    std::lock_guard lock(s->mu);
    return s->engine;
}

std::vector<std::string> Service::subjects() const {
    std::lock_guard lock(subjects_mu_);
    std::vector<std::string> out;
    for (const auto& [id, _] : subjects_) out.push_back(id);
    return out;
}

void Service::write_checkpoint(Subject& s) {
    // Caller holds s.mu, so every event of this subject up to last_seq() is
    // reflected in the engine.
    store_.write_checkpoint(s.engine.subject_id(),
                            json{{"last_seq", store_.last_seq()}, {"engine", s.engine.checkpoint()}});
    s.since_checkpoint = 0;
}

void Service::checkpoint_all() {
    if (!store_.persistent()) return;
    std::vector<Subject*> all;
    {
        std::lock_guard lock(subjects_mu_);
        for (auto& [_, s] : subjects_) all.push_back(s.get());
    }
    for (Subject* s : all) {
        std::lock_guard lock(s->mu);
        write_checkpoint(*s);
    }
}

json Service::health() const {
    const auto snap = store_.snapshot();
    return {{"status", "ok"},
            {"subjects", snap.subjects().size()},
            {"samples", snap.samples.size()},
            {"queries", snap.queries.size()},
            {"responses", snap.responses.size()},
            {"persistent", store_.persistent()},
            {"model_digest", model_ ? model_->digest() : 0},
            {"now_ms", clock_->now_ms()}};
}

void Service::restore() {
    if (!store_.persistent()) return;
    const auto snap = store_.snapshot();
    std::map<std::string, std::uint64_t> covered;
    for (const auto& [id, cp] : store_.read_checkpoints()) {
        try {
            auto engine = query::QueryEngine::restore(cp.at("engine"));
            covered[id] = cp.at("last_seq").get<std::uint64_t>();
            subjects_.emplace(id, std::make_unique<Subject>(std::move(engine)));
            ++restore_report_.subjects_from_checkpoint;
        } catch (const std::exception&) {
            // Unreadable checkpoint: fall back to a full replay for this subject.
            covered.erase(id);
        }
    }

    // Replay, in sequence order, the events each engine has not yet seen.
    struct Event {
        std::uint64_t seq;
        const store::SampleRecord* sample;
        const store::EmaResponse* response;
    };
    std::vector<Event> events;
    for (const auto& r : snap.samples) events.push_back({r.seq, &r, nullptr});
    for (const auto& r : snap.responses) events.push_back({r.seq, nullptr, &r});
    std::sort(events.begin(), events.end(),
              [](const Event& a, const Event& b) { return a.seq < b.seq; });
    std::map<std::string, const store::EmaQuery*> query_by_id;
    for (const auto& q : snap.queries) query_by_id[q.ema_id] = &q;

    for (const auto& ev : events) {
        const std::string& sid = ev.sample ? ev.sample->subject_id : ev.response->subject_id;
        auto cov = covered.find(sid);
        if (cov != covered.end() && ev.seq <= cov->second) continue;
        Subject& s = subject(sid);
        if (ev.sample) {
            const auto& r = *ev.sample;
            if (!r.features || s.engine.has_sample(r.sample_id)) continue;
            const auto d = s.engine.observe(r.sample_id, r.t_start_ms, r.t_end_ms, *r.features);
            ++restore_report_.samples_replayed;
            if (d.trigger != r.decision.trigger || d.region != r.decision.region ||
                d.reason != r.decision.reason) {
                ++restore_report_.decision_mismatches;
            }
        } else if (ev.response->outcome == "accepted") {
            auto q = query_by_id.find(ev.response->ema_id);
            if (q == query_by_id.end()) continue;
            query::LabelRecord label{ev.response->ema_id,     q->second->sample_id,
                                     ev.response->responded_at_ms, ev.response->stress,
                                     ev.response->emotion,    ev.response->activity};
            if (s.engine.register_label(label) == query::LabelOutcome::Accepted) {
                ++restore_report_.labels_replayed;
            }
        }
    }

    // A crash between the sample and query appends leaves a dispatched
    // decision without its query line; re-create it from the sample record.
    for (const auto& r : snap.samples) {
        if (r.ema_id.empty() || query_by_id.count(r.ema_id)) continue;
        store::EmaQuery q;
        q.ema_id = r.ema_id;
        q.subject_id = r.subject_id;
        q.sample_id = r.sample_id;
        q.dispatched_at_ms = r.processed_at_ms;
        q.expires_at_ms = r.processed_at_ms + query::kLabelWindowMs;
        store_.append(q);
        ++restore_report_.queries_recovered;
    }
    for (const auto& q : store_.snapshot().queries) {
        Subject& s = subject(q.subject_id);
        if (!s.last_query || s.last_query->dispatched_at_ms <= q.dispatched_at_ms) s.last_query = q;
    }
}

}  // namespace pulselabel::service
