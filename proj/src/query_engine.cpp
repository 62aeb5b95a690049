#include "pulselabel/query_engine.hpp"

#include "pulselabel/errors.hpp"
#include "pulselabel/hashing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pulselabel::query {

namespace {

constexpr int kCheckpointVersion = 1;

std::vector<double> min_sq_distances(const std::vector<Point>& x) {
    return std::vector<double>(x.size(), std::numeric_limits<double>::infinity());
}

double far_fraction(const std::vector<double>& min_d2, double d) {
    const double d2 = d * d;
    std::size_t far = 0;
    for (double v : min_d2) far += v > d2 ? 1 : 0;
    return static_cast<double>(far) / static_cast<double>(min_d2.size());
}

}  // namespace

void EngineConfig::validate() const {
    if (k_regions < 1) throw ConfigError("K_regions must be at least 1");
    if (n_initial < k_regions) throw ConfigError("N_initial must be at least K_regions");
    if (!(p_floor >= 0.0 && p_floor <= 1.0)) throw ConfigError("p_floor must lie in [0, 1]");
    if (kmeans_iterations < 1) throw ConfigError("k-means iterations must be at least 1");
}

std::string_view to_string(DecisionReason r) {
    switch (r) {
        case DecisionReason::InitialPhase: return "InitialPhase";
        case DecisionReason::QuotaReached: return "QuotaReached";
        case DecisionReason::Drawn: return "Drawn";
        case DecisionReason::NotDrawn: return "NotDrawn";
        case DecisionReason::QualityTooLow: return "QualityTooLow";
    }
    return "NotDrawn";
}

std::optional<DecisionReason> reason_from_string(std::string_view s) {
    for (auto r : {DecisionReason::InitialPhase, DecisionReason::QuotaReached,
                   DecisionReason::Drawn, DecisionReason::NotDrawn,
                   DecisionReason::QualityTooLow}) {
        if (to_string(r) == s) return r;
    }
    return std::nullopt;
}

std::string_view to_string(LabelOutcome o) {
    switch (o) {
        case LabelOutcome::Accepted: return "accepted";
        case LabelOutcome::Duplicate: return "duplicate";
        case LabelOutcome::Stale: return "stale";
        case LabelOutcome::UnknownSample: return "unknown_sample";
    }
    return "unknown_sample";
}

std::int64_t label_gap_ms(std::int64_t t_start_ms, std::int64_t t_end_ms,
                          std::int64_t responded_at_ms) {
    if (responded_at_ms > t_end_ms) return responded_at_ms - t_end_ms;
    if (responded_at_ms < t_start_ms) return t_start_ms - responded_at_ms;
    return 0;
}

double coverage(const std::vector<Point>& x, const std::vector<Point>& u, double d) {
    if (x.empty()) throw std::invalid_argument("coverage over an empty sample set");
    if (u.empty()) return 1.0;
    auto min_d2 = min_sq_distances(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (const auto& p : u) min_d2[i] = std::min(min_d2[i], squared_distance(x[i], p));
    }
    return far_fraction(min_d2, d);
}

std::vector<double> coverage_curve(const std::vector<Point>& x,
                                   const std::vector<std::size_t>& u_order, double d) {
    if (x.empty()) throw std::invalid_argument("coverage over an empty sample set");
    auto min_d2 = min_sq_distances(x);
    std::vector<double> curve;
    curve.reserve(u_order.size());
    for (auto idx : u_order) {
        const auto& p = x.at(idx);
        for (std::size_t i = 0; i < x.size(); ++i) {
            min_d2[i] = std::min(min_d2[i], squared_distance(x[i], p));
        }
        curve.push_back(far_fraction(min_d2, d));
    }
    return curve;
}

QueryEngine::QueryEngine(std::string subject_id, EngineConfig config)
    : subject_id_(std::move(subject_id)), config_(config) {
    config_.validate();
}

bool QueryEngine::has_sample(const std::string& sample_id) const {
    return index_.count(sample_id) > 0;
}

double QueryEngine::region_probability(std::size_t region) const {
    if (region >= counts_.size()) throw std::out_of_range("no such region");
    if (config_.quota > 0 && label_counts_[region] >= config_.quota) {
        return config_.quota_mode == QuotaMode::Zero ? 0.0 : config_.p_floor;
    }
    const auto max_count = *std::max_element(counts_.begin(), counts_.end());
    // density_k / max density; the common total cancels.
    const double ratio = max_count > 0 ? static_cast<double>(counts_[region]) /
                                             static_cast<double>(max_count)
                                       : 0.0;
    return std::clamp(ratio, config_.p_floor, 1.0);
}

std::vector<double> QueryEngine::probabilities() const {
    std::vector<double> p(counts_.size());
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = region_probability(k);
    return p;
}

QueryDecision QueryEngine::observe(const std::string& sample_id, std::int64_t t_start_ms,
                                   std::int64_t t_end_ms, const signal::FeatureVector& features) {
    if (has_sample(sample_id)) {
        throw std::invalid_argument("sample " + sample_id + " already observed");
    }
    const auto arr = features.to_array();
    Point x(arr.begin(), arr.end());
    for (double v : x) {
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
    }

    QueryDecision d;
    d.sample_id = sample_id;
    SampleEntry e{sample_id, t_start_ms, t_end_ms, x, -1};

    if (phase() == Phase::Initial) {
        index_.emplace(sample_id, samples_.size());
        samples_.push_back(std::move(e));
        if (samples_.size() >= config_.n_initial) fit_regions();
        d.reason = DecisionReason::InitialPhase;
        return d;
    }

    const auto k = nearest(centroids_, standardizer_.apply(x));
    d.region = static_cast<int>(k);
    d.probability = region_probability(k);
    const bool at_quota = config_.quota > 0 && label_counts_[k] >= config_.quota;
    if (at_quota && config_.quota_mode == QuotaMode::Zero) {
        d.reason = DecisionReason::QuotaReached;
    } else {
        ++draws_;
        d.trigger = keyed_uniform(config_.seed, sample_id) < d.probability;
        d.reason = d.trigger ? DecisionReason::Drawn : DecisionReason::NotDrawn;
    }
    ++counts_[k];
    e.region = d.region;
    index_.emplace(sample_id, samples_.size());
    samples_.push_back(std::move(e));
    return d;
}

QueryDecision QueryEngine::observe_unusable(const std::string& sample_id) const {
    QueryDecision d;
    d.sample_id = sample_id;
    d.reason = DecisionReason::QualityTooLow;
    return d;
}

void QueryEngine::fit_regions() {
    std::vector<Point> raw;
    raw.reserve(samples_.size());
    for (const auto& s : samples_) raw.push_back(s.features);
    standardizer_ = Standardizer::fit(raw);
    refit_regions(config_.k_regions);
}

void QueryEngine::refit_regions(std::size_t k) {
    if (!standardizer_.fitted()) throw ConfigError("regions need a fitted standardization");
    std::vector<Point> z;
    z.reserve(samples_.size());
    for (const auto& s : samples_) z.push_back(standardizer_.apply(s.features));
    auto km = kmeans(z, k, config_.seed, config_.kmeans_iterations);
    centroids_ = std::move(km.centroids);
    config_.k_regions = k;
    counts_.assign(k, 0);
    label_counts_.assign(k, 0);
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        samples_[i].region = static_cast<int>(km.assignment[i]);
        ++counts_[km.assignment[i]];
    }
    for (const auto& l : labeled_) {
        ++label_counts_[static_cast<std::size_t>(samples_[l.sample_index].region)];
    }
}

LabelOutcome QueryEngine::register_label(const LabelRecord& label) {
    if (ema_ids_.count(label.ema_id)) return LabelOutcome::Duplicate;
    const auto it = index_.find(label.sample_id);
    if (it == index_.end()) return LabelOutcome::UnknownSample;
    const auto& s = samples_[it->second];
    ema_ids_.insert(label.ema_id);
    if (label_gap_ms(s.t_start_ms, s.t_end_ms, label.responded_at_ms) > kLabelWindowMs) {
        ++stale_;
        return LabelOutcome::Stale;
    }
    labeled_.push_back({label, it->second});
    if (s.region >= 0) ++label_counts_[static_cast<std::size_t>(s.region)];
    return LabelOutcome::Accepted;
}

double QueryEngine::coverage(double d) const {
    const auto curve = coverage_curve(d);
    if (curve.empty()) {
        if (!standardizer_.fitted()) throw std::invalid_argument("standardization not fitted");
        return 1.0;
    }
    return curve.back();
}

std::vector<double> QueryEngine::coverage_curve(double d) const {
    if (!standardizer_.fitted()) throw std::invalid_argument("standardization not fitted");
    std::vector<Point> z;
    z.reserve(samples_.size());
    for (const auto& s : samples_) z.push_back(standardizer_.apply(s.features));
    std::vector<std::size_t> order;
    order.reserve(labeled_.size());
    for (const auto& l : labeled_) order.push_back(l.sample_index);
    return query::coverage_curve(z, order, d);
}

nlohmann::json to_json(const EngineConfig& c) {
    return {{"n_initial", c.n_initial},
            {"k_regions", c.k_regions},
            {"quota", c.quota},
            {"p_floor", c.p_floor},
            {"quota_mode", c.quota_mode == QuotaMode::Zero ? "zero" : "floor"},
            {"kmeans_iterations", c.kmeans_iterations},
            {"seed", c.seed}};
}

EngineConfig engine_config_from_json(const nlohmann::json& j) {
    EngineConfig c;
    c.n_initial = j.at("n_initial").get<std::size_t>();
    c.k_regions = j.at("k_regions").get<std::size_t>();
    c.quota = j.at("quota").get<std::size_t>();
    c.p_floor = j.at("p_floor").get<double>();
    const auto mode = j.value("quota_mode", std::string("zero"));
    if (mode != "zero" && mode != "floor") throw ConfigError("quota_mode must be zero or floor");
    c.quota_mode = mode == "zero" ? QuotaMode::Zero : QuotaMode::Floor;
    c.kmeans_iterations = j.value("kmeans_iterations", 25);
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

nlohmann::json to_json(const QueryDecision& d) {
    return {{"sample_id", d.sample_id},
            {"trigger", d.trigger},
            {"probability", d.probability},
            {"region", d.region},
            {"reason", to_string(d.reason)}};
}

QueryDecision decision_from_json(const nlohmann::json& j) {
    QueryDecision d;
    d.sample_id = j.at("sample_id").get<std::string>();
    d.trigger = j.at("trigger").get<bool>();
    d.probability = j.at("probability").get<double>();
    d.region = j.at("region").get<int>();
    const auto r = reason_from_string(j.at("reason").get<std::string>());
    if (!r) throw ValidationError("reason", "unknown decision reason");
    d.reason = *r;
    return d;
}

nlohmann::json to_json(const LabelRecord& l) {
    return {{"ema_id", l.ema_id},
            {"sample_id", l.sample_id},
            {"responded_at_ms", l.responded_at_ms},
            {"stress", l.stress},
            {"emotion", to_string(l.emotion)},
            {"activity", to_string(l.activity)}};
}

LabelRecord label_from_json(const nlohmann::json& j) {
    LabelRecord l;
    l.ema_id = j.at("ema_id").get<std::string>();
    l.sample_id = j.at("sample_id").get<std::string>();
    l.responded_at_ms = j.at("responded_at_ms").get<std::int64_t>();
    l.stress = j.at("stress").get<int>();
    const auto e = emotion_from_string(j.at("emotion").get<std::string>());
    const auto a = context_from_string(j.at("activity").get<std::string>());
    if (!e) throw ValidationError("emotion", "unknown value");
    if (!a) throw ValidationError("activity", "unknown value");
    l.emotion = *e;
    l.activity = *a;
    return l;
}

nlohmann::json QueryEngine::checkpoint() const {
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : samples_) {
        samples.push_back({{"sample_id", s.sample_id},
                           {"t_start_ms", s.t_start_ms},
                           {"t_end_ms", s.t_end_ms},
                           {"features", s.features},
                           {"region", s.region}});
    }
    nlohmann::json labeled = nlohmann::json::array();
    for (const auto& l : labeled_) {
        labeled.push_back({{"label", to_json(l.label)}, {"sample_index", l.sample_index}});
    }
    nlohmann::json j{{"format", "pulselabel-engine"},
                     {"version", kCheckpointVersion},
                     {"subject_id", subject_id_},
                     {"config", to_json(config_)},
                     {"centroids", centroids_},
                     {"counts", counts_},
                     {"label_counts", label_counts_},
                     {"samples", std::move(samples)},
                     {"labeled", std::move(labeled)},
                     {"ema_ids", ema_ids_},
                     {"stale", stale_},
                     {"draws", draws_}};
    if (standardizer_.fitted()) {
        j["standardizer"] = {{"mean", standardizer_.mean}, {"std", standardizer_.std}};
    } else {
        j["standardizer"] = nullptr;
    }
    return j;
}

QueryEngine QueryEngine::restore(const nlohmann::json& j) {
    if (j.value("format", "") != "pulselabel-engine" ||
        j.value("version", 0) != kCheckpointVersion) {
        throw ConfigError("not a version " + std::to_string(kCheckpointVersion) +
                          " engine checkpoint");
    }
    QueryEngine e(j.at("subject_id").get<std::string>(), engine_config_from_json(j.at("config")));
    if (!j.at("standardizer").is_null()) {
        e.standardizer_.mean = j["standardizer"].at("mean").get<Point>();
        e.standardizer_.std = j["standardizer"].at("std").get<Point>();
    }
    e.centroids_ = j.at("centroids").get<std::vector<Point>>();
    e.counts_ = j.at("counts").get<std::vector<std::size_t>>();
    e.label_counts_ = j.at("label_counts").get<std::vector<std::size_t>>();
    for (const auto& s : j.at("samples")) {
        SampleEntry se{s.at("sample_id").get<std::string>(), s.at("t_start_ms").get<std::int64_t>(),
                       s.at("t_end_ms").get<std::int64_t>(), s.at("features").get<Point>(),
                       s.at("region").get<int>()};
        e.index_.emplace(se.sample_id, e.samples_.size());
        e.samples_.push_back(std::move(se));
    }
    for (const auto& l : j.at("labeled")) {
        const auto idx = l.at("sample_index").get<std::size_t>();
        if (idx >= e.samples_.size()) throw ConfigError("checkpoint: label references no sample");
        e.labeled_.push_back({label_from_json(l.at("label")), idx});
    }
    e.ema_ids_ = j.at("ema_ids").get<std::set<std::string>>();
    e.stale_ = j.at("stale").get<std::size_t>();
    e.draws_ = j.at("draws").get<std::uint64_t>();
    if (e.counts_.size() != e.centroids_.size() || e.label_counts_.size() != e.centroids_.size()) {
        throw ConfigError("checkpoint: region tables disagree");
    }
    return e;
}

}  // namespace pulselabel::query
