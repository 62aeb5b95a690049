#pragma once

#include "pulselabel/kmeans.hpp"
#include "pulselabel/signal.hpp"
#include "pulselabel/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

// Per-subject EMA trigger logic. After an initial phase of N label-free
// samples, the feature space is partitioned into K regions and each new
// sample is queried with probability proportional to its region's density,
// clipped below at p_floor.
namespace pulselabel::query {

// Labels further than this from their sample's window are stale.
inline constexpr std::int64_t kLabelWindowMs = 16 * 60 * 1000;

enum class QuotaMode {
    Zero,   // a region at quota is never queried
    Floor,  // a region at quota keeps the p_floor probability
};

struct EngineConfig {
    std::size_t n_initial = 100;
    std::size_t k_regions = 10;
    std::size_t quota = 15;  // labels per region; 0 disables quotas
    double p_floor = 0.1;
    QuotaMode quota_mode = QuotaMode::Zero;
    int kmeans_iterations = 25;
    std::uint64_t seed = 1;

    // Throws ConfigError.
    void validate() const;
};

enum class Phase { Initial, Query };

enum class DecisionReason { InitialPhase, QuotaReached, Drawn, NotDrawn, QualityTooLow };

std::string_view to_string(DecisionReason r);
std::optional<DecisionReason> reason_from_string(std::string_view s);

struct QueryDecision {
    std::string sample_id;
    bool trigger = false;
    double probability = 0.0;
    int region = -1;  // -1 before regions exist or for unusable samples
    DecisionReason reason = DecisionReason::InitialPhase;
};

struct LabelRecord {
    std::string ema_id;
    std::string sample_id;
    std::int64_t responded_at_ms = 0;
    int stress = 0;  // 0..4
    Emotion emotion = Emotion::Neutral;
    Context activity = Context::Sit;
};

enum class LabelOutcome { Accepted, Duplicate, Stale, UnknownSample };

std::string_view to_string(LabelOutcome o);

// Time between a label and the nearest edge of its sample's window; zero
// when the label falls inside the window.
std::int64_t label_gap_ms(std::int64_t t_start_ms, std::int64_t t_end_ms,
                          std::int64_t responded_at_ms);

// Fraction of X farther than D from every point of U (1 when U is empty).
// Throws std::invalid_argument when X is empty.
double coverage(const std::vector<Point>& x, const std::vector<Point>& u, double d);

// coverage after each successive label in `u_order` (indices into x).
std::vector<double> coverage_curve(const std::vector<Point>& x,
                                   const std::vector<std::size_t>& u_order, double d);

struct SampleEntry {
    std::string sample_id;
    std::int64_t t_start_ms = 0;
    std::int64_t t_end_ms = 0;
    Point features;  // raw, unstandardized
    int region = -1;
};

struct LabeledEntry {
    LabelRecord label;
    std::size_t sample_index = 0;  // into samples()
};

class QueryEngine {
public:
    QueryEngine(std::string subject_id, EngineConfig config);

    // Decision for one usable sample. Throws std::invalid_argument on a
    // repeated sample_id or non-finite features.
    QueryDecision observe(const std::string& sample_id, std::int64_t t_start_ms,
                          std::int64_t t_end_ms, const signal::FeatureVector& features);
    // Sample whose features could not be computed: never triggers and does
    // not count toward densities.
    QueryDecision observe_unusable(const std::string& sample_id) const;

    LabelOutcome register_label(const LabelRecord& label);

    // Trigger probability for a sample landing in `region` now.
    double region_probability(std::size_t region) const;
    std::vector<double> probabilities() const;

    // Coverage of all usable samples by the labeled ones, in standardized
    // space. Requires the query phase.
    double coverage(double d) const;
    std::vector<double> coverage_curve(double d) const;

    // Re-cluster every usable sample seen so far into `k` regions and remap
    // sample and label counts. Throws ConfigError if k exceeds the samples.
    void refit_regions(std::size_t k);

    const std::string& subject_id() const { return subject_id_; }
    const EngineConfig& config() const { return config_; }
    Phase phase() const { return centroids_.empty() ? Phase::Initial : Phase::Query; }
    const Standardizer& standardizer() const { return standardizer_; }
    const std::vector<Point>& centroids() const { return centroids_; }
    const std::vector<std::size_t>& region_counts() const { return counts_; }
    const std::vector<std::size_t>& label_counts() const { return label_counts_; }
    const std::vector<SampleEntry>& samples() const { return samples_; }
    const std::vector<LabeledEntry>& labeled() const { return labeled_; }
    std::size_t stale_labels() const { return stale_; }
    std::uint64_t draws() const { return draws_; }
    bool has_sample(const std::string& sample_id) const;

    nlohmann::json checkpoint() const;
    static QueryEngine restore(const nlohmann::json& j);

private:
    void fit_regions();

    std::string subject_id_;
    EngineConfig config_;
    Standardizer standardizer_;
    std::vector<Point> centroids_;
    std::vector<std::size_t> counts_;
    std::vector<std::size_t> label_counts_;
    std::vector<SampleEntry> samples_;
    std::vector<LabeledEntry> labeled_;
    std::unordered_map<std::string, std::size_t> index_;
    std::set<std::string> ema_ids_;
    std::size_t stale_ = 0;
    std::uint64_t draws_ = 0;
};

nlohmann::json to_json(const EngineConfig& c);
EngineConfig engine_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QueryDecision& d);
QueryDecision decision_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LabelRecord& l);
LabelRecord label_from_json(const nlohmann::json& j);

}  // namespace pulselabel::query
