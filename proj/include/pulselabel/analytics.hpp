#pragma once

#include "pulselabel/activity.hpp"
#include "pulselabel/kmeans.hpp"
#include "pulselabel/store.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

// Batch reports over a store snapshot. Every function here is pure: the same
// snapshot gives bit-identical output.
namespace pulselabel::analytics {

// ---- coverage ----

struct CoveragePoint {
    std::size_t labels = 0;
    double f = 1.0;
};

// Standardized feature rows of one subject in ingest order, the standardizer
// fitted on the first `n_initial` of them (as the engine does).
struct SubjectFeatures {
    std::vector<std::string> sample_ids;
    std::vector<std::int64_t> t_start_ms;
    std::vector<query::Point> x;
};
SubjectFeatures subject_features(const store::Snapshot& snap, const std::string& subject_id,
                                 std::size_t n_initial);

// F_D after each accepted label, in the order the labels arrived. Throws
// NotFound for an unknown subject; empty when the subject has no labels.
std::vector<CoveragePoint> coverage_curve(const store::Snapshot& snap,
                                          const std::string& subject_id, double d,
                                          std::size_t n_initial);

// ---- temporal distance profile ----

enum class GroupBy { None, Activity, Stress };
std::string_view to_string(GroupBy g);
std::optional<GroupBy> group_by_from_string(std::string_view s);

inline constexpr double kGapBinMinutes = 15.0;
inline constexpr double kDefaultHorizonMinutes = 180.0;
inline constexpr std::size_t kLowConfidencePairs = 10;

struct GapBin {
    double gap_min = 0.0;
    std::size_t pairs = 0;
    double mean_distance = 0.0;
    bool low_confidence = true;
};

struct TemporalProfile {
    std::string subject_id;
    GroupBy group_by = GroupBy::None;
    std::string group;
    std::vector<GapBin> bins;  // 15, 30, ... horizon; empty bins included with 0 pairs
};

// Core computation: every unordered pair, binned by its gap rounded to the
// nearest 15 min. Pairs rounding to 0 or beyond the horizon are dropped.
std::vector<GapBin> gap_profile(const std::vector<std::int64_t>& t_ms,
                                const std::vector<query::Point>& x,
                                double horizon_min = kDefaultHorizonMinutes);

// Features standardized over all of the subject's usable samples. Groups:
// predicted activity, or the stress answer of accepted labels. Groups with
// fewer than two samples are skipped and named in `skipped`.
struct TemporalReport {
    std::vector<TemporalProfile> profiles;
    std::vector<std::string> skipped;
};
TemporalReport temporal_profile(const store::Snapshot& snap, const std::string& subject_id,
                                GroupBy group_by, double horizon_min = kDefaultHorizonMinutes);

// ---- signal quality by predicted activity ----

struct FiveNumber {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};
FiveNumber five_number(std::vector<double> x);

inline constexpr std::array<std::string_view, 5> kQualityIndexNames{
    "skewness_var", "kurtosis_var", "apen_var", "shannon_entropy", "spectral_entropy"};

struct QualitySummary {
    activity::ActivityLabel label = activity::ActivityLabel::Sit;
    std::size_t count = 0;
    std::array<FiveNumber, 5> index;  // order of kQualityIndexNames
};

struct QualityReport {
    std::vector<QualitySummary> rows;  // activity order; groups below min_count omitted
    std::vector<std::pair<activity::ActivityLabel, std::size_t>> omitted;
};
// Only windows whose quality report is usable contribute.
QualityReport quality_by_activity(const store::Snapshot& snap, std::size_t min_count);

// ---- response behaviour ----

struct Cdf {
    std::string group;
    std::vector<double> times_s;       // sorted
    std::vector<double> probability;   // cumulative, same length
    std::size_t answered = 0;
    std::size_t total = 0;  // denominator: answered for context rows, all queries for "all"
    double median_s = 0.0;
};
Cdf make_cdf(std::string group, std::vector<double> times_s, std::size_t total);
// Step-function value at t.
double cdf_at(const Cdf& c, double t);

struct HourRate {
    int hour = 0;
    std::size_t subjects = 0;  // subjects with at least one query in the hour
    std::size_t queries = 0;
    std::size_t responses = 0;
    double rate = 0.0;  // mean over those subjects of responses/queries
};

struct ResponseStats {
    Cdf all;
    std::vector<Cdf> by_activity;  // self-reported context, answered queries only
    std::vector<Cdf> by_stress;
    std::vector<HourRate> by_hour;  // hours with queries only, ascending
};

// A query counts as answered once any response (accepted or stale) exists.
// Hours are UTC hours of the dispatch timestamp.
ResponseStats response_stats(const store::Snapshot& snap);

struct DominanceResult {
    bool dominated = false;
    double max_excess = 0.0;  // sup_t F_slow(t) - F_rest(t)
    double median_slow = 0.0;
    double median_rest = 0.0;
};
// Checks that `slow` responses are stochastically slower than `rest`:
// F_slow <= F_rest + tolerance everywhere and a larger median.
DominanceResult check_dominance(const std::vector<double>& slow, const std::vector<double>& rest,
                                double tolerance = 0.05);

// ---- CSV output ----

std::filesystem::path write_coverage_csv(const std::filesystem::path& dir,
                                         const std::string& subject_id,
                                         const std::vector<CoveragePoint>& curve);
std::filesystem::path write_temporal_csv(const std::filesystem::path& dir,
                                         const std::vector<TemporalProfile>& profiles,
                                         GroupBy group_by);
std::filesystem::path write_quality_csv(const std::filesystem::path& dir, const QualityReport& r);
std::filesystem::path write_response_cdf_csv(const std::filesystem::path& dir,
                                             const ResponseStats& s);
std::filesystem::path write_response_rate_csv(const std::filesystem::path& dir,
                                              const ResponseStats& s);

// JSON renderings used by the HTTP API.
nlohmann::json to_json(const std::vector<CoveragePoint>& curve);
nlohmann::json to_json(const TemporalReport& r);
nlohmann::json to_json(const QualityReport& r);
nlohmann::json to_json(const ResponseStats& s);

}  // namespace pulselabel::analytics
