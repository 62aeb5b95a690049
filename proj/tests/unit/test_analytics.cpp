#include "oracles.hpp"

#include "pulselabel/analytics.hpp"
#include "pulselabel/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

using namespace pulselabel;
using analytics::GroupBy;

namespace {

constexpr std::int64_t kMin = 60000;
// 2026-01-05 00:00 UTC.
constexpr std::int64_t kMidnight = 1767571200000LL;

signal::FeatureVector fv(double a, double b) {
    std::array<double, signal::FeatureVector::kSize> v{};
    v[0] = a;
    v[1] = b;
    v[2] = 0.5 * a - b;
    return signal::FeatureVector::from_array(v);
}

struct SnapBuilder {
    store::Snapshot snap;
    std::uint64_t seq = 0;

    store::SampleRecord& sample(const std::string& subj, std::int64_t t, std::optional<signal::FeatureVector> f,
                                activity::ActivityLabel a = activity::ActivityLabel::Sit) {
        store::SampleRecord r;
        r.seq = ++seq;
        r.subject_id = subj;
        r.sample_id = subj + "-" + std::to_string(t);
        r.t_start_ms = t;
        r.t_end_ms = t + 2 * kMin;
        r.features = f;
        r.activity.label = a;
        snap.samples.push_back(r);
        return snap.samples.back();
    }

    void query(const std::string& subj, const std::string& sample_id, std::int64_t at) {
        snap.queries.push_back({++seq, "Q" + sample_id, subj, sample_id, at, at + 16 * kMin});
    }

    void respond(const std::string& ema, const std::string& subj, double after_s, int stress,
                 Context ctx, const std::string& outcome = "accepted") {
        store::EmaResponse r;
        r.seq = ++seq;
        r.ema_id = ema;
        r.subject_id = subj;
        r.response_time_s = after_s;
        r.stress = stress;
        r.activity = ctx;
        r.outcome = outcome;
        snap.responses.push_back(r);
    }
};

// Population standardization over the first n rows, then the brute-force
// coverage after each label.
std::vector<double> oracle_curve(const std::vector<std::vector<double>>& raw, std::size_t n,
                                 const std::vector<std::size_t>& order, double d) {
    const std::size_t dim = raw[0].size();
    std::vector<double> mu(dim, 0.0), sd(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < dim; ++k) mu[k] += raw[i][k] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < dim; ++k) sd[k] += std::pow(raw[i][k] - mu[k], 2) / static_cast<double>(n);
    for (double& s : sd) s = s > 0 ? std::sqrt(s) : 1.0;
    std::vector<std::vector<double>> z;
    for (const auto& r : raw) {
        std::vector<double> p(dim);
        for (std::size_t k = 0; k < dim; ++k) p[k] = (r[k] - mu[k]) / sd[k];
        z.push_back(p);
    }
    std::vector<std::vector<double>> u;
    std::vector<double> out;
    for (std::size_t i : order) {
        u.push_back(z[i]);
        out.push_back(oracle::coverage(z, u, d));
    }
    return out;
}

}  // namespace

TEST(CoverageReport, FollowsLabelArrivalAndMatchesOracle) {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g;
    SnapBuilder b;
    std::vector<std::vector<double>> raw;
    std::vector<std::string> ids;
    for (int i = 0; i < 60; ++i) {
        const auto f = fv(g(rng), g(rng));
        const auto a = f.to_array();
        raw.emplace_back(a.begin(), a.end());
        ids.push_back(b.sample("S01", i * 15 * kMin, f).sample_id);
        if (i % 7 == 3) b.sample("S01", i * 15 * kMin + 1, std::nullopt);  // unusable, ignored
    }
    b.sample("S02", 0, fv(0, 0));
    const std::vector<std::size_t> order{40, 5, 22, 59, 11};
    for (std::size_t i : order) b.query("S01", ids[i], 0);
    // Responses land in a different order than the queries were made.
    b.respond("Q" + ids[40], "S01", 10, 1, Context::Sit);
    b.respond("Q" + ids[5], "S01", 10, 1, Context::Sit);
    b.respond("Q" + ids[22], "S01", 10, 1, Context::Sit, "stale");
    b.respond("Q" + ids[59], "S01", 10, 1, Context::Sit);
    b.respond("Q" + ids[11], "S01", 10, 1, Context::Sit);

    const auto curve = analytics::coverage_curve(b.snap, "S01", 1.5, 20);
    const auto want = oracle_curve(raw, 20, {40, 5, 59, 11}, 1.5);
    ASSERT_EQ(curve.size(), want.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        EXPECT_EQ(curve[i].labels, i + 1);
        EXPECT_NEAR(curve[i].f, want[i], 1e-12);
        if (i > 0) EXPECT_LE(curve[i].f, curve[i - 1].f);
    }
    EXPECT_TRUE(analytics::coverage_curve(b.snap, "S02", 1.5, 20).empty());
    EXPECT_THROW(analytics::coverage_curve(b.snap, "S99", 1.5, 20), NotFound);
}

TEST(TemporalReport, IdenticalSamplesFifteenMinutesApart) {
    const query::Point p{1.0, 2.0};
    const auto bins = analytics::gap_profile({0, 15 * kMin}, {p, p});
    ASSERT_EQ(bins.size(), 12U);
    EXPECT_DOUBLE_EQ(bins[0].gap_min, 15.0);
    EXPECT_EQ(bins[0].pairs, 1U);
    EXPECT_DOUBLE_EQ(bins[0].mean_distance, 0.0);
    EXPECT_TRUE(bins[0].low_confidence);
    for (std::size_t k = 1; k < bins.size(); ++k) EXPECT_EQ(bins[k].pairs, 0U);
    EXPECT_DOUBLE_EQ(bins.back().gap_min, 180.0);
}

TEST(TemporalReport, GapsRoundToNearestBin) {
    const query::Point a{0.0}, b{3.0}, c{7.0};
    // Gaps: 22 min (bin 15), 7 min (dropped), 29 min (bin 30).
    const auto bins = analytics::gap_profile({0, 22 * kMin, 29 * kMin}, {a, b, c});
    EXPECT_EQ(bins[0].pairs, 1U);
    EXPECT_DOUBLE_EQ(bins[0].mean_distance, 3.0);
    EXPECT_EQ(bins[1].pairs, 1U);
    EXPECT_DOUBLE_EQ(bins[1].mean_distance, 7.0);
    EXPECT_THROW(analytics::gap_profile({0}, {}), std::invalid_argument);
}

TEST(TemporalReport, TinyGroupsAreSkipped) {
    SnapBuilder b;
    for (int i = 0; i < 8; ++i) b.sample("S01", i * 15 * kMin, fv(i, -i));
    b.sample("S01", 200 * kMin, fv(3, 3), activity::ActivityLabel::Walk);
    const auto r = analytics::temporal_profile(b.snap, "S01", GroupBy::Activity);
    ASSERT_EQ(r.profiles.size(), 1U);
    EXPECT_EQ(r.profiles[0].group, "sit");
    ASSERT_EQ(r.skipped.size(), 1U);
    EXPECT_NE(r.skipped[0].find("walk"), std::string::npos);
    const auto all = analytics::temporal_profile(b.snap, "S01", GroupBy::None);
    ASSERT_EQ(all.profiles.size(), 1U);
    EXPECT_EQ(all.profiles[0].bins[0].pairs, 7U);
}

TEST(QualityReport, FiveNumberUsesLinearQuantiles) {
    const auto f = analytics::five_number({4, 1, 3, 2});
    EXPECT_DOUBLE_EQ(f.min, 1.0);
    EXPECT_DOUBLE_EQ(f.q1, 1.75);
    EXPECT_DOUBLE_EQ(f.median, 2.5);
    EXPECT_DOUBLE_EQ(f.q3, 3.25);
    EXPECT_DOUBLE_EQ(f.max, 4.0);
}

TEST(QualityReport, SmallGroupsOmitted) {
    SnapBuilder b;
    for (int i = 0; i < 5; ++i) {
        auto& r = b.sample("S01", i, fv(0, 0));
        r.quality.usable = true;
        r.quality.shannon_entropy = i;
    }
    auto& w = b.sample("S01", 99, fv(0, 0), activity::ActivityLabel::Walk);
    w.quality.usable = true;
    b.sample("S01", 100, fv(0, 0), activity::ActivityLabel::Jog);  // unusable quality
    const auto q = analytics::quality_by_activity(b.snap, 3);
    ASSERT_EQ(q.rows.size(), 1U);
    EXPECT_EQ(q.rows[0].count, 5U);
    EXPECT_DOUBLE_EQ(q.rows[0].index[3].median, 2.0);
    ASSERT_EQ(q.omitted.size(), 1U);
    EXPECT_EQ(q.omitted[0].first, activity::ActivityLabel::Walk);
}

TEST(ResponseStats, HalfAnsweredInOneHour) {
    SnapBuilder b;
    for (int i = 0; i < 10; ++i) {
        const auto id = "s" + std::to_string(i);
        b.query("S01", id, kMidnight + 14 * 3600000LL + i * 5 * kMin);
        if (i % 2 == 0) b.respond("Q" + id, "S01", 30.0 * (i + 1), i % 5, Context::Sit, i == 8 ? "stale" : "accepted");
    }
    const auto s = analytics::response_stats(b.snap);
    ASSERT_EQ(s.by_hour.size(), 1U);
    EXPECT_EQ(s.by_hour[0].hour, 14);
    EXPECT_EQ(s.by_hour[0].queries, 10U);
    EXPECT_EQ(s.by_hour[0].responses, 5U);
    EXPECT_DOUBLE_EQ(s.by_hour[0].rate, 0.5);
    EXPECT_EQ(s.all.answered, 5U);
    EXPECT_EQ(s.all.total, 10U);
    EXPECT_DOUBLE_EQ(s.all.probability.back(), 0.5);
    EXPECT_DOUBLE_EQ(s.all.median_s, 150.0);
    ASSERT_EQ(s.by_activity.size(), 1U);
    EXPECT_DOUBLE_EQ(s.by_activity[0].probability.back(), 1.0);
}

TEST(ResponseStats, RateIsMeanOverSubjects) {
    SnapBuilder b;
    const std::int64_t t = kMidnight + 8 * 3600000LL;
    b.query("A", "a1", t);
    b.query("A", "a2", t + kMin);
    b.respond("Qa1", "A", 5, 0, Context::Sit);
    for (int i = 0; i < 4; ++i) b.query("B", "b" + std::to_string(i), t + i * kMin);
    const auto s = analytics::response_stats(b.snap);
    ASSERT_EQ(s.by_hour.size(), 1U);
    EXPECT_EQ(s.by_hour[0].subjects, 2U);
    EXPECT_DOUBLE_EQ(s.by_hour[0].rate, 0.25);  // mean of 1/2 and 0/4
}

TEST(ResponseStats, NothingAnswered) {
    SnapBuilder b;
    for (int i = 0; i < 3; ++i) b.query("S01", "s" + std::to_string(i), kMidnight + i * 3600000LL);
    const auto s = analytics::response_stats(b.snap);
    EXPECT_TRUE(s.all.times_s.empty());
    EXPECT_TRUE(s.by_activity.empty());
    EXPECT_EQ(analytics::cdf_at(s.all, 1e9), 0.0);
    ASSERT_EQ(s.by_hour.size(), 3U);
    for (const auto& h : s.by_hour) EXPECT_EQ(h.rate, 0.0);
}

TEST(ResponseStats, CdfMonotoneAndBoundedByAnsweredFraction) {
    std::mt19937_64 rng(5);
    std::exponential_distribution<double> lat(1.0 / 120.0);
    std::vector<double> times;
    for (int i = 0; i < 40; ++i) times.push_back(lat(rng));
    const auto c = analytics::make_cdf("all", times, 100);
    for (std::size_t i = 1; i < c.probability.size(); ++i) {
        EXPECT_LE(c.times_s[i - 1], c.times_s[i]);
        EXPECT_LT(c.probability[i - 1], c.probability[i]);
    }
    EXPECT_DOUBLE_EQ(c.probability.back(), 0.4);
    EXPECT_EQ(analytics::cdf_at(c, -1.0), 0.0);
}

TEST(Dominance, ShiftedSampleDominates) {
    std::vector<double> rest, slow;
    for (int i = 0; i < 50; ++i) {
        rest.push_back(10.0 + i);
        slow.push_back(40.0 + i);
    }
    const auto d = analytics::check_dominance(slow, rest);
    EXPECT_TRUE(d.dominated);
    EXPECT_LE(d.max_excess, 0.0);
    EXPECT_FALSE(analytics::check_dominance(rest, slow).dominated);
    EXPECT_FALSE(analytics::check_dominance({}, rest).dominated);
}

TEST(Reports, CsvOutputIsReproducible) {
    SnapBuilder b;
    for (int i = 0; i < 30; ++i) b.sample("S01", i * 15 * kMin, fv(std::sin(i), std::cos(i)));
    auto write = [&](const std::string& tag) {
        const auto dir = oracle::temp_dir(tag);
        const auto rep = analytics::temporal_profile(b.snap, "S01", GroupBy::None);
        const auto p = analytics::write_temporal_csv(dir, rep.profiles, GroupBy::None);
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const auto a = write("csv-a");
    EXPECT_EQ(a, write("csv-b"));
    EXPECT_EQ(a.substr(0, a.find('\n')), "subject_id,group_by,group,gap_min,pairs,mean_distance,low_confidence");
}
