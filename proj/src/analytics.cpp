#include "pulselabel/analytics.hpp"

#include "pulselabel/errors.hpp"
#include "pulselabel/query_engine.hpp"
#include "pulselabel/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace pulselabel::analytics {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

query::Point to_point(const signal::FeatureVector& f) {
    const auto a = f.to_array();
    return {a.begin(), a.end()};
}

std::vector<const store::SampleRecord*> subject_records(const store::Snapshot& snap,
                                                        const std::string& subject_id) {
    std::vector<const store::SampleRecord*> out;
    for (const auto& r : snap.samples) {
        if (r.subject_id == subject_id) out.push_back(&r);
    }
    if (out.empty()) throw NotFound("no samples for subject " + subject_id);
    std::sort(out.begin(), out.end(),
              [](const auto* a, const auto* b) { return a->seq < b->seq; });
    return out;
}

std::ofstream open_csv(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(10);
    return out;
}

// Hour of day (UTC) of a millisecond epoch timestamp.
int utc_hour(std::int64_t ms) {
    constexpr std::int64_t kDay = 24LL * 3600 * 1000;
    const std::int64_t in_day = ((ms % kDay) + kDay) % kDay;
    return static_cast<int>(in_day / (3600LL * 1000));
}

}  // namespace

SubjectFeatures subject_features(const store::Snapshot& snap, const std::string& subject_id,
                                 std::size_t n_initial) {
    SubjectFeatures out;
    std::vector<query::Point> raw;
    for (const auto* r : subject_records(snap, subject_id)) {
        if (!r->features) continue;
        out.sample_ids.push_back(r->sample_id);
        out.t_start_ms.push_back(r->t_start_ms);
        raw.push_back(to_point(*r->features));
    }
    if (raw.empty()) return out;
    const std::size_t n = std::min(std::max<std::size_t>(n_initial, 1), raw.size());
    const auto st = query::Standardizer::fit({raw.begin(), raw.begin() + static_cast<long>(n)});
    out.x.reserve(raw.size());
    for (const auto& p : raw) out.x.push_back(st.apply(p));
    return out;
}

std::vector<CoveragePoint> coverage_curve(const store::Snapshot& snap,
                                          const std::string& subject_id, double d,
                                          std::size_t n_initial) {
    const auto sf = subject_features(snap, subject_id, n_initial);
    if (sf.x.empty()) return {};
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < sf.sample_ids.size(); ++i) index[sf.sample_ids[i]] = i;
    std::map<std::string, std::string> sample_of_query;
    for (const auto& q : snap.queries) sample_of_query[q.ema_id] = q.sample_id;

    std::vector<const store::EmaResponse*> accepted;
    for (const auto& r : snap.responses) {
        if (r.subject_id == subject_id && r.outcome == "accepted") accepted.push_back(&r);
    }
    std::sort(accepted.begin(), accepted.end(),
              [](const auto* a, const auto* b) { return a->seq < b->seq; });
    std::vector<std::size_t> order;
    for (const auto* r : accepted) {
        auto q = sample_of_query.find(r->ema_id);
        if (q == sample_of_query.end()) continue;
        auto it = index.find(q->second);
        if (it != index.end()) order.push_back(it->second);
    }
    const auto f = query::coverage_curve(sf.x, order, d);
    std::vector<CoveragePoint> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = {i + 1, f[i]};
    return out;
}

std::string_view to_string(GroupBy g) {
    switch (g) {
        case GroupBy::None: return "all";
        case GroupBy::Activity: return "activity";
        case GroupBy::Stress: return "stress";
    }
    return "all";
}

std::optional<GroupBy> group_by_from_string(std::string_view s) {
    if (s == "all" || s == "none") return GroupBy::None;
    if (s == "activity") return GroupBy::Activity;
    if (s == "stress") return GroupBy::Stress;
    return std::nullopt;
}

std::vector<GapBin> gap_profile(const std::vector<std::int64_t>& t_ms,
                                const std::vector<query::Point>& x, double horizon_min) {
    if (t_ms.size() != x.size()) throw std::invalid_argument("times and features differ in length");
    const auto nbins = static_cast<std::size_t>(std::floor(horizon_min / kGapBinMinutes + 1e-9));
    std::vector<double> sum(nbins, 0.0);
    std::vector<std::size_t> count(nbins, 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double gap_min = std::abs(static_cast<double>(t_ms[j] - t_ms[i])) / 60000.0;
            const auto k = static_cast<long long>(std::llround(gap_min / kGapBinMinutes));
            if (k < 1 || static_cast<std::size_t>(k) > nbins) continue;
            sum[static_cast<std::size_t>(k) - 1] += std::sqrt(query::squared_distance(x[i], x[j]));
            ++count[static_cast<std::size_t>(k) - 1];
        }
    }
    std::vector<GapBin> bins(nbins);
    for (std::size_t b = 0; b < nbins; ++b) {
        bins[b].gap_min = kGapBinMinutes * static_cast<double>(b + 1);
        bins[b].pairs = count[b];
        bins[b].mean_distance = count[b] ? sum[b] / static_cast<double>(count[b]) : 0.0;
        bins[b].low_confidence = count[b] < kLowConfidencePairs;
    }
    return bins;
}

TemporalReport temporal_profile(const store::Snapshot& snap, const std::string& subject_id,
                                GroupBy group_by, double horizon_min) {
    const auto records = subject_records(snap, subject_id);
    std::vector<const store::SampleRecord*> usable;
    std::vector<query::Point> raw;
    for (const auto* r : records) {
        if (!r->features) continue;
        usable.push_back(r);
        raw.push_back(to_point(*r->features));
    }
    TemporalReport report;
    if (usable.empty()) {
        report.skipped.push_back(std::string(to_string(group_by)) + ": no usable samples");
        return report;
    }
    const auto st = query::Standardizer::fit(raw);

    std::map<std::string, int> stress_of_sample;
    if (group_by == GroupBy::Stress) {
        std::map<std::string, std::string> sample_of_query;
        for (const auto& q : snap.queries) sample_of_query[q.ema_id] = q.sample_id;
        for (const auto& r : snap.responses) {
            if (r.subject_id != subject_id || r.outcome != "accepted") continue;
            auto q = sample_of_query.find(r.ema_id);
            if (q != sample_of_query.end()) stress_of_sample[q->second] = r.stress;
        }
    }

    // Group key -> member indices; std::map keeps groups in a fixed order.
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < usable.size(); ++i) {
        switch (group_by) {
            case GroupBy::None: groups["all"].push_back(i); break;
            case GroupBy::Activity:
                groups[std::string(activity::to_string(usable[i]->activity.label))].push_back(i);
                break;
            case GroupBy::Stress: {
                auto it = stress_of_sample.find(usable[i]->sample_id);
                if (it != stress_of_sample.end()) groups[std::to_string(it->second)].push_back(i);
                break;
            }
        }
    }
    if (groups.empty()) report.skipped.push_back(std::string(to_string(group_by)) + ": no groups");
    for (const auto& [key, members] : groups) {
        if (members.size() < 2) {
            report.skipped.push_back(key + ": fewer than two samples");
            continue;
        }
        std::vector<std::int64_t> t;
        std::vector<query::Point> x;
        for (std::size_t i : members) {
            t.push_back(usable[i]->t_start_ms);
            x.push_back(st.apply(raw[i]));
        }
        report.profiles.push_back({subject_id, group_by, key, gap_profile(t, x, horizon_min)});
    }
    return report;
}

FiveNumber five_number(std::vector<double> x) {
    if (x.empty()) return {};
    std::sort(x.begin(), x.end());
    return {x.front(), stats::quantile(x, 0.25), stats::quantile(x, 0.5), stats::quantile(x, 0.75),
            x.back()};
}

QualityReport quality_by_activity(const store::Snapshot& snap, std::size_t min_count) {
    std::array<std::array<std::vector<double>, 5>, activity::kActivityCount> values;
    for (const auto& r : snap.samples) {
        if (!r.quality.usable) continue;
        auto& v = values[static_cast<std::size_t>(r.activity.label)];
        v[0].push_back(r.quality.skewness_var);
        v[1].push_back(r.quality.kurtosis_var);
        v[2].push_back(r.quality.apen_var);
        v[3].push_back(r.quality.shannon_entropy);
        v[4].push_back(r.quality.spectral_entropy);
    }
    QualityReport out;
    for (std::size_t a = 0; a < activity::kActivityCount; ++a) {
        const auto label = static_cast<activity::ActivityLabel>(a);
        const std::size_t n = values[a][0].size();
        if (n == 0) continue;
        if (n < min_count) {
            out.omitted.emplace_back(label, n);
            continue;
        }
        QualitySummary s;
        s.label = label;
        s.count = n;
        for (std::size_t k = 0; k < 5; ++k) s.index[k] = five_number(values[a][k]);
        out.rows.push_back(s);
    }
    return out;
}

Cdf make_cdf(std::string group, std::vector<double> times_s, std::size_t total) {
    Cdf c;
    c.group = std::move(group);
    std::sort(times_s.begin(), times_s.end());
    c.answered = times_s.size();
    c.total = std::max(total, times_s.size());
    c.probability.resize(times_s.size());
    for (std::size_t i = 0; i < times_s.size(); ++i) {
        c.probability[i] = static_cast<double>(i + 1) / static_cast<double>(c.total);
    }
    c.median_s = stats::median(times_s);
    c.times_s = std::move(times_s);
    return c;
}

double cdf_at(const Cdf& c, double t) {
    const auto it = std::upper_bound(c.times_s.begin(), c.times_s.end(), t);
    const auto n = static_cast<std::size_t>(it - c.times_s.begin());
    return n == 0 ? 0.0 : c.probability[n - 1];
}

ResponseStats response_stats(const store::Snapshot& snap) {
    std::map<std::string, const store::EmaResponse*> response_of;
    for (const auto& r : snap.responses) response_of[r.ema_id] = &r;

    std::vector<double> all_times;
    std::array<std::vector<double>, kContextCount> by_ctx;
    std::array<std::vector<double>, 5> by_stress;
    // (subject, hour) -> (queries, responses)
    std::map<std::pair<std::string, int>, std::pair<std::size_t, std::size_t>> per_hour;

    for (const auto& q : snap.queries) {
        auto& cell = per_hour[{q.subject_id, utc_hour(q.dispatched_at_ms)}];
        ++cell.first;
        auto it = response_of.find(q.ema_id);
        if (it == response_of.end()) continue;
        const auto* r = it->second;
        ++cell.second;
        all_times.push_back(r->response_time_s);
        by_ctx[static_cast<std::size_t>(r->activity)].push_back(r->response_time_s);
        if (r->stress >= 0 && r->stress <= 4) {
            by_stress[static_cast<std::size_t>(r->stress)].push_back(r->response_time_s);
        }
    }

    ResponseStats s;
    s.all = make_cdf("all", all_times, snap.queries.size());
    for (std::size_t c = 0; c < kContextCount; ++c) {
        if (by_ctx[c].empty()) continue;
        const std::size_t n = by_ctx[c].size();
        s.by_activity.push_back(
            make_cdf(std::string(to_string(static_cast<Context>(c))), std::move(by_ctx[c]), n));
    }
    for (std::size_t k = 0; k < 5; ++k) {
        if (by_stress[k].empty()) continue;
        const std::size_t n = by_stress[k].size();
        s.by_stress.push_back(make_cdf(std::to_string(k), std::move(by_stress[k]), n));
    }

    std::array<HourRate, 24> hours{};
    std::array<double, 24> rate_sum{};
    for (const auto& [key, cell] : per_hour) {
        auto& h = hours[static_cast<std::size_t>(key.second)];
        ++h.subjects;
        h.queries += cell.first;
        h.responses += cell.second;
        rate_sum[static_cast<std::size_t>(key.second)] +=
            static_cast<double>(cell.second) / static_cast<double>(cell.first);
    }
    for (int hr = 0; hr < 24; ++hr) {
        auto& h = hours[static_cast<std::size_t>(hr)];
        if (h.subjects == 0) continue;
        h.hour = hr;
        h.rate = rate_sum[static_cast<std::size_t>(hr)] / static_cast<double>(h.subjects);
        s.by_hour.push_back(h);
    }
    return s;
}

DominanceResult check_dominance(const std::vector<double>& slow, const std::vector<double>& rest,
                                double tolerance) {
    DominanceResult r;
    if (slow.empty() || rest.empty()) return r;
    const auto a = make_cdf("slow", slow, slow.size());
    const auto b = make_cdf("rest", rest, rest.size());
    // The supremum of a difference of step functions is attained at a jump.
    for (double t : a.times_s) r.max_excess = std::max(r.max_excess, cdf_at(a, t) - cdf_at(b, t));
    r.median_slow = a.median_s;
    r.median_rest = b.median_s;
    r.dominated = r.max_excess <= tolerance && r.median_slow > r.median_rest;
    return r;
}

fs::path write_coverage_csv(const fs::path& dir, const std::string& subject_id,
                            const std::vector<CoveragePoint>& curve) {
    const auto path = dir / "fig3_coverage.csv";
    auto out = open_csv(path);
    out << "subject_id,labels,F\n";
    for (const auto& p : curve) out << subject_id << ',' << p.labels << ',' << p.f << '\n';
    return path;
}

fs::path write_temporal_csv(const fs::path& dir, const std::vector<TemporalProfile>& profiles,
                            GroupBy group_by) {
    const auto path = dir / (group_by == GroupBy::Stress ? "fig5_temporal_stress.csv"
                             : group_by == GroupBy::Activity ? "fig4_temporal_activity.csv"
                                                             : "fig4_temporal_all.csv");
    auto out = open_csv(path);
    out << "subject_id,group_by,group,gap_min,pairs,mean_distance,low_confidence\n";
    for (const auto& p : profiles) {
        for (const auto& b : p.bins) {
            out << p.subject_id << ',' << to_string(p.group_by) << ',' << p.group << ','
                << b.gap_min << ',' << b.pairs << ',' << b.mean_distance << ','
                << (b.low_confidence ? 1 : 0) << '\n';
        }
    }
    return path;
}

fs::path write_quality_csv(const fs::path& dir, const QualityReport& r) {
    const auto path = dir / "fig6_sqi_activity.csv";
    auto out = open_csv(path);
    out << "activity,index,count,min,q1,median,q3,max\n";
    for (const auto& row : r.rows) {
        for (std::size_t k = 0; k < 5; ++k) {
            const auto& f = row.index[k];
            out << activity::to_string(row.label) << ',' << kQualityIndexNames[k] << ','
                << row.count << ',' << f.min << ',' << f.q1 << ',' << f.median << ',' << f.q3
                << ',' << f.max << '\n';
        }
    }
    return path;
}

fs::path write_response_cdf_csv(const fs::path& dir, const ResponseStats& s) {
    const auto path = dir / "fig7_response_cdf.csv";
    auto out = open_csv(path);
    out << "group_by,group,response_time_s,cdf\n";
    auto emit = [&](std::string_view by, const Cdf& c) {
        for (std::size_t i = 0; i < c.times_s.size(); ++i) {
            out << by << ',' << c.group << ',' << c.times_s[i] << ',' << c.probability[i] << '\n';
        }
    };
    emit("all", s.all);
    for (const auto& c : s.by_activity) emit("activity", c);
    for (const auto& c : s.by_stress) emit("stress", c);
    return path;
}

fs::path write_response_rate_csv(const fs::path& dir, const ResponseStats& s) {
    const auto path = dir / "fig8_response_rate.csv";
    auto out = open_csv(path);
    out << "hour,subjects,queries,responses,rate\n";
    for (const auto& h : s.by_hour) {
        out << h.hour << ',' << h.subjects << ',' << h.queries << ',' << h.responses << ','
            << h.rate << '\n';
    }
    return path;
}

json to_json(const std::vector<CoveragePoint>& curve) {
    json a = json::array();
    for (const auto& p : curve) a.push_back({{"labels", p.labels}, {"F", p.f}});
    return a;
}

json to_json(const TemporalReport& r) {
    json profiles = json::array();
    for (const auto& p : r.profiles) {
        json bins = json::array();
        for (const auto& b : p.bins) {
            bins.push_back({{"gap_min", b.gap_min},
                            {"pairs", b.pairs},
                            {"mean_distance", b.mean_distance},
                            {"low_confidence", b.low_confidence}});
        }
        profiles.push_back({{"subject_id", p.subject_id},
                            {"group_by", to_string(p.group_by)},
                            {"group", p.group},
                            {"bins", bins}});
    }
    return {{"profiles", profiles}, {"skipped", r.skipped}};
}

json to_json(const QualityReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        json idx = json::object();
        for (std::size_t k = 0; k < 5; ++k) {
            const auto& f = row.index[k];
            idx[std::string(kQualityIndexNames[k])] = {
                {"min", f.min}, {"q1", f.q1}, {"median", f.median}, {"q3", f.q3}, {"max", f.max}};
        }
        rows.push_back(
            {{"activity", activity::to_string(row.label)}, {"count", row.count}, {"indices", idx}});
    }
    json omitted = json::array();
    for (const auto& [label, n] : r.omitted) {
        omitted.push_back({{"activity", activity::to_string(label)}, {"count", n}});
    }
    return {{"rows", rows}, {"omitted", omitted}};
}

json to_json(const ResponseStats& s) {
    auto cdf = [](const Cdf& c) {
        return json{{"group", c.group},
                    {"answered", c.answered},
                    {"total", c.total},
                    {"median_s", c.median_s},
                    {"times_s", c.times_s},
                    {"cdf", c.probability}};
    };
    json acts = json::array(), stress = json::array(), hours = json::array();
    for (const auto& c : s.by_activity) acts.push_back(cdf(c));
    for (const auto& c : s.by_stress) stress.push_back(cdf(c));
    for (const auto& h : s.by_hour) {
        hours.push_back({{"hour", h.hour},
                         {"subjects", h.subjects},
                         {"queries", h.queries},
                         {"responses", h.responses},
                         {"rate", h.rate}});
    }
    return {{"all", cdf(s.all)}, {"by_activity", acts}, {"by_stress", stress}, {"by_hour", hours}};
}

}  // namespace pulselabel::analytics
