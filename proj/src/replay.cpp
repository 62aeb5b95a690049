#include "pulselabel/replay.hpp"

#include "pulselabel/errors.hpp"
#include "pulselabel/json_io.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <limits>
#include <queue>
#include <thread>

namespace pulselabel::replay {

using nlohmann::json;

namespace {

struct Line {
    std::size_t line_no = 0;
    SamplePayload payload;
    json script;
};

struct Due {
    std::int64_t at_ms = 0;
    std::uint64_t order = 0;  // FIFO among equal times
    service::ResponseInput input;
    bool operator>(const Due& o) const {
        return at_ms != o.at_ms ? at_ms > o.at_ms : order > o.order;
    }
};

std::vector<Line> read_dataset(const std::filesystem::path& path, double window_s, bool sort) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset " + path.string());
    std::vector<Line> lines;
    std::string text;
    std::size_t n = 0;
    while (std::getline(in, text)) {
        ++n;
        if (text.empty()) continue;
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ValidationError("line " + std::to_string(n), e.what());
        }
        if (j.contains("format")) continue;  // header
        if (j.value("type", "sample") != "sample") continue;
        if (!j.contains("payload")) throw ValidationError("line " + std::to_string(n), "no payload");
        Line l;
        l.line_no = n;
        try {
            l.payload = io::payload_from_json(j["payload"], window_s);
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(n), e.what());
        }
        l.script = j.value("script", json::object());
        if (!sort && !lines.empty() && l.payload.t_start_ms < lines.back().payload.t_start_ms) {
            throw ValidationError("line " + std::to_string(n),
                                  "t_start_ms goes backwards; pass the sort flag to reorder");
        }
        lines.push_back(std::move(l));
    }
    if (sort) {
        std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
            return a.payload.t_start_ms < b.payload.t_start_ms;
        });
    }
    return lines;
}

}  // namespace

json to_json(const ReplayReport& r) {
    return {{"samples", r.samples},       {"duplicates", r.duplicates}, {"unusable", r.unusable},
            {"triggers", r.triggers},     {"suppressed", r.suppressed}, {"queries", r.queries},
            {"scripted", r.scripted},     {"labels", r.labels},         {"stale", r.stale},
            {"wall_s", r.wall_s}};
}

ReplayReport run(service::Service& svc, service::ManualClock& clock,
                 const std::filesystem::path& dataset, const ReplayOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    const auto lines = read_dataset(dataset, svc.config().window_s, options.sort);

    ReplayReport report;
    std::priority_queue<Due, std::vector<Due>, std::greater<>> due;
    std::uint64_t order = 0;

    auto deliver_until = [&](std::int64_t t_ms) {
        while (!due.empty() && due.top().at_ms <= t_ms) {
            Due d = due.top();
            due.pop();
            clock.set(std::max(clock.now_ms(), d.at_ms));
            const auto ack = svc.submit_response(d.input);
            if (ack.status == "accepted") ++report.labels;
            if (ack.status == "stale") ++report.stale;
        }
    };

    std::optional<std::int64_t> prev_end;
    for (const auto& l : lines) {
        const std::int64_t t_end = l.payload.t_end_ms();
        deliver_until(t_end);
        if (options.speed > 0.0 && prev_end && t_end > *prev_end) {
            std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(
                static_cast<double>(t_end - *prev_end) / options.speed));
        }
        prev_end = t_end;
        clock.set(std::max(clock.now_ms(), t_end));

        const auto result = svc.ingest(l.payload);
        ++report.samples;
        if (result.duplicate) ++report.duplicates;
        if (!result.record.features) ++report.unusable;
        if (result.record.decision.trigger) ++report.triggers;
        if (result.record.suppressed) ++report.suppressed;
        if (result.query) {
            ++report.queries;
            if (l.script.value("respond", false)) {
                ++report.scripted;
                service::ResponseInput in = service::response_input_from_json(
                    {{"stress", l.script.at("stress")},
                     {"emotion", l.script.at("emotion")},
                     {"activity", l.script.at("activity")}},
                    result.query->ema_id);
                const auto at = result.query->dispatched_at_ms +
                                std::llround(l.script.at("latency_s").get<double>() * 1000.0);
                in.responded_at_ms = at;
                due.push({at, order++, std::move(in)});
            }
        }
        if (options.after_sample) options.after_sample(report.samples);
    }
    deliver_until(std::numeric_limits<std::int64_t>::max());
    report.wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

}  // namespace pulselabel::replay
