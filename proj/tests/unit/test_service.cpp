#include "fixtures.hpp"
#include "oracles.hpp"

#include "pulselabel/errors.hpp"
#include "pulselabel/service.hpp"

#include <gtest/gtest.h>

using namespace pulselabel;
using service::ManualClock;
using service::Service;

namespace {

constexpr std::int64_t kMin = 60000;

struct Rig {
    std::shared_ptr<ManualClock> clock = std::make_shared<ManualClock>();
    sim::SubjectProfile profile = sim::make_profile("S01", 21);
    std::unique_ptr<Service> svc;

    explicit Rig(ServiceConfig c = fixture::always_trigger()) {
        svc = std::make_unique<Service>(c, fixture::small_model(), clock);
    }

    service::IngestResult feed(std::size_t slot) {
        auto p = fixture::sit_window(profile, slot);
        clock->set(p.t_end_ms());
        return svc->ingest(p);
    }

    // Feeds slots until a query is dispatched; returns it.
    store::EmaQuery first_query(std::size_t& slot) {
        for (; slot < 100; ++slot) {
            auto r = feed(slot);
            if (r.query) {
                ++slot;
                return *r.query;
            }
        }
        throw std::runtime_error("no query dispatched");
    }
};

service::ResponseInput answer(const store::EmaQuery& q, std::int64_t after_ms, int stress = 1) {
    service::ResponseInput in;
    in.ema_id = q.ema_id;
    in.responded_at_ms = q.dispatched_at_ms + after_ms;
    in.stress = stress;
    in.emotion = Emotion::Happy;
    in.activity = Context::Sit;
    return in;
}

}  // namespace

TEST(SampleIds, StableSortableCrockford) {
    const auto a = service::make_sample_id("S01", 1000);
    EXPECT_EQ(a.size(), 26U);
    EXPECT_EQ(a, service::make_sample_id("S01", 1000));
    EXPECT_NE(a, service::make_sample_id("S02", 1000));
    EXPECT_LT(a, service::make_sample_id("S01", 2000));
    EXPECT_EQ(a.find_first_of("ILOU"), std::string::npos);
    EXPECT_EQ(service::make_ema_id(a), "Q" + a);
}

TEST(Service, RejectsLengthMismatch) {
    Rig rig;
    auto p = fixture::sit_window(rig.profile, 0);
    p.ppg.resize(100);
    p.duration_s = 120.0;
    try {
        rig.svc->ingest(p);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "ppg");
    }
    p = fixture::sit_window(rig.profile, 0);
    p.gyro.pop_back();
    EXPECT_THROW(rig.svc->ingest(p), ValidationError);
    EXPECT_TRUE(rig.svc->snapshot().samples.empty());
}

TEST(Service, DuplicateSampleIsIdempotent) {
    Rig rig;
    const auto a = rig.feed(0);
    const auto b = rig.feed(0);
    EXPECT_FALSE(a.duplicate);
    EXPECT_TRUE(b.duplicate);
    EXPECT_EQ(store::to_json(a.record), store::to_json(b.record));
    EXPECT_EQ(rig.svc->snapshot().samples.size(), 1U);
}

TEST(Service, InitialPhaseThenQueries) {
    Rig rig;
    std::size_t slot = 0;
    const auto q = rig.first_query(slot);
    const auto snap = rig.svc->snapshot();
    std::size_t usable = 0;
    for (const auto& r : snap.samples) usable += r.features.has_value();
    EXPECT_EQ(usable, 11U);  // ten to fit regions, the eleventh triggers
    EXPECT_EQ(q.ema_id, service::make_ema_id(q.sample_id));
    EXPECT_EQ(q.expires_at_ms - q.dispatched_at_ms, 16 * kMin);
}

TEST(Service, AtMostOneOpenQueryAndExpiry) {
    Rig rig;
    std::size_t slot = 0;
    const auto q = rig.first_query(slot);
    // Next window ends 15 minutes later: the first query is still open.
    const auto next = rig.feed(slot);
    ASSERT_TRUE(next.record.decision.trigger);
    EXPECT_TRUE(next.record.suppressed);
    EXPECT_FALSE(next.query.has_value());
    ASSERT_EQ(rig.svc->pending_queries("S01").size(), 1U);
    EXPECT_EQ(rig.svc->query_status(q.ema_id), store::QueryStatus::Open);

    rig.clock->set(q.dispatched_at_ms + 17 * kMin);
    EXPECT_TRUE(rig.svc->pending_queries("S01").empty());
    EXPECT_EQ(rig.svc->query_status(q.ema_id), store::QueryStatus::Expired);
    EXPECT_TRUE(rig.svc->pending_queries("nobody").empty());
}

TEST(Service, ResponseOutcomes) {
    Rig rig;
    std::size_t slot = 0;
    const auto q = rig.first_query(slot);
    EXPECT_THROW(rig.svc->submit_response(answer(q, 0, 7)), ValidationError);
    EXPECT_THROW(rig.svc->submit_response(answer(q, -5000)), ValidationError);

    auto in = answer(q, 3 * kMin);
    in.client_elapsed_ms = 2500;
    const auto ack = rig.svc->submit_response(in);
    EXPECT_EQ(ack.status, "accepted");
    EXPECT_DOUBLE_EQ(ack.response.response_time_s, 180.0);
    EXPECT_EQ(ack.response.client_elapsed_ms, 2500);
    EXPECT_EQ(rig.svc->submit_response(answer(q, 4 * kMin)).status, "duplicate");
    EXPECT_EQ(rig.svc->query_status(q.ema_id), store::QueryStatus::Answered);
    EXPECT_TRUE(rig.svc->pending_queries("S01").empty());
    EXPECT_EQ(rig.svc->engine_snapshot("S01")->labeled().size(), 1U);

    // Answered, so the next trigger dispatches; answer it late.
    const auto q2 = rig.first_query(slot);
    const auto late = rig.svc->submit_response(answer(q2, 20 * kMin));
    EXPECT_EQ(late.status, "stale");
    EXPECT_EQ(rig.svc->engine_snapshot("S01")->labeled().size(), 1U);

    service::ResponseInput ghost;
    ghost.ema_id = "Qmissing";
    EXPECT_THROW(rig.svc->submit_response(ghost), NotFound);
    EXPECT_THROW(rig.svc->query_status("Qmissing"), NotFound);
}

TEST(Service, ResponseBodyValidation) {
    using nlohmann::json;
    EXPECT_NO_THROW(service::response_input_from_json(
        json{{"stress", 2}, {"emotion", "sad"}, {"activity", "walking"}}, "Q1"));
    auto field_of = [](const json& body) {
        try {
            service::response_input_from_json(body, "Q1");
        } catch (const ValidationError& e) {
            return e.field();
        }
        return std::string("none");
    };
    EXPECT_EQ(field_of(json{{"stress", 2.5}, {"emotion", "sad"}, {"activity", "walking"}}), "stress");
    EXPECT_EQ(field_of(json{{"stress", 2}, {"emotion", "bored"}, {"activity", "walking"}}), "emotion");
    EXPECT_EQ(field_of(json{{"stress", 2}, {"emotion", "sad"}}), "activity");
}

TEST(Service, RestartRebuildsIdenticalState) {
    const auto dir = oracle::temp_dir("svc");
    auto cfg = fixture::always_trigger();
    cfg.data_dir = dir;
    cfg.checkpoint_every = 7;
    nlohmann::json before;
    std::size_t slot = 0;
    {
        Rig rig(cfg);
        const auto q = rig.first_query(slot);
        rig.svc->submit_response(answer(q, 2 * kMin));
        for (int i = 0; i < 5; ++i) rig.feed(slot++);
        before = rig.svc->engine_snapshot("S01")->checkpoint();
    }
    Rig again(cfg);
    const auto& rep = again.svc->restore_report();
    EXPECT_EQ(rep.decision_mismatches, 0U);
    EXPECT_EQ(again.svc->engine_snapshot("S01")->checkpoint(), before);

    // A fresh service fed the same stream agrees with the restarted one.
    Rig fresh;
    std::size_t s2 = 0;
    const auto q = fresh.first_query(s2);
    fresh.svc->submit_response(answer(q, 2 * kMin));
    for (int i = 0; i < 5; ++i) fresh.feed(s2++);
    for (int i = 0; i < 6; ++i, ++slot) {
        const auto a = again.feed(slot);
        const auto b = fresh.feed(slot);
        EXPECT_EQ(query::to_json(a.record.decision), query::to_json(b.record.decision));
        EXPECT_EQ(a.record.suppressed, b.record.suppressed);
        EXPECT_EQ(a.query.has_value(), b.query.has_value());
    }
}

TEST(Service, HealthReportsCounts) {
    Rig rig;
    rig.feed(0);
    const auto h = rig.svc->health();
    EXPECT_EQ(h.at("status"), "ok");
    EXPECT_FALSE(h.at("persistent").get<bool>());
}
