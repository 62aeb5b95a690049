#include "fixtures.hpp"

#include "pulselabel/http_api.hpp"
#include "pulselabel/json_io.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

using namespace pulselabel;
using nlohmann::json;

namespace {

constexpr std::int64_t kMin = 60000;

class Api : public ::testing::Test {
protected:
    void SetUp() override {
        svc = std::make_unique<service::Service>(fixture::always_trigger(), fixture::small_model(), clock);
        server = std::make_unique<http::ApiServer>(*svc);
        port = server->start("127.0.0.1", 0);
        client = std::make_unique<httplib::Client>("127.0.0.1", port);
    }
    void TearDown() override { server->stop(); }

    httplib::Result post(const std::string& path, const json& body) {
        return client->Post(path, body.dump(), "application/json");
    }

    json post_window(std::size_t slot, int expect_status = 201) {
        auto p = fixture::sit_window(profile, slot);
        clock->set(p.t_end_ms());
        auto res = post("/v1/samples", io::to_json(p));
        EXPECT_TRUE(res);
        EXPECT_EQ(res->status, expect_status) << res->body;
        return json::parse(res->body);
    }

    // Posts windows until one dispatches a query; returns that query.
    json first_query(std::size_t& slot) {
        for (; slot < 60; ++slot) {
            auto body = post_window(slot);
            if (!body.at("query").is_null()) {
                ++slot;
                return body.at("query");
            }
        }
        ADD_FAILURE() << "no query";
        return {};
    }

    std::shared_ptr<service::ManualClock> clock = std::make_shared<service::ManualClock>();
    sim::SubjectProfile profile = sim::make_profile("S01", 21);
    std::unique_ptr<service::Service> svc;
    std::unique_ptr<http::ApiServer> server;
    std::unique_ptr<httplib::Client> client;
    int port = 0;
};

json answer(int stress = 2) {
    return {{"stress", stress}, {"emotion", "neutral"}, {"activity", "sitting"}};
}

}  // namespace

TEST_F(Api, HealthAndCors) {
    auto res = client->Get("/v1/health");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(json::parse(res->body).at("status"), "ok");
    EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
    auto pre = client->Options("/v1/samples");
    ASSERT_TRUE(pre);
    EXPECT_EQ(pre->status, 204);
}

TEST_F(Api, IngestAndDuplicate) {
    const auto a = post_window(0, 201);
    EXPECT_EQ(a.at("subject_id"), "S01");
    EXPECT_EQ(a.at("sample_id").get<std::string>().size(), 26U);
    EXPECT_FALSE(a.at("duplicate").get<bool>());
    const auto b = post_window(0, 200);
    EXPECT_TRUE(b.at("duplicate").get<bool>());
    EXPECT_EQ(a.at("sample_id"), b.at("sample_id"));
}

TEST_F(Api, BadInputNamesTheField) {
    auto body = io::to_json(fixture::sit_window(profile, 0));
    body["ppg"] = json::array({1.0, 2.0});
    body["duration_s"] = 120.0;
    auto res = post("/v1/samples", body);
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(json::parse(res->body).at("field"), "ppg");

    body = io::to_json(fixture::sit_window(profile, 0));
    body.erase("subject_id");
    res = post("/v1/samples", body);
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(json::parse(res->body).at("field"), "subject_id");

    res = client->Post("/v1/samples", "{oops", "application/json");
    EXPECT_EQ(res->status, 400);
}

TEST_F(Api, PendingAnswerAndStatus) {
    std::size_t slot = 0;
    const auto q = first_query(slot);
    const std::string id = q.at("ema_id");

    auto res = client->Get("/v1/subjects/S01/ema/pending");
    ASSERT_TRUE(res);
    auto pending = json::parse(res->body);
    ASSERT_EQ(pending.at("queries").size(), 1U);
    const auto& pq = pending["queries"][0];
    EXPECT_EQ(pq.at("ema_id"), id);
    EXPECT_DOUBLE_EQ(pq.at("seconds_remaining").get<double>(), 960.0);
    EXPECT_EQ(pq["questions"]["stress"].size(), 5U);
    EXPECT_EQ(pq["questions"]["stress"][4]["label"], "extremely");
    EXPECT_EQ(json::parse(client->Get("/v1/ema/" + id)->body).at("status"), "open");

    res = post("/v1/ema/" + id + "/response", answer(9));
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(json::parse(res->body).at("field"), "stress");

    clock->advance(3 * kMin);
    auto body = answer();
    body["client_elapsed_ms"] = 1800;
    res = post("/v1/ema/" + id + "/response", body);
    ASSERT_EQ(res->status, 200) << res->body;
    auto ack = json::parse(res->body);
    EXPECT_EQ(ack.at("status"), "accepted");
    EXPECT_DOUBLE_EQ(ack.at("response_time_s").get<double>(), 180.0);
    EXPECT_EQ(ack.at("client_elapsed_ms"), 1800);

    res = post("/v1/ema/" + id + "/response", answer());
    EXPECT_EQ(json::parse(res->body).at("status"), "duplicate");
    EXPECT_EQ(json::parse(client->Get("/v1/ema/" + id)->body).at("status"), "answered");
    EXPECT_TRUE(json::parse(client->Get("/v1/subjects/S01/ema/pending")->body)["queries"].empty());
}

TEST_F(Api, LateAnswerIsStaleAndExpiredDisappears) {
    std::size_t slot = 0;
    const auto q = first_query(slot);
    const std::string id = q.at("ema_id");
    clock->advance(17 * kMin);
    EXPECT_TRUE(json::parse(client->Get("/v1/subjects/S01/ema/pending")->body)["queries"].empty());
    EXPECT_EQ(json::parse(client->Get("/v1/ema/" + id)->body).at("status"), "expired");
    auto res = post("/v1/ema/" + id + "/response", answer());
    ASSERT_EQ(res->status, 200);
    EXPECT_EQ(json::parse(res->body).at("status"), "stale");
}

TEST_F(Api, UnknownIdsAre404) {
    EXPECT_EQ(client->Get("/v1/ema/Qnope")->status, 404);
    EXPECT_EQ(post("/v1/ema/Qnope/response", answer())->status, 404);
    EXPECT_EQ(client->Get("/v1/analytics/bogus")->status, 404);
    EXPECT_EQ(client->Get("/v1/analytics/coverage?subject=S77")->status, 404);
}

TEST_F(Api, AnalyticsEndpoints) {
    std::size_t slot = 0;
    for (int round = 0; round < 3; ++round) {
        const auto q = first_query(slot);
        clock->advance(2 * kMin);
        post("/v1/ema/" + q.at("ema_id").get<std::string>() + "/response", answer(round));
    }
    auto res = client->Get("/v1/analytics/coverage?subject=S01&D=1.5");
    ASSERT_EQ(res->status, 200) << res->body;
    const auto cov = json::parse(res->body);
    ASSERT_EQ(cov.at("curve").size(), 3U);
    EXPECT_EQ(client->Get("/v1/analytics/coverage")->status, 400);
    EXPECT_EQ(client->Get("/v1/analytics/coverage?subject=S01&D=abc")->status, 400);

    res = client->Get("/v1/analytics/temporal?subject=S01&group_by=all");
    EXPECT_EQ(res->status, 200) << res->body;
    EXPECT_EQ(client->Get("/v1/analytics/temporal?subject=S01&group_by=mood")->status, 400);
    EXPECT_EQ(client->Get("/v1/analytics/quality?min_count=1")->status, 200);
    res = client->Get("/v1/analytics/response");
    ASSERT_EQ(res->status, 200);
    EXPECT_TRUE(json::parse(res->body).contains("by_hour"));
}
