#include "oracles.hpp"

#include "pulselabel/store.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace pulselabel;
namespace fs = std::filesystem;

namespace {

store::SampleRecord rec(const std::string& id) {
    store::SampleRecord r;
    r.sample_id = id;
    r.subject_id = "S01";
    r.t_start_ms = 1000;
    r.t_end_ms = 121000;
    r.fs = 20.0;
    r.n_samples = 2400;
    r.failure = "too few peaks";
    r.decision.sample_id = id;
    r.decision.reason = query::DecisionReason::QualityTooLow;
    return r;
}

}  // namespace

TEST(Store, InMemoryAssignsGlobalSequence) {
    store::Store s;
    auto a = rec("a");
    store::EmaQuery q{0, "Qa", "S01", "a", 5, 10};
    auto b = rec("b");
    s.append(a);
    s.append(q);
    s.append(b);
    EXPECT_EQ(a.seq, 1U);
    EXPECT_EQ(q.seq, 2U);
    EXPECT_EQ(b.seq, 3U);
    EXPECT_FALSE(s.persistent());
    EXPECT_THROW(s.append(a), std::logic_error);
    EXPECT_TRUE(s.find_query("Qa").has_value());
    EXPECT_FALSE(s.find_response("Qa").has_value());
}

TEST(Store, ReloadsEveryCollection) {
    const auto dir = oracle::temp_dir("store");
    {
        store::Store s(dir);
        auto a = rec("a");
        s.append(a);
        store::EmaQuery q{0, "Qa", "S01", "a", 121000, 121000 + 960000};
        s.append(q);
        store::EmaResponse r;
        r.ema_id = "Qa";
        r.subject_id = "S01";
        r.responded_at_ms = 200000;
        r.stress = 3;
        r.emotion = Emotion::Mad;
        r.activity = Context::Walk;
        r.response_time_s = 79.0;
        r.client_elapsed_ms = 4200;
        r.outcome = "accepted";
        s.append(r);
    }
    store::Store s(dir);
    EXPECT_EQ(s.last_seq(), 3U);
    const auto snap = s.snapshot();
    ASSERT_EQ(snap.samples.size(), 1U);
    auto expected = rec("a");
    expected.seq = 1;
    EXPECT_EQ(store::to_json(snap.samples[0]), store::to_json(expected));
    ASSERT_EQ(snap.responses.size(), 1U);
    EXPECT_EQ(snap.responses[0].client_elapsed_ms, 4200);
    EXPECT_EQ(snap.responses[0].emotion, Emotion::Mad);
    EXPECT_EQ(snap.subjects(), std::vector<std::string>{"S01"});
}

TEST(Store, TornTailIsDiscarded) {
    const auto dir = oracle::temp_dir("torn");
    {
        store::Store s(dir);
        auto a = rec("a");
        s.append(a);
    }
    std::ofstream(fs::path(dir) / "samples.jsonl", std::ios::app) << R"({"seq": 2, "sample_id": "b)";
    store::Store s(dir);
    EXPECT_EQ(s.repaired_lines(), 1U);
    EXPECT_EQ(s.snapshot().samples.size(), 1U);
    auto b = rec("b");
    s.append(b);
    store::Store again(dir);
    EXPECT_EQ(again.snapshot().samples.size(), 2U);
    EXPECT_EQ(again.repaired_lines(), 0U);
}

TEST(Store, CheckpointsAreWholeFiles) {
    const auto dir = oracle::temp_dir("ckpt");
    store::Store s(dir);
    s.write_checkpoint("S/1", {{"last_seq", 4}, {"engine", {{"subject_id", "S/1"}}}});
    s.write_checkpoint("S/1", {{"last_seq", 9}, {"engine", {{"subject_id", "S/1"}}}});
    const auto c = s.read_checkpoints();
    ASSERT_EQ(c.size(), 1U);
    EXPECT_EQ(c.at("S/1").at("last_seq"), 9);
    for (const auto& e : fs::directory_iterator(fs::path(dir) / "checkpoints")) {
        EXPECT_NE(e.path().extension(), ".tmp");
    }
}
