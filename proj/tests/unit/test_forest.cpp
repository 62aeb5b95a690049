#include "pulselabel/errors.hpp"
#include "pulselabel/forest.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pulselabel;
using forest::Dataset;
using forest::ForestParams;

namespace {

// Two informative features among six; class = quadrant of (x0, x3).
Dataset quadrants(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Dataset d;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(6);
        for (double& v : x) v = u(rng);
        d.y.push_back((x[0] > 0 ? 1 : 0) + (x[3] > 0 ? 2 : 0));
        d.x.push_back(std::move(x));
    }
    return d;
}

double accuracy(const forest::ForestModel& m, const Dataset& d) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < d.x.size(); ++i) ok += m.predict(d.x[i]) == d.y[i];
    return static_cast<double>(ok) / static_cast<double>(d.x.size());
}

}  // namespace

TEST(Forest, LearnsAxisAlignedQuadrants) {
    ForestParams p;
    p.n_trees = 30;
    const auto m = forest::train_forest(quadrants(600, 1), 4, p, 7);
    EXPECT_GT(accuracy(m, quadrants(400, 2)), 0.93);
    EXPECT_EQ(m.trees.size(), 30U);
    EXPECT_EQ(m.n_features, 6U);
}

TEST(Forest, SameSeedSameModel) {
    ForestParams p;
    p.n_trees = 10;
    const auto d = quadrants(300, 3);
    const auto a = forest::train_forest(d, 4, p, 5);
    const auto b = forest::train_forest(d, 4, p, 5);
    const auto c = forest::train_forest(d, 4, p, 6);
    EXPECT_EQ(a.digest(), b.digest());
    EXPECT_NE(a.digest(), c.digest());
}

TEST(Forest, SingleTreeFitsSeparableDataPerfectly) {
    Dataset d;
    for (int i = 0; i < 40; ++i) {
        d.x.push_back({static_cast<double>(i)});
        d.y.push_back(i < 20 ? 0 : 1);
    }
    ForestParams p;
    p.n_trees = 1;
    p.max_features = 1;
    const auto m = forest::train_forest(d, 2, p, 1);
    const auto& root = m.trees[0].nodes[0];
    ASSERT_EQ(root.feature, 0);
    // Midpoint between the closest opposite-class neighbours present in the bootstrap.
    EXPECT_GE(root.threshold, 18.5);
    EXPECT_LE(root.threshold, 20.5);
    EXPECT_EQ(m.predict({0.0}), 0);
    EXPECT_EQ(m.predict({39.0}), 1);
}

TEST(Forest, VoteTiesGoToLowestClass) {
    forest::ForestModel m;
    m.n_classes = 2;
    m.n_features = 1;
    for (int c : {1, 0}) {
        forest::DecisionTree t;
        forest::TreeNode leaf;
        leaf.counts = {c == 0 ? 5u : 1u, c == 1 ? 5u : 1u};
        t.nodes.push_back(leaf);
        m.trees.push_back(t);
    }
    EXPECT_EQ(m.votes({0.0}), (std::vector<std::size_t>{1, 1}));
    EXPECT_EQ(m.predict({0.0}), 0);
}

TEST(Forest, RejectsDegenerateData) {
    Dataset one;
    for (int i = 0; i < 30; ++i) {
        one.x.push_back({1.0 * i});
        one.y.push_back(0);
    }
    try {
        forest::train_forest(one, 2, {}, 1, {"sit", "stand"});
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("sit"), std::string::npos);
    }
    Dataset thin = one;
    for (int i = 0; i < 3; ++i) {
        thin.x.push_back({100.0 + i});
        thin.y.push_back(1);
    }
    try {
        forest::train_forest(thin, 2, {}, 1, {"sit", "stand"});
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("stand"), std::string::npos);
    }
}

TEST(Forest, JsonRoundTripPreservesDigestAndPredictions) {
    ForestParams p;
    p.n_trees = 8;
    const auto d = quadrants(200, 9);
    const auto m = forest::train_forest(d, 4, p, 3);
    forest::ForestModel back;
    back.params = m.params;
    back.n_features = m.n_features;
    back.n_classes = m.n_classes;
    forest::trees_from_json(forest::trees_to_json(m), back);
    EXPECT_EQ(back.digest(), m.digest());
    for (const auto& x : d.x) EXPECT_EQ(back.predict(x), m.predict(x));
}

TEST(Forest, JsonRejectsBrokenLinks) {
    nlohmann::json bad = nlohmann::json::array();
    nlohmann::json node{{"feature", 0}, {"threshold", 0.0}, {"left", 0}, {"right", 5}, {"counts", {1, 1}}};
    bad.push_back({{"nodes", nlohmann::json::array({node})}});
    forest::ForestModel m;
    m.n_classes = 2;
    m.n_features = 1;
    EXPECT_ANY_THROW(forest::trees_from_json(bad, m));
}
