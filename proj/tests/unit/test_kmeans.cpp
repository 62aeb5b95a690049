#include "pulselabel/errors.hpp"
#include "pulselabel/kmeans.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace pulselabel;
using query::Point;

TEST(Nearest, LowestIndexWinsTies) {
    const std::vector<Point> c{{1.0, 0.0}, {-1.0, 0.0}, {0.0, 5.0}};
    EXPECT_EQ(query::nearest(c, {0.0, 0.0}), 0U);
    EXPECT_EQ(query::nearest(c, {-0.9, 0.1}), 1U);
    EXPECT_EQ(query::nearest(c, {0.0, 4.0}), 2U);
    EXPECT_DOUBLE_EQ(query::squared_distance({1, 2}, {4, 6}), 25.0);
}

TEST(Standardizer, ZeroSpreadFeatureKeepsUnitStd) {
    const auto s = query::Standardizer::fit({{1.0, 7.0}, {3.0, 7.0}, {5.0, 7.0}});
    EXPECT_DOUBLE_EQ(s.mean[0], 3.0);
    EXPECT_NEAR(s.std[0], std::sqrt(8.0 / 3.0), 1e-12);  // population
    EXPECT_DOUBLE_EQ(s.std[1], 1.0);
    const auto z = s.apply({3.0, 9.0});
    EXPECT_DOUBLE_EQ(z[0], 0.0);
    EXPECT_DOUBLE_EQ(z[1], 2.0);
}

TEST(KMeans, RecoversSeparatedClusters) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 0.3);
    const std::vector<Point> centers{{0, 0}, {10, 0}, {0, 10}, {10, 10}};
    std::vector<Point> pts;
    std::vector<std::size_t> truth;
    for (std::size_t c = 0; c < centers.size(); ++c) {
        for (int i = 0; i < 50; ++i) {
            pts.push_back({centers[c][0] + g(rng), centers[c][1] + g(rng)});
            truth.push_back(c);
        }
    }
    const auto r = query::kmeans(pts, 4, 11);
    ASSERT_EQ(r.centroids.size(), 4U);
    // Each true cluster maps to a single fitted cluster, all distinct.
    std::set<std::size_t> used;
    for (std::size_t c = 0; c < 4; ++c) {
        const auto a = r.assignment[c * 50];
        for (std::size_t i = c * 50; i < (c + 1) * 50; ++i) EXPECT_EQ(r.assignment[i], a);
        used.insert(a);
        EXPECT_LT(query::squared_distance(r.centroids[a], centers[c]), 0.05);
    }
    EXPECT_EQ(used.size(), 4U);
}

TEST(KMeans, DeterministicPerSeed) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<Point> pts(120, Point(3));
    for (auto& p : pts)
        for (double& v : p) v = u(rng);
    const auto a = query::kmeans(pts, 5, 2);
    const auto b = query::kmeans(pts, 5, 2);
    EXPECT_EQ(a.assignment, b.assignment);
    EXPECT_EQ(a.centroids, b.centroids);
}

TEST(KMeans, RejectsBadK) {
    const std::vector<Point> pts{{0.0}, {1.0}};
    EXPECT_THROW(query::kmeans(pts, 0, 1), ConfigError);
    EXPECT_THROW(query::kmeans(pts, 3, 1), ConfigError);
}
