#pragma once

#include <cstdint>
#include <vector>

namespace pulselabel::query {

using Point = std::vector<double>;

double squared_distance(const Point& a, const Point& b);

// Index of the closest centroid; the lowest index wins ties.
std::size_t nearest(const std::vector<Point>& centroids, const Point& x);

struct KMeansResult {
    std::vector<Point> centroids;
    std::vector<std::size_t> assignment;
    int iterations = 0;
};

// k-means++ seeding followed by at most `max_iter` Lloyd steps. A cluster that
// empties keeps its previous centroid. Throws ConfigError if k < 1 or k
// exceeds the number of points.
KMeansResult kmeans(const std::vector<Point>& points, std::size_t k, std::uint64_t seed,
                    int max_iter = 25);

// Per-feature z-scoring. A feature with zero spread gets std = 1.
struct Standardizer {
    Point mean;
    Point std;

    static Standardizer fit(const std::vector<Point>& rows);
    Point apply(const Point& x) const;
    bool fitted() const { return !mean.empty(); }
};

}  // namespace pulselabel::query
