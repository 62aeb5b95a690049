#include "pulselabel/kmeans.hpp"

#include "pulselabel/errors.hpp"
#include "pulselabel/hashing.hpp"
#include "pulselabel/stats.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <string>

namespace pulselabel::query {

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

double squared_distance(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::size_t nearest(const std::vector<Point>& centroids, const Point& x) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < centroids.size(); ++k) {
        const double d = squared_distance(centroids[k], x);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

KMeansResult kmeans(const std::vector<Point>& points, std::size_t k, std::uint64_t seed,
                    int max_iter) {
    if (k < 1) throw ConfigError("k-means needs k >= 1");
    if (k > points.size()) {
        throw ConfigError("k-means with k = " + std::to_string(k) + " over only " +
                          std::to_string(points.size()) + " points");
    }
    const std::size_t n = points.size();
    std::mt19937_64 rng(splitmix64(seed ^ 0x6b6d65616e73ULL));

    KMeansResult r;
    r.centroids.push_back(points[static_cast<std::size_t>(rng() % n)]);
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points[i], r.centroids[0]);
    while (r.centroids.size() < k) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t pick = 0;
        if (total > 0.0) {
            const double target = unit(rng) * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > target && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            // All remaining points coincide with a centroid.
            pick = static_cast<std::size_t>(rng() % n);
        }
        r.centroids.push_back(points[pick]);
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(points[i], r.centroids.back()));
        }
    }

    const std::size_t dim = points.front().size();
    r.assignment.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) r.assignment[i] = nearest(r.centroids, points[i]);
    for (int it = 0; it < max_iter; ++it) {
        r.iterations = it + 1;
        std::vector<Point> sums(k, Point(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = r.assignment[i];
            ++counts[c];
            for (std::size_t d = 0; d < dim; ++d) sums[c][d] += points[i][d];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t d = 0; d < dim; ++d) {
                r.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
            }
        }
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = nearest(r.centroids, points[i]);
            if (c != r.assignment[i]) {
                r.assignment[i] = c;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return r;
}

Standardizer Standardizer::fit(const std::vector<Point>& rows) {
    if (rows.empty()) throw ConfigError("cannot standardize an empty set");
    const std::size_t dim = rows.front().size();
    Standardizer s;
    s.mean.assign(dim, 0.0);
    s.std.assign(dim, 1.0);
    std::vector<double> col(rows.size());
    for (std::size_t d = 0; d < dim; ++d) {
        for (std::size_t i = 0; i < rows.size(); ++i) col[i] = rows[i][d];
        s.mean[d] = stats::mean(col);
        const double sd = stats::stddev(col);
        s.std[d] = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

Point Standardizer::apply(const Point& x) const {
    Point z(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) z[d] = (x[d] - mean[d]) / std[d];
    return z;
}

}  // namespace pulselabel::query
