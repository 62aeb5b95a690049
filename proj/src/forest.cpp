#include "pulselabel/forest.hpp"

#include "pulselabel/errors.hpp"
#include "pulselabel/hashing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace pulselabel::forest {

namespace {

std::size_t bounded(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

struct Builder {
    const Dataset& data;
    std::size_t n_classes;
    const ForestParams& params;
    std::size_t max_features;
    std::mt19937_64 rng;
    DecisionTree tree;

    std::vector<std::uint32_t> histogram(const std::vector<std::size_t>& rows) const {
        std::vector<std::uint32_t> h(n_classes, 0);
        for (auto r : rows) ++h[static_cast<std::size_t>(data.y[r])];
        return h;
    }

    int build(std::vector<std::size_t> rows, int depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes[id].counts = histogram(rows);

        const auto& counts = tree.nodes[id].counts;
        const bool pure = std::count_if(counts.begin(), counts.end(),
                                        [](std::uint32_t c) { return c > 0; }) <= 1;
        if (pure || depth >= params.max_depth ||
            rows.size() < static_cast<std::size_t>(params.min_samples_split)) {
            return id;
        }

        const std::size_t d = data.x.front().size();
        std::vector<std::size_t> features(d);
        std::iota(features.begin(), features.end(), 0);
        for (std::size_t i = 0; i < max_features; ++i) {
            std::swap(features[i], features[i + bounded(rng, d - i)]);
        }

        double best_score = -1.0;
        int best_feature = -1;
        double best_threshold = 0.0;
        std::vector<std::pair<double, int>> col(rows.size());
        std::vector<double> left(n_classes), right(n_classes);
        const double n = static_cast<double>(rows.size());
        for (std::size_t fi = 0; fi < max_features; ++fi) {
            const std::size_t f = features[fi];
            for (std::size_t i = 0; i < rows.size(); ++i) {
                col[i] = {data.x[rows[i]][f], data.y[rows[i]]};
            }
            std::sort(col.begin(), col.end());
            if (col.front().first == col.back().first) continue;

            std::fill(left.begin(), left.end(), 0.0);
            for (std::size_t c = 0; c < n_classes; ++c) right[c] = counts[c];
            double sl = 0.0, sr = 0.0;
            for (double v : right) sr += v * v;
            for (std::size_t i = 0; i + 1 < col.size(); ++i) {
                const auto c = static_cast<std::size_t>(col[i].second);
                sl += 2.0 * left[c] + 1.0;
                sr -= 2.0 * right[c] - 1.0;
                left[c] += 1.0;
                right[c] -= 1.0;
                if (col[i].first == col[i + 1].first) continue;
                const double nl = static_cast<double>(i + 1);
                // Maximizing sum p^2 weighted by side size minimizes Gini.
                const double score = sl / nl + sr / (n - nl);
                if (score > best_score) {
                    best_score = score;
                    best_feature = static_cast<int>(f);
                    const double a = col[i].first, b = col[i + 1].first;
                    double t = a + (b - a) / 2.0;
                    if (!(t < b)) t = a;
                    best_threshold = t;
                }
            }
        }
        if (best_feature < 0) return id;

        std::vector<std::size_t> lrows, rrows;
        for (auto r : rows) {
            (data.x[r][static_cast<std::size_t>(best_feature)] <= best_threshold ? lrows : rrows)
                .push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        const int l = build(std::move(lrows), depth + 1);
        const int r = build(std::move(rrows), depth + 1);
        auto& node = tree.nodes[id];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = l;
        node.right = r;
        return id;
    }
};

std::size_t argmax_lowest(const std::vector<std::uint32_t>& c) {
    return static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
}

}  // namespace

const TreeNode& DecisionTree::leaf_for(const std::vector<double>& x) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold
                                         ? n.left
                                         : n.right);
    }
    return nodes[i];
}

std::vector<std::size_t> ForestModel::votes(const std::vector<double>& x) const {
    if (x.size() != n_features) {
        throw ValidationError("features", "expected " + std::to_string(n_features) +
                                              " values, got " + std::to_string(x.size()));
    }
    std::vector<std::size_t> v(n_classes, 0);
    for (const auto& t : trees) ++v[argmax_lowest(t.leaf_for(x).counts)];
    return v;
}

int ForestModel::predict(const std::vector<double>& x) const {
    const auto v = votes(x);
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::uint64_t ForestModel::digest() const { return fnv1a64(trees_to_json(*this).dump()); }

ForestModel train_forest(const Dataset& data, std::size_t n_classes, const ForestParams& params,
                         std::uint64_t seed, const std::vector<std::string>& class_names) {
    if (params.n_trees < 1) throw ConfigError("n_trees must be at least 1");
    if (params.max_depth < 1) throw ConfigError("max_depth must be at least 1");
    if (params.max_features < 0) throw ConfigError("max_features must be non-negative");
    if (data.x.size() != data.y.size()) throw ConfigError("feature and label counts differ");
    if (data.x.empty()) throw ConfigError("empty training set");
    const std::size_t d = data.x.front().size();
    if (d == 0) throw ConfigError("training rows have no features");
    for (const auto& row : data.x) {
        if (row.size() != d) throw ConfigError("training rows differ in length");
    }

    auto name = [&](std::size_t c) {
        return c < class_names.size() ? class_names[c] : "class " + std::to_string(c);
    };
    std::vector<std::size_t> per_class(n_classes, 0);
    for (int y : data.y) {
        if (y < 0 || static_cast<std::size_t>(y) >= n_classes) {
            throw ConfigError("label " + std::to_string(y) + " out of range");
        }
        ++per_class[static_cast<std::size_t>(y)];
    }
    std::size_t present = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (per_class[c] == 0) continue;
        ++present;
        if (per_class[c] < static_cast<std::size_t>(params.min_samples_per_class)) {
            throw ConfigError("class '" + name(c) + "' has only " + std::to_string(per_class[c]) +
                              " samples (need " + std::to_string(params.min_samples_per_class) +
                              ")");
        }
    }
    if (present < 2) {
        std::string only;
        for (std::size_t c = 0; c < n_classes; ++c) {
            if (per_class[c] > 0) only = name(c);
        }
        throw ConfigError("training data needs at least two classes; only '" + only +
                          "' present");
    }

    ForestModel m;
    m.params = params;
    m.seed = seed;
    m.n_features = d;
    m.n_classes = n_classes;
    const std::size_t max_features =
        params.max_features > 0
            ? std::min<std::size_t>(static_cast<std::size_t>(params.max_features), d)
            : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));

    const std::size_t n = data.x.size();
    for (int t = 0; t < params.n_trees; ++t) {
        Builder b{data, n_classes, params, max_features,
                  std::mt19937_64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(t)))),
                  {}};
        std::vector<std::size_t> rows(n);
        for (auto& r : rows) r = bounded(b.rng, n);
        std::sort(rows.begin(), rows.end());
        b.build(std::move(rows), 0);
        m.trees.push_back(std::move(b.tree));
    }
    return m;
}

nlohmann::json trees_to_json(const ForestModel& m) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : m.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : t.nodes) {
            nodes.push_back({{"feature", n.feature},
                             {"threshold", n.threshold},
                             {"left", n.left},
                             {"right", n.right},
                             {"counts", n.counts}});
        }
        trees.push_back({{"nodes", std::move(nodes)}});
    }
    return trees;
}

void trees_from_json(const nlohmann::json& j, ForestModel& m) {
    m.trees.clear();
    for (const auto& jt : j) {
        DecisionTree t;
        for (const auto& jn : jt.at("nodes")) {
            TreeNode n;
            n.feature = jn.at("feature").get<int>();
            n.threshold = jn.at("threshold").get<double>();
            n.left = jn.at("left").get<int>();
            n.right = jn.at("right").get<int>();
            n.counts = jn.at("counts").get<std::vector<std::uint32_t>>();
            if (n.counts.size() != m.n_classes) throw ConfigError("model: bad class histogram");
            t.nodes.push_back(std::move(n));
        }
        const auto size = static_cast<int>(t.nodes.size());
        if (size == 0) throw ConfigError("model: empty tree");
        for (int i = 0; i < size; ++i) {
            const auto& n = t.nodes[static_cast<std::size_t>(i)];
            // Children always follow their parent, which rules out cycles.
            if (n.feature >= 0 &&
                (n.feature >= static_cast<int>(m.n_features) || n.left <= i || n.right <= i ||
                 n.left >= size || n.right >= size)) {
                throw ConfigError("model: malformed tree node");
            }
        }
        m.trees.push_back(std::move(t));
    }
}

}  // namespace pulselabel::forest
