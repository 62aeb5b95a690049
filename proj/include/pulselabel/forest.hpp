#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

// Random forest of CART trees (Gini impurity, bootstrap rows, per-node
// feature subsampling). Classes are dense integers 0..n_classes-1.
namespace pulselabel::forest {

struct ForestParams {
    int n_trees = 100;
    int max_depth = 12;
    int max_features = 0;  // per split; 0 = ceil(sqrt(d))
    int min_samples_split = 2;
    int min_samples_per_class = 10;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // go left when x[feature] <= threshold
    int left = -1;
    int right = -1;
    std::vector<std::uint32_t> counts;  // training rows reaching this node, per class
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    const TreeNode& leaf_for(const std::vector<double>& x) const;
};

struct Dataset {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
};

struct ForestModel {
    ForestParams params;
    std::uint64_t seed = 0;
    std::size_t n_features = 0;
    std::size_t n_classes = 0;
    std::vector<DecisionTree> trees;

    // One vote per tree: the leaf's majority class, lowest index on ties.
    std::vector<std::size_t> votes(const std::vector<double>& x) const;
    // Plurality of votes, lowest class index on ties.
    int predict(const std::vector<double>& x) const;
    // FNV-1a over the serialized trees; equal digests mean equal models.
    std::uint64_t digest() const;
};

// Throws ConfigError on bad parameters or a degenerate dataset (fewer than
// two classes, or a present class with fewer than min_samples_per_class rows;
// the message names the class). `class_names` is used for messages only.
ForestModel train_forest(const Dataset& data, std::size_t n_classes, const ForestParams& params,
                         std::uint64_t seed, const std::vector<std::string>& class_names = {});

nlohmann::json trees_to_json(const ForestModel& m);
void trees_from_json(const nlohmann::json& j, ForestModel& m);

}  // namespace pulselabel::forest
