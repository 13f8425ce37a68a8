#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "ndtsel/datahub.hpp"

namespace ndtsel {

/// Reference to a child: either an internal split node or a leaf.
struct NodeRef {
    bool is_leaf = true;
    std::size_t index = 0;

    friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

/// Axis-aligned split. Instances with x[feature] <= threshold go left.
struct SplitNode {
    std::size_t feature = 0;
    double threshold = 0.0;
    NodeRef left;
    NodeRef right;
};

struct Leaf {
    std::vector<std::size_t> class_counts;
    std::size_t path_length = 0;  // internal nodes between the root and this leaf
    int majority_class = 0;

    std::size_t total() const;
};

/// Full binary tree: internal nodes are numbered in preorder, leaves left to
/// right, so there are always leaves.size() - 1 internal nodes.
struct DecisionTree {
    std::vector<SplitNode> nodes;
    std::vector<Leaf> leaves;
    NodeRef root;
    std::size_t dimension = 0;
    std::size_t class_count = 0;
    std::size_t training_size = 0;

    std::size_t leaf_count() const { return leaves.size(); }
    std::size_t internal_count() const { return nodes.size(); }
    std::size_t depth() const;
};

struct TreeConfig {
    std::size_t max_depth = 4;
    std::size_t min_leaf = 1;
};

/// Greedy CART with Gini impurity. Candidate thresholds are midpoints between
/// consecutive distinct values; equal-impurity candidates resolve to the lowest
/// feature index, then the lowest threshold.
DecisionTree fit_tree(const Dataset& data, std::span<const std::size_t> rows, const TreeConfig& config);
DecisionTree fit_tree(const Dataset& data, const TreeConfig& config);

struct TreePrediction {
    int label = 0;
    std::size_t leaf = 0;
};

TreePrediction predict_tree(const DecisionTree& tree, std::span<const double> x);
std::vector<int> predict_tree(const DecisionTree& tree, const Matrix& x, std::span<const std::size_t> rows);

enum class Direction { left, right };

struct PathStep {
    std::size_t node = 0;
    Direction direction = Direction::left;

    friend bool operator==(const PathStep&, const PathStep&) = default;
};

struct LeafPath {
    std::size_t leaf = 0;
    std::vector<PathStep> steps;
};

/// One path per leaf, indexed by leaf id.
std::vector<LeafPath> enumerate_paths(const DecisionTree& tree);

/// Stratified k-fold CV over candidate depths; ties go to the smallest depth.
std::size_t select_depth_cv(const Dataset& dataset, std::vector<std::size_t> depth_grid, std::size_t folds,
                            std::uint64_t seed, std::size_t min_leaf = 1);

nlohmann::json to_json(const DecisionTree& tree);

}  // namespace ndtsel
