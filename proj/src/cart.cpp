#include "ndtsel/cart.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "ndtsel/error.hpp"
#include "ndtsel/metrics.hpp"
#include "ndtsel/random.hpp"

namespace ndtsel {

std::size_t Leaf::total() const { return std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0}); }

std::size_t DecisionTree::depth() const {
    std::size_t deepest = 0;
    for (const auto& leaf : leaves) deepest = std::max(deepest, leaf.path_length);
    return deepest;
}

namespace {

// n * gini(counts) = n - sum(c^2)/n
double weighted_gini(const std::vector<std::size_t>& counts, std::size_t n) {
    if (n == 0) return 0.0;
    double sq = 0.0;
    for (std::size_t c : counts) sq += static_cast<double>(c) * static_cast<double>(c);
    return static_cast<double>(n) - sq / static_cast<double>(n);
}

int majority(const std::vector<std::size_t>& counts) {
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

class TreeBuilder {
public:
    TreeBuilder(const Dataset& data, const TreeConfig& config) : data_(data), config_(config) {
        tree_.dimension = data.dimension();
        tree_.class_count = data.class_count();
    }

    DecisionTree build(std::vector<std::size_t> rows) {
        tree_.training_size = rows.size();
        tree_.root = grow(rows, 0);
        return std::move(tree_);
    }

private:
    struct Candidate {
        bool found = false;
        std::size_t feature = 0;
        double threshold = 0.0;
        double score = 0.0;
    };

    std::vector<std::size_t> count_classes(const std::vector<std::size_t>& rows) const {
        std::vector<std::size_t> counts(tree_.class_count, 0);
        for (std::size_t r : rows) ++counts[static_cast<std::size_t>(data_.labels[r])];
        return counts;
    }

    Candidate best_split(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& counts) const {
        const std::size_t n = rows.size();
        const double tolerance = 1e-12 * static_cast<double>(n);
        Candidate best;
        best.score = weighted_gini(counts, n) - tolerance;  // must strictly improve on the parent

        std::vector<std::size_t> order(rows);
        std::vector<std::size_t> left(tree_.class_count);
        std::vector<std::size_t> right(tree_.class_count);
        for (std::size_t f = 0; f < tree_.dimension; ++f) {
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                const double va = data_.features(a, f);
                const double vb = data_.features(b, f);
                return va < vb || (va == vb && a < b);
            });
            std::fill(left.begin(), left.end(), 0);
            right = counts;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const auto y = static_cast<std::size_t>(data_.labels[order[i]]);
                ++left[y];
                --right[y];
                const double lo = data_.features(order[i], f);
                const double hi = data_.features(order[i + 1], f);
                if (!(lo < hi)) continue;
                const std::size_t n_left = i + 1;
                const std::size_t n_right = n - n_left;
                if (n_left < config_.min_leaf || n_right < config_.min_leaf) continue;
                const double score = weighted_gini(left, n_left) + weighted_gini(right, n_right);
                if (score < best.score - (best.found ? tolerance : 0.0)) {
                    double threshold = lo + (hi - lo) / 2.0;
                    if (!(threshold < hi)) threshold = lo;
                    best = {true, f, threshold, score};
                }
            }
        }
        return best;
    }

    NodeRef make_leaf(const std::vector<std::size_t>& counts, std::size_t depth) {
        tree_.leaves.push_back(Leaf{counts, depth, majority(counts)});
        return NodeRef{true, tree_.leaves.size() - 1};
    }

    NodeRef grow(const std::vector<std::size_t>& rows, std::size_t depth) {
        const auto counts = count_classes(rows);
        if (depth >= config_.max_depth || rows.size() < 2 * std::max<std::size_t>(config_.min_leaf, 1)) {
            return make_leaf(counts, depth);
        }
        const Candidate split = best_split(rows, counts);
        if (!split.found) return make_leaf(counts, depth);

        const std::size_t id = tree_.nodes.size();
        tree_.nodes.push_back(SplitNode{split.feature, split.threshold, {}, {}});
        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        for (std::size_t r : rows) {
            (data_.features(r, split.feature) <= split.threshold ? left_rows : right_rows).push_back(r);
        }
        const NodeRef left = grow(left_rows, depth + 1);
        const NodeRef right = grow(right_rows, depth + 1);
        tree_.nodes[id].left = left;
        tree_.nodes[id].right = right;
        return NodeRef{false, id};
    }

    const Dataset& data_;
    TreeConfig config_;
    DecisionTree tree_;
};

}  // namespace

DecisionTree fit_tree(const Dataset& data, std::span<const std::size_t> rows, const TreeConfig& config) {
    if (rows.empty()) throw Error("fit_tree: empty training set");
    if (config.max_depth < 1) throw Error("fit_tree: max_depth must be >= 1");
    return TreeBuilder(data, config).build(std::vector<std::size_t>(rows.begin(), rows.end()));
}

DecisionTree fit_tree(const Dataset& data, const TreeConfig& config) {
    std::vector<std::size_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), 0);
    return fit_tree(data, rows, config);
}

TreePrediction predict_tree(const DecisionTree& tree, std::span<const double> x) {
    if (x.size() != tree.dimension) throw Error("predict_tree: dimension mismatch");
    NodeRef at = tree.root;
    while (!at.is_leaf) {
        const SplitNode& node = tree.nodes[at.index];
        at = x[node.feature] <= node.threshold ? node.left : node.right;
    }
    return {tree.leaves[at.index].majority_class, at.index};
}

std::vector<int> predict_tree(const DecisionTree& tree, const Matrix& x, std::span<const std::size_t> rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(predict_tree(tree, x.row(r)).label);
    return out;
}

std::vector<LeafPath> enumerate_paths(const DecisionTree& tree) {
    std::vector<LeafPath> paths(tree.leaf_count());
    std::vector<PathStep> trail;
    std::function<void(NodeRef)> walk = [&](NodeRef at) {
        if (at.is_leaf) {
            paths[at.index] = LeafPath{at.index, trail};
            return;
        }
        trail.push_back({at.index, Direction::left});
        walk(tree.nodes[at.index].left);
        trail.back().direction = Direction::right;
        walk(tree.nodes[at.index].right);
        trail.pop_back();
    };
    walk(tree.root);
    return paths;
}

std::size_t select_depth_cv(const Dataset& dataset, std::vector<std::size_t> depth_grid, std::size_t folds,
                            std::uint64_t seed, std::size_t min_leaf) {
    if (depth_grid.empty()) throw Error("select_depth_cv: depth grid is empty");
    if (folds < 2) throw Error("select_depth_cv: need at least 2 folds");
    const auto sizes = dataset.class_counts();
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        if (sizes[c] < folds) throw Error("select_depth_cv: class '" + dataset.class_names[c] + "' has fewer instances than folds");
    }
    std::sort(depth_grid.begin(), depth_grid.end());
    depth_grid.erase(std::unique(depth_grid.begin(), depth_grid.end()), depth_grid.end());

    // Stratified fold assignment: shuffle within class, deal round-robin with a
    // running cursor so fold sizes stay balanced across classes.
    std::vector<std::vector<std::size_t>> members(dataset.class_count());
    for (std::size_t i = 0; i < dataset.size(); ++i) members[static_cast<std::size_t>(dataset.labels[i])].push_back(i);
    std::vector<std::size_t> fold_of(dataset.size());
    Rng rng(seed);
    std::size_t cursor = 0;
    for (auto& group : members) {
        rng.shuffle(std::span<std::size_t>(group));
        for (std::size_t r : group) fold_of[r] = cursor++ % folds;
    }

    std::vector<std::vector<std::size_t>> train(folds);
    std::vector<std::vector<std::size_t>> held_out(folds);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (std::size_t k = 0; k < folds; ++k) (fold_of[i] == k ? held_out[k] : train[k]).push_back(i);
    }
    std::vector<int> truth;

    std::size_t best_depth = depth_grid.front();
    double best_score = -1.0;
    for (std::size_t depth : depth_grid) {
        double total = 0.0;
        for (std::size_t k = 0; k < folds; ++k) {
            const DecisionTree tree = fit_tree(dataset, train[k], TreeConfig{depth, min_leaf});
            truth.clear();
            for (std::size_t r : held_out[k]) truth.push_back(dataset.labels[r]);
            total += accuracy(predict_tree(tree, dataset.features, held_out[k]), truth);
        }
        const double mean = total / static_cast<double>(folds);
        if (mean > best_score + 1e-12) {
            best_score = mean;
            best_depth = depth;
        }
    }
    return best_depth;
}

nlohmann::json to_json(const DecisionTree& tree) {
    auto ref = [](const NodeRef& r) { return nlohmann::json{{"kind", r.is_leaf ? "leaf" : "node"}, {"index", r.index}}; };
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& node : tree.nodes) {
        nodes.push_back({{"feature", node.feature}, {"threshold", node.threshold}, {"left", ref(node.left)},
                         {"right", ref(node.right)}});
    }
    nlohmann::json leaves = nlohmann::json::array();
    for (const auto& leaf : tree.leaves) {
        leaves.push_back({{"class_counts", leaf.class_counts}, {"path_length", leaf.path_length},
                          {"majority_class", leaf.majority_class}});
    }
    return {{"root", ref(tree.root)}, {"nodes", nodes}, {"leaves", leaves}, {"dimension", tree.dimension},
            {"class_count", tree.class_count}, {"training_size", tree.training_size}};
}

}  // namespace ndtsel
