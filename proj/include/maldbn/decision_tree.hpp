#pragma once

// CART-style decision tree over binary features, split by Gini impurity
// reduction. An impure node is split as long as depth remains and some
// candidate feature still partitions it, even at zero gain — that is what
// makes an unlimited-depth tree memorize conflict-free training data exactly
// (on XOR-patterned data every single-feature gain is zero at the root).
// Ties (equal gain) go to the lowest column index; leaf labels are the
// majority with ties to 0.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "maldbn/features.hpp"
#include "maldbn/matrix.hpp"
#include "maldbn/rng.hpp"

namespace maldbn {

inline constexpr int kUnlimitedDepth = -1;

struct TreeModel {
    struct Node {
        int feature = -1;  // split column; -1 marks a leaf
        int label = 0;     // leaf prediction
        int left = -1;     // child where feature bit is 0
        int right = -1;    // child where feature bit is 1
        bool is_leaf() const { return feature < 0; }
    };
    std::vector<Node> nodes;  // node 0 is the root
    int max_depth = kUnlimitedDepth;

    bool empty() const { return nodes.empty(); }
};

/// Gini impurity of a two-class count pair.
inline double gini_impurity(std::size_t n0, std::size_t n1) {
    const double n = static_cast<double>(n0 + n1);
    if (n == 0.0) return 0.0;
    const double p0 = static_cast<double>(n0) / n;
    const double p1 = static_cast<double>(n1) / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

/// Impurity reduction of splitting (n0,n1) into left (l0,l1) and the rest.
inline double gini_gain(std::size_t n0, std::size_t n1, std::size_t l0, std::size_t l1) {
    const std::size_t r0 = n0 - l0, r1 = n1 - l1;
    const double n = static_cast<double>(n0 + n1);
    const double wl = static_cast<double>(l0 + l1) / n;
    const double wr = static_cast<double>(r0 + r1) / n;
    return gini_impurity(n0, n1) - wl * gini_impurity(l0, l1) - wr * gini_impurity(r0, r1);
}

namespace detail {

// Recursive builder shared by fit_tree and the forest. When rng is set and
// features_per_split < cols, each node draws its own candidate columns
// (sorted ascending so the lowest-index tie-break is sample-order free);
// draws happen in preorder construction order.
struct TreeBuilder {
    const Matrix& x;
    const std::vector<int>& y;
    int max_depth = kUnlimitedDepth;
    SeededRng* rng = nullptr;
    std::size_t features_per_split = 0;  // 0 or >= cols means all columns
    std::vector<TreeModel::Node> nodes;

    int make_leaf(std::size_t n0, std::size_t n1) {
        TreeModel::Node leaf;
        leaf.label = n1 > n0 ? 1 : 0;
        nodes.push_back(leaf);
        return static_cast<int>(nodes.size() - 1);
    }

    std::vector<std::size_t> node_candidates() {
        const std::size_t d = x.cols();
        std::vector<std::size_t> cols(d);
        for (std::size_t i = 0; i < d; ++i) cols[i] = i;
        if (rng == nullptr || features_per_split == 0 || features_per_split >= d) return cols;
        for (std::size_t i = 0; i < features_per_split; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng->below(d - i));
            std::swap(cols[i], cols[j]);
        }
        cols.resize(features_per_split);
        std::sort(cols.begin(), cols.end());
        return cols;
    }

    int build(const std::vector<std::size_t>& rows, int depth) {
        std::size_t n0 = 0, n1 = 0;
        for (std::size_t r : rows) (y[r] ? n1 : n0)++;
        if (n0 == 0 || n1 == 0) return make_leaf(n0, n1);
        if (max_depth != kUnlimitedDepth && depth >= max_depth) return make_leaf(n0, n1);

        const std::vector<std::size_t> candidates = node_candidates();
        int best_col = -1;
        double best_gain = -1.0;
        for (std::size_t col : candidates) {
            std::size_t l0 = 0, l1 = 0, left_n = 0;
            for (std::size_t r : rows) {
                if (x(r, col) < 0.5) {
                    (y[r] ? l1 : l0)++;
                    ++left_n;
                }
            }
            if (left_n == 0 || left_n == rows.size()) continue;  // does not partition
            const double gain = gini_gain(n0, n1, l0, l1);
            if (gain > best_gain) {
                best_gain = gain;
                best_col = static_cast<int>(col);
            }
        }
        if (best_col < 0) return make_leaf(n0, n1);  // all candidates constant here

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : rows)
            (x(r, static_cast<std::size_t>(best_col)) < 0.5 ? left_rows : right_rows).push_back(r);

        const int node_index = static_cast<int>(nodes.size());
        nodes.emplace_back();
        nodes[static_cast<std::size_t>(node_index)].feature = best_col;
        const int left = build(left_rows, depth + 1);
        const int right = build(right_rows, depth + 1);
        nodes[static_cast<std::size_t>(node_index)].left = left;
        nodes[static_cast<std::size_t>(node_index)].right = right;
        return node_index;
    }
};

}  // namespace detail

inline TreeModel fit_tree(const Matrix& x, const std::vector<int>& y, int max_depth = kUnlimitedDepth) {
    if (x.rows() == 0) throw std::invalid_argument("fit_tree: empty training set");
    if (x.rows() != y.size()) throw std::invalid_argument("fit_tree: x/y length mismatch");
    detail::TreeBuilder builder{x, y, max_depth};
    std::vector<std::size_t> rows(x.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    builder.build(rows, 0);
    TreeModel model;
    model.nodes = std::move(builder.nodes);
    model.max_depth = max_depth;
    return model;
}

inline TreeModel fit_tree(const EncodedDataset& train, int max_depth = kUnlimitedDepth) {
    if (!train.labeled()) throw std::invalid_argument("fit_tree: dataset is unlabeled");
    return fit_tree(train.x, train.y, max_depth);
}

inline int predict_tree_row(const TreeModel& model, const Matrix& x, std::size_t row) {
    int i = 0;
    while (!model.nodes[static_cast<std::size_t>(i)].is_leaf()) {
        const auto& node = model.nodes[static_cast<std::size_t>(i)];
        if (static_cast<std::size_t>(node.feature) >= x.cols())
            throw std::invalid_argument("predict_tree: sample has too few columns for the model");
        i = x(row, static_cast<std::size_t>(node.feature)) < 0.5 ? node.left : node.right;
    }
    return model.nodes[static_cast<std::size_t>(i)].label;
}

inline std::vector<int> predict_tree(const TreeModel& model, const Matrix& x) {
    if (model.empty()) throw std::invalid_argument("predict_tree: empty model");
    std::vector<int> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict_tree_row(model, x, r);
    return out;
}

inline nlohmann::json tree_to_json(const TreeModel& model) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : model.nodes)
        nodes.push_back({{"feature", n.feature}, {"label", n.label}, {"left", n.left}, {"right", n.right}});
    return {{"nodes", nodes}, {"max_depth", model.max_depth}};
}

inline TreeModel tree_from_json(const nlohmann::json& j) {
    TreeModel model;
    model.max_depth = j.at("max_depth").get<int>();
    for (const auto& jn : j.at("nodes")) {
        TreeModel::Node n;
        n.feature = jn.at("feature").get<int>();
        n.label = jn.at("label").get<int>();
        n.left = jn.at("left").get<int>();
        n.right = jn.at("right").get<int>();
        model.nodes.push_back(n);
    }
    if (model.nodes.empty()) throw std::runtime_error("tree_from_json: no nodes");
    return model;
}

}  // namespace maldbn
