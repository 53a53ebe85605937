#pragma once

// Random forest: bagged CART trees with per-node feature subsampling and
// majority vote (ties to 0). Tree t draws everything from a child seed
// mix_seed(seed, t) — bootstrap rows first, then per-node candidate columns
// in construction order — so trees are reproducible independently of how the
// forest is scheduled.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "maldbn/decision_tree.hpp"
#include "maldbn/features.hpp"
#include "maldbn/rng.hpp"

namespace maldbn {

struct ForestConfig {
    std::size_t n_trees = 100;
    bool bootstrap = true;
    std::size_t features_per_split = 0;  // 0 selects round(sqrt(columns))
    int max_depth = kUnlimitedDepth;
    std::uint64_t seed = 0;
};

struct ForestModel {
    std::vector<TreeModel> trees;
    ForestConfig config;
};

inline ForestModel fit_forest(const Matrix& x, const std::vector<int>& y, const ForestConfig& cfg) {
    if (cfg.n_trees == 0) throw std::invalid_argument("fit_forest: n_trees must be positive");
    if (x.rows() == 0) throw std::invalid_argument("fit_forest: empty training set");
    if (x.rows() != y.size()) throw std::invalid_argument("fit_forest: x/y length mismatch");

    std::size_t m = cfg.features_per_split;
    if (m == 0) m = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(x.cols()))));
    if (m > x.cols()) m = x.cols();

    ForestModel model;
    model.config = cfg;
    model.config.features_per_split = m;
    for (std::size_t t = 0; t < cfg.n_trees; ++t) {
        SeededRng rng(mix_seed(cfg.seed, t));
        std::vector<std::size_t> rows(x.rows());
        if (cfg.bootstrap)
            for (auto& r : rows) r = static_cast<std::size_t>(rng.below(x.rows()));
        else
            for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;

        detail::TreeBuilder builder{x, y, cfg.max_depth, m < x.cols() ? &rng : nullptr, m};
        builder.build(rows, 0);
        TreeModel tree;
        tree.nodes = std::move(builder.nodes);
        tree.max_depth = cfg.max_depth;
        model.trees.push_back(std::move(tree));
    }
    return model;
}

inline ForestModel fit_forest(const EncodedDataset& train, const ForestConfig& cfg) {
    if (!train.labeled()) throw std::invalid_argument("fit_forest: dataset is unlabeled");
    return fit_forest(train.x, train.y, cfg);
}

/// Votes for class 1 per row, one vote per tree.
inline std::vector<std::size_t> forest_votes(const ForestModel& model, const Matrix& x) {
    std::vector<std::size_t> votes(x.rows(), 0);
    for (const auto& tree : model.trees) {
        const auto preds = predict_tree(tree, x);
        for (std::size_t r = 0; r < preds.size(); ++r) votes[r] += static_cast<std::size_t>(preds[r]);
    }
    return votes;
}

/// Majority vote; an exact tie resolves to 0.
inline std::vector<int> predict_forest(const ForestModel& model, const Matrix& x) {
    if (model.trees.empty()) throw std::invalid_argument("predict_forest: empty model");
    const auto votes = forest_votes(model, x);
    std::vector<int> out(x.rows());
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = 2 * votes[r] > model.trees.size() ? 1 : 0;
    return out;
}

inline nlohmann::json forest_to_json(const ForestModel& model) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : model.trees) trees.push_back(tree_to_json(tree));
    return {{"trees", trees},
            {"n_trees", model.config.n_trees},
            {"bootstrap", model.config.bootstrap},
            {"features_per_split", model.config.features_per_split},
            {"max_depth", model.config.max_depth},
            {"seed", model.config.seed}};
}

inline ForestModel forest_from_json(const nlohmann::json& j) {
    ForestModel model;
    model.config.n_trees = j.at("n_trees").get<std::size_t>();
    model.config.bootstrap = j.at("bootstrap").get<bool>();
    model.config.features_per_split = j.at("features_per_split").get<std::size_t>();
    model.config.max_depth = j.at("max_depth").get<int>();
    model.config.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& jt : j.at("trees")) model.trees.push_back(tree_from_json(jt));
    if (model.trees.empty()) throw std::runtime_error("forest_from_json: no trees");
    return model;
}

}  // namespace maldbn
