#pragma once

// The single contract the harness and CLI program against: name an
// algorithm, fit it on an encoded dataset, predict labels, round-trip it
// through JSON. Hyperparameters for all five algorithms live in one
// TrainProfile; per-fit seeds are derived from a master seed so a run is
// reproducible from (profile, seed) alone.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "maldbn/dbn.hpp"
#include "maldbn/decision_tree.hpp"
#include "maldbn/features.hpp"
#include "maldbn/linear_svm.hpp"
#include "maldbn/random_forest.hpp"
#include "maldbn/rbm.hpp"
#include "maldbn/softmax_regression.hpp"

namespace maldbn {

enum class Algorithm { dbn, decision_tree, random_forest, softmax_regression, svm };

inline const std::vector<Algorithm>& all_algorithms() {
    static const std::vector<Algorithm> algos = {Algorithm::dbn, Algorithm::decision_tree,
                                                 Algorithm::random_forest, Algorithm::softmax_regression,
                                                 Algorithm::svm};
    return algos;
}

inline std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::dbn: return "dbn";
        case Algorithm::decision_tree: return "decision_tree";
        case Algorithm::random_forest: return "random_forest";
        case Algorithm::softmax_regression: return "softmax_regression";
        case Algorithm::svm: return "svm";
    }
    throw std::logic_error("algorithm_name: bad enum");
}

inline std::optional<Algorithm> parse_algorithm(const std::string& name) {
    for (Algorithm a : all_algorithms())
        if (algorithm_name(a) == name) return a;
    return std::nullopt;
}

struct TrainProfile {
    std::vector<std::size_t> hidden_sizes = {512};
    CdConfig cd;                 // pre-training; epochs 200
    FineTuneConfig finetune;     // back-propagation; epochs 200
    FineTuneConfig softmax;      // softmax-regression training
    ForestConfig forest;
    SvmConfig svm;
    int tree_max_depth = kUnlimitedDepth;
};

/// Paper-scale defaults: one 512-unit RBM, 200 pre-training and 200
/// fine-tuning epochs.
inline TrainProfile default_profile() { return {}; }

/// Reduced profile for CI-scale benchmarking; same protocol, smaller
/// network and fewer gradient epochs.
inline TrainProfile ci_profile() {
    TrainProfile p;
    p.hidden_sizes = {64};
    p.cd.epochs = 15;
    p.finetune.epochs = 100;
    return p;
}

using ModelVariant = std::variant<Dbn, TreeModel, ForestModel, SoftmaxRegModel, LinearSvmModel>;

struct FitResult {
    Algorithm algorithm;
    ModelVariant model;
    ErrorCurve pretrain_error;  // dbn only (first RBM layer)
    LossCurve finetune_loss;    // dbn only
};

// seed-stream tags for the per-fit derivations
namespace detail {
inline constexpr std::uint64_t kFitPretrainStream = 11;
inline constexpr std::uint64_t kFitFinetuneStream = 12;
inline constexpr std::uint64_t kFitModelStream = 13;
}  // namespace detail

/// Fits `algorithm` on the labeled dataset. All stochastic choices derive
/// from `seed`; the profile's own seed fields are ignored here.
inline FitResult fit(Algorithm algorithm, const EncodedDataset& train, const TrainProfile& profile,
                     std::uint64_t seed) {
    if (!train.labeled()) throw std::invalid_argument("fit: dataset is unlabeled");
    FitResult out;
    out.algorithm = algorithm;
    switch (algorithm) {
        case Algorithm::dbn: {
            CdConfig cd = profile.cd;
            cd.seed = mix_seed(seed, detail::kFitPretrainStream);
            GreedyPretrainResult pre = greedy_pretrain(profile.hidden_sizes, train.x, cd);
            out.pretrain_error = pre.layer_curves.front();
            FineTuneConfig ft = profile.finetune;
            ft.seed = mix_seed(seed, detail::kFitFinetuneStream);
            FineTuneResult tuned = fine_tune(pre.dbn, train, ft);
            out.finetune_loss = std::move(tuned.curve);
            out.model = std::move(tuned.dbn);
            break;
        }
        case Algorithm::decision_tree:
            out.model = fit_tree(train, profile.tree_max_depth);
            break;
        case Algorithm::random_forest: {
            ForestConfig cfg = profile.forest;
            cfg.seed = mix_seed(seed, detail::kFitModelStream);
            out.model = fit_forest(train, cfg);
            break;
        }
        case Algorithm::softmax_regression: {
            FineTuneConfig cfg = profile.softmax;
            cfg.seed = mix_seed(seed, detail::kFitModelStream);
            out.model = fit_softmax_regression(train, cfg);
            break;
        }
        case Algorithm::svm: {
            SvmConfig cfg = profile.svm;
            cfg.seed = mix_seed(seed, detail::kFitModelStream);
            out.model = fit_linear_svm(train, cfg).model;
            break;
        }
    }
    return out;
}

inline std::vector<int> predict(const ModelVariant& model, const Matrix& x) {
    return std::visit(
        [&](const auto& m) -> std::vector<int> {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Dbn>) return predict(m, x);
            if constexpr (std::is_same_v<T, TreeModel>) return predict_tree(m, x);
            if constexpr (std::is_same_v<T, ForestModel>) return predict_forest(m, x);
            if constexpr (std::is_same_v<T, SoftmaxRegModel>) return predict_softmax_regression(m, x);
            if constexpr (std::is_same_v<T, LinearSvmModel>) return predict_linear_svm(m, x);
        },
        model);
}

inline std::size_t model_input_dim(const ModelVariant& model) {
    return std::visit(
        [](const auto& m) -> std::size_t {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Dbn>) return m.input_dim();
            if constexpr (std::is_same_v<T, TreeModel>) return 0;  // trees touch only split columns
            if constexpr (std::is_same_v<T, ForestModel>) return 0;
            if constexpr (std::is_same_v<T, SoftmaxRegModel>) return m.w.cols();
            if constexpr (std::is_same_v<T, LinearSvmModel>) return m.w.size();
        },
        model);
}

inline nlohmann::json model_to_json(const ModelVariant& model) {
    return std::visit(
        [](const auto& m) -> nlohmann::json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Dbn>) return {{"type", "dbn"}, {"model", dbn_to_json(m)}};
            if constexpr (std::is_same_v<T, TreeModel>)
                return {{"type", "decision_tree"}, {"model", tree_to_json(m)}};
            if constexpr (std::is_same_v<T, ForestModel>)
                return {{"type", "random_forest"}, {"model", forest_to_json(m)}};
            if constexpr (std::is_same_v<T, SoftmaxRegModel>)
                return {{"type", "softmax_regression"}, {"model", softmax_reg_to_json(m)}};
            if constexpr (std::is_same_v<T, LinearSvmModel>)
                return {{"type", "svm"}, {"model", svm_to_json(m)}};
        },
        model);
}

inline ModelVariant model_from_json(const nlohmann::json& j) {
    const auto type = j.at("type").get<std::string>();
    const auto& body = j.at("model");
    if (type == "dbn") return dbn_from_json(body);
    if (type == "decision_tree") return tree_from_json(body);
    if (type == "random_forest") return forest_from_json(body);
    if (type == "softmax_regression") return softmax_reg_from_json(body);
    if (type == "svm") return svm_from_json(body);
    throw std::runtime_error("model_from_json: unknown model type \"" + type + "\"");
}

}  // namespace maldbn
