#pragma once

// Deep belief network: a stack of sigmoid layers initialized from greedily
// pre-trained RBMs plus a two-class softmax head, fine-tuned end to end by
// minibatch gradient descent on the mean categorical cross-entropy.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "maldbn/features.hpp"
#include "maldbn/matrix.hpp"
#include "maldbn/rbm.hpp"
#include "maldbn/rng.hpp"

namespace maldbn {

struct DbnLayer {
    Matrix w;                // out x in
    std::vector<double> b;   // out

    bool operator==(const DbnLayer&) const = default;
};

struct Dbn {
    std::vector<DbnLayer> layers;
    Matrix head_w;               // 2 x last hidden
    std::vector<double> head_b;  // 2

    std::size_t input_dim() const { return layers.empty() ? head_w.cols() : layers.front().w.cols(); }

    bool operator==(const Dbn&) const = default;
};

struct FineTuneConfig {
    double learning_rate = 0.1;
    std::size_t batch_size = 32;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;
};

/// Per-epoch mean categorical cross-entropy; index i holds epoch i+1.
using LossCurve = std::vector<double>;

namespace detail {

// stream tags for seed derivation inside a dbn build
inline constexpr std::uint64_t kLayerInitStream = 0;
inline constexpr std::uint64_t kLayerTrainStream = 1;
inline constexpr std::uint64_t kHeadInitStream = 2;

inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev, SeededRng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.values()) v = rng.normal(0.0, stddev);
    return m;
}

}  // namespace detail

/// Randomly initialized network (no pre-training): layer weights and head
/// Gaussian with stddev 0.01, biases zero.
inline Dbn init_dbn(std::size_t input_dim, const std::vector<std::size_t>& hidden_sizes,
                    std::uint64_t seed) {
    if (input_dim == 0) throw std::invalid_argument("init_dbn: input_dim must be positive");
    Dbn dbn;
    std::size_t in = input_dim;
    for (std::size_t i = 0; i < hidden_sizes.size(); ++i) {
        if (hidden_sizes[i] == 0) throw std::invalid_argument("init_dbn: hidden size must be positive");
        SeededRng rng(mix_seed(seed, i, detail::kLayerInitStream));
        dbn.layers.push_back({detail::gaussian_matrix(hidden_sizes[i], in, 0.01, rng),
                              std::vector<double>(hidden_sizes[i], 0.0)});
        in = hidden_sizes[i];
    }
    SeededRng rng(mix_seed(seed, hidden_sizes.size(), detail::kHeadInitStream));
    dbn.head_w = detail::gaussian_matrix(2, in, 0.01, rng);
    dbn.head_b.assign(2, 0.0);
    return dbn;
}

struct GreedyPretrainResult {
    Dbn dbn;
    std::vector<ErrorCurve> layer_curves;  // one reconstruction-error curve per RBM
};

/// Trains one RBM per hidden size, feeding each trained RBM's hidden
/// probabilities to the next as input. Layer i derives its init and training
/// seeds from cfg.seed and i, so stacks are deterministic.
inline GreedyPretrainResult greedy_pretrain(const std::vector<std::size_t>& hidden_sizes,
                                            const Matrix& train_x, const CdConfig& cfg) {
    if (hidden_sizes.empty()) throw std::invalid_argument("greedy_pretrain: no hidden sizes");
    if (train_x.rows() == 0 || train_x.cols() == 0)
        throw std::invalid_argument("greedy_pretrain: empty training data");

    GreedyPretrainResult out;
    Matrix input = train_x;
    for (std::size_t i = 0; i < hidden_sizes.size(); ++i) {
        Rbm rbm = init_rbm(input.cols(), hidden_sizes[i], mix_seed(cfg.seed, i, detail::kLayerInitStream));
        CdConfig layer_cfg = cfg;
        layer_cfg.seed = mix_seed(cfg.seed, i, detail::kLayerTrainStream);
        PretrainResult trained = pretrain(rbm, input, layer_cfg);
        out.layer_curves.push_back(std::move(trained.curve));
        input = prop_up(trained.rbm, input);
        out.dbn.layers.push_back({std::move(trained.rbm.w), std::move(trained.rbm.hbias)});
    }
    SeededRng rng(mix_seed(cfg.seed, hidden_sizes.size(), detail::kHeadInitStream));
    out.dbn.head_w = detail::gaussian_matrix(2, hidden_sizes.back(), 0.01, rng);
    out.dbn.head_b.assign(2, 0.0);
    return out;
}

namespace detail {

inline Matrix affine(const Matrix& a, const Matrix& w_t_outxin, const std::vector<double>& b) {
    Matrix z = matmul(a, transpose(w_t_outxin));
    add_bias_rows(z, b);
    return z;
}

/// Forward pass keeping every layer activation (index 0 = input).
inline std::vector<Matrix> forward_activations(const Dbn& dbn, const Matrix& x) {
    if (x.cols() != dbn.input_dim())
        throw std::invalid_argument("dbn forward: batch has " + std::to_string(x.cols()) +
                                    " columns, network expects " + std::to_string(dbn.input_dim()));
    std::vector<Matrix> acts;
    acts.reserve(dbn.layers.size() + 1);
    acts.push_back(x);
    for (const auto& layer : dbn.layers) acts.push_back(sigmoid(affine(acts.back(), layer.w, layer.b)));
    return acts;
}

inline Matrix one_hot(const std::vector<int>& y) {
    Matrix t(y.size(), 2);
    for (std::size_t r = 0; r < y.size(); ++r) {
        if (y[r] != 0 && y[r] != 1) throw std::invalid_argument("labels must be 0 or 1");
        t(r, static_cast<std::size_t>(y[r])) = 1.0;
    }
    return t;
}

}  // namespace detail

/// Class probabilities, one row per sample; rows sum to 1.
inline Matrix forward(const Dbn& dbn, const Matrix& x) {
    const auto acts = detail::forward_activations(dbn, x);
    return softmax_rows(detail::affine(acts.back(), dbn.head_w, dbn.head_b));
}

/// Mean categorical cross-entropy of the network on (x, y).
inline double mean_cross_entropy(const Dbn& dbn, const Matrix& x, const std::vector<int>& y) {
    if (x.rows() != y.size()) throw std::invalid_argument("mean_cross_entropy: x/y length mismatch");
    if (x.rows() == 0) throw std::invalid_argument("mean_cross_entropy: empty batch");
    const Matrix p = forward(dbn, x);
    double loss = 0.0;
    for (std::size_t r = 0; r < y.size(); ++r) {
        const double q = p(r, static_cast<std::size_t>(y[r]));
        loss -= std::log(q > 1e-300 ? q : 1e-300);
    }
    return loss / static_cast<double>(y.size());
}

/// Same shapes as the network parameters.
struct DbnGradients {
    std::vector<DbnLayer> layers;
    Matrix head_w;
    std::vector<double> head_b;
};

/// Analytic gradients of mean_cross_entropy by backpropagation through the
/// softmax head and every sigmoid layer.
inline DbnGradients gradients(const Dbn& dbn, const Matrix& x, const std::vector<int>& y) {
    if (x.rows() != y.size()) throw std::invalid_argument("gradients: x/y length mismatch");
    if (x.rows() == 0) throw std::invalid_argument("gradients: empty batch");
    const double n = static_cast<double>(x.rows());
    const auto acts = detail::forward_activations(dbn, x);
    const Matrix probs = softmax_rows(detail::affine(acts.back(), dbn.head_w, dbn.head_b));
    const Matrix targets = detail::one_hot(y);

    Matrix g_logits(probs.rows(), 2);
    for (std::size_t i = 0; i < g_logits.size(); ++i)
        g_logits.values()[i] = (probs.values()[i] - targets.values()[i]) / n;

    DbnGradients g;
    g.head_w = matmul(transpose(g_logits), acts.back());
    g.head_b.assign(2, 0.0);
    for (std::size_t r = 0; r < g_logits.rows(); ++r)
        for (std::size_t c = 0; c < 2; ++c) g.head_b[c] += g_logits(r, c);

    Matrix delta = matmul(g_logits, dbn.head_w);  // batch x last hidden
    g.layers.resize(dbn.layers.size());
    for (std::size_t l = dbn.layers.size(); l-- > 0;) {
        const Matrix& a = acts[l + 1];
        for (std::size_t i = 0; i < delta.size(); ++i)
            delta.values()[i] *= a.values()[i] * (1.0 - a.values()[i]);
        g.layers[l].w = matmul(transpose(delta), acts[l]);
        g.layers[l].b.assign(dbn.layers[l].b.size(), 0.0);
        for (std::size_t r = 0; r < delta.rows(); ++r)
            for (std::size_t c = 0; c < delta.cols(); ++c) g.layers[l].b[c] += delta(r, c);
        if (l > 0) delta = matmul(delta, dbn.layers[l].w);
    }
    return g;
}

struct FineTuneResult {
    Dbn dbn;
    LossCurve curve;
};

/// Minibatch gradient descent on the cross-entropy; every layer and the head
/// are updated. Minibatch order is reshuffled each epoch from cfg.seed; the
/// curve records the epoch's sample-weighted mean of batch losses, each
/// evaluated before its update.
inline FineTuneResult fine_tune(const Dbn& dbn, const Matrix& x, const std::vector<int>& y,
                                const FineTuneConfig& cfg) {
    if (x.rows() == 0) throw std::invalid_argument("fine_tune: empty training set");
    if (x.rows() != y.size()) throw std::invalid_argument("fine_tune: x/y length mismatch");
    if (cfg.epochs < 1) throw std::invalid_argument("fine_tune: epochs must be >= 1");
    if (cfg.batch_size < 1) throw std::invalid_argument("fine_tune: batch_size must be >= 1");

    FineTuneResult out;
    out.dbn = dbn;
    SeededRng rng(cfg.seed);
    std::vector<std::size_t> order(x.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            Matrix bx(stop - start, x.cols());
            std::vector<int> by(stop - start);
            for (std::size_t r = start; r < stop; ++r) {
                for (std::size_t c = 0; c < x.cols(); ++c) bx(r - start, c) = x(order[r], c);
                by[r - start] = y[order[r]];
            }
            loss_sum += mean_cross_entropy(out.dbn, bx, by) * static_cast<double>(bx.rows());
            const DbnGradients g = gradients(out.dbn, bx, by);
            const double lr = cfg.learning_rate;
            for (std::size_t l = 0; l < out.dbn.layers.size(); ++l) {
                for (std::size_t i = 0; i < out.dbn.layers[l].w.size(); ++i)
                    out.dbn.layers[l].w.values()[i] -= lr * g.layers[l].w.values()[i];
                for (std::size_t i = 0; i < out.dbn.layers[l].b.size(); ++i)
                    out.dbn.layers[l].b[i] -= lr * g.layers[l].b[i];
            }
            for (std::size_t i = 0; i < out.dbn.head_w.size(); ++i)
                out.dbn.head_w.values()[i] -= lr * g.head_w.values()[i];
            for (std::size_t i = 0; i < 2; ++i) out.dbn.head_b[i] -= lr * g.head_b[i];
        }
        out.curve.push_back(loss_sum / static_cast<double>(x.rows()));
    }
    return out;
}

inline FineTuneResult fine_tune(const Dbn& dbn, const EncodedDataset& train, const FineTuneConfig& cfg) {
    if (!train.labeled()) throw std::invalid_argument("fine_tune: dataset is unlabeled");
    return fine_tune(dbn, train.x, train.y, cfg);
}

/// Argmax of the class probabilities; an exact tie resolves to 0 (benign).
inline std::vector<int> predict(const Dbn& dbn, const Matrix& x) {
    const Matrix p = forward(dbn, x);
    std::vector<int> labels(p.rows());
    for (std::size_t r = 0; r < p.rows(); ++r) labels[r] = p(r, 1) > p(r, 0) ? 1 : 0;
    return labels;
}

inline nlohmann::json dbn_to_json(const Dbn& dbn) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : dbn.layers)
        layers.push_back({{"in", layer.w.cols()}, {"out", layer.w.rows()}, {"w", layer.w.values()}, {"b", layer.b}});
    return {{"layers", layers}, {"head", {{"w", dbn.head_w.values()}, {"b", dbn.head_b}}}};
}

inline Dbn dbn_from_json(const nlohmann::json& j) {
    Dbn dbn;
    std::size_t last = 0;
    for (const auto& jl : j.at("layers")) {
        const auto in = jl.at("in").get<std::size_t>();
        const auto out = jl.at("out").get<std::size_t>();
        DbnLayer layer{Matrix(out, in, jl.at("w").get<std::vector<double>>()),
                       jl.at("b").get<std::vector<double>>()};
        if (layer.b.size() != out) throw std::runtime_error("dbn_from_json: bias length mismatch");
        if (last != 0 && in != last) throw std::runtime_error("dbn_from_json: layer dimension chain break");
        last = out;
        dbn.layers.push_back(std::move(layer));
    }
    const auto& head = j.at("head");
    const auto hb = head.at("b").get<std::vector<double>>();
    const auto hw = head.at("w").get<std::vector<double>>();
    if (hb.size() != 2 || hw.size() % 2 != 0) throw std::runtime_error("dbn_from_json: malformed head");
    dbn.head_w = Matrix(2, hw.size() / 2, hw);
    dbn.head_b = hb;
    if (last != 0 && dbn.head_w.cols() != last)
        throw std::runtime_error("dbn_from_json: head dimension mismatch");
    return dbn;
}

}  // namespace maldbn
