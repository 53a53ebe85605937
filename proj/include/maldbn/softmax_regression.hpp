#pragma once

// Softmax regression: a single linear layer into a two-class softmax,
// trained by minibatch gradient descent on the mean categorical
// cross-entropy. Parameters start at zero; shuffling and batching follow the
// same scheme as the network fine-tuner.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "maldbn/dbn.hpp"
#include "maldbn/features.hpp"
#include "maldbn/matrix.hpp"
#include "maldbn/rng.hpp"

namespace maldbn {

struct SoftmaxRegModel {
    Matrix w;                // 2 x input dim
    std::vector<double> b;   // 2

    bool operator==(const SoftmaxRegModel&) const = default;
};

inline Matrix softmax_reg_probabilities(const SoftmaxRegModel& model, const Matrix& x) {
    if (x.cols() != model.w.cols())
        throw std::invalid_argument("softmax_regression: batch has " + std::to_string(x.cols()) +
                                    " columns, model expects " + std::to_string(model.w.cols()));
    Matrix logits = matmul(x, transpose(model.w));
    detail::add_bias_rows(logits, model.b);
    return softmax_rows(logits);
}

inline SoftmaxRegModel fit_softmax_regression(const Matrix& x, const std::vector<int>& y,
                                              const FineTuneConfig& cfg) {
    if (x.rows() == 0) throw std::invalid_argument("fit_softmax_regression: empty training set");
    if (x.rows() != y.size()) throw std::invalid_argument("fit_softmax_regression: x/y length mismatch");

    SoftmaxRegModel model{Matrix(2, x.cols(), 0.0), std::vector<double>(2, 0.0)};
    SeededRng rng(cfg.seed);
    std::vector<std::size_t> order(x.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const double bn = static_cast<double>(stop - start);
            Matrix bx(stop - start, x.cols());
            std::vector<int> by(stop - start);
            for (std::size_t r = start; r < stop; ++r) {
                for (std::size_t c = 0; c < x.cols(); ++c) bx(r - start, c) = x(order[r], c);
                by[r - start] = y[order[r]];
            }
            const Matrix p = softmax_reg_probabilities(model, bx);
            Matrix g(p.rows(), 2);
            for (std::size_t r = 0; r < p.rows(); ++r) {
                if (by[r] != 0 && by[r] != 1)
                    throw std::invalid_argument("fit_softmax_regression: labels must be 0 or 1");
                for (std::size_t c = 0; c < 2; ++c)
                    g(r, c) = (p(r, c) - (static_cast<int>(c) == by[r] ? 1.0 : 0.0)) / bn;
            }
            const Matrix gw = matmul(transpose(g), bx);
            for (std::size_t i = 0; i < model.w.size(); ++i)
                model.w.values()[i] -= cfg.learning_rate * gw.values()[i];
            for (std::size_t c = 0; c < 2; ++c) {
                double acc = 0.0;
                for (std::size_t r = 0; r < g.rows(); ++r) acc += g(r, c);
                model.b[c] -= cfg.learning_rate * acc;
            }
        }
    }
    return model;
}

inline SoftmaxRegModel fit_softmax_regression(const EncodedDataset& train, const FineTuneConfig& cfg) {
    if (!train.labeled()) throw std::invalid_argument("fit_softmax_regression: dataset is unlabeled");
    return fit_softmax_regression(train.x, train.y, cfg);
}

/// Argmax of the class probabilities; an exact tie resolves to 0.
inline std::vector<int> predict_softmax_regression(const SoftmaxRegModel& model, const Matrix& x) {
    const Matrix p = softmax_reg_probabilities(model, x);
    std::vector<int> out(p.rows());
    for (std::size_t r = 0; r < p.rows(); ++r) out[r] = p(r, 1) > p(r, 0) ? 1 : 0;
    return out;
}

inline nlohmann::json softmax_reg_to_json(const SoftmaxRegModel& model) {
    return {{"input_dim", model.w.cols()}, {"w", model.w.values()}, {"b", model.b}};
}

inline SoftmaxRegModel softmax_reg_from_json(const nlohmann::json& j) {
    const auto dim = j.at("input_dim").get<std::size_t>();
    SoftmaxRegModel model{Matrix(2, dim, j.at("w").get<std::vector<double>>()),
                          j.at("b").get<std::vector<double>>()};
    if (model.b.size() != 2) throw std::runtime_error("softmax_reg_from_json: malformed bias");
    return model;
}

}  // namespace maldbn
