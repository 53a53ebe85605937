#pragma once

// Restricted Boltzmann machine trained by CD-k.
//
// One cd_step on a batch V0 (rows = samples, entries in [0,1]):
//   H0p = sigmoid(V0 W^T + hbias)            positive hidden probabilities
//   H0  = bernoulli(H0p)                     one uniform per entry, row-major
//   repeat k times:
//     Vr  = sigmoid(H W + vbias)             reconstruction, kept as probabilities
//     Hp  = sigmoid(Vr W^T + hbias)
//     H   = bernoulli(Hp), except the final pass keeps the probabilities
//   W     += lr * (H0p^T V0 - Hp^T Vr) / batch
//   vbias += lr * column-mean(V0 - Vr)
//   hbias += lr * column-mean(H0p - Hp)
//   mse    = mean((V0 - Vr)^2) over all entries
//
// Negative statistics and the reconstruction use probabilities (mean-field)
// rather than sampled states on the final pass, which keeps gradient
// variance down; the oracle fixtures follow the same recipe.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "maldbn/matrix.hpp"
#include "maldbn/rng.hpp"

namespace maldbn {

struct Rbm {
    Matrix w;  // hidden x visible
    std::vector<double> vbias;
    std::vector<double> hbias;

    std::size_t visible() const { return w.cols(); }
    std::size_t hidden() const { return w.rows(); }

    bool operator==(const Rbm&) const = default;
};

struct CdConfig {
    int k = 1;
    double learning_rate = 0.1;
    std::size_t batch_size = 32;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;
};

/// Per-epoch values; index i holds epoch i+1.
using ErrorCurve = std::vector<double>;

/// Weights ~ Gaussian with stddev 0.01, biases zero.
inline Rbm init_rbm(std::size_t visible, std::size_t hidden, std::uint64_t seed) {
    if (visible == 0 || hidden == 0)
        throw std::invalid_argument("init_rbm: dimensions must be positive");
    Rbm rbm;
    rbm.w = Matrix(hidden, visible);
    SeededRng rng(seed);
    for (double& v : rbm.w.values()) v = rng.normal(0.0, 0.01);
    rbm.vbias.assign(visible, 0.0);
    rbm.hbias.assign(hidden, 0.0);
    return rbm;
}

namespace detail {

inline void add_bias_rows(Matrix& m, const std::vector<double>& bias) {
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) += bias[c];
}

inline void check_unit_range(const Matrix& m, const char* who) {
    for (double v : m.values())
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument(std::string(who) + ": entries must lie in [0,1]");
}

}  // namespace detail

/// Hidden probabilities sigmoid(v W^T + hbias), row per sample.
inline Matrix prop_up(const Rbm& rbm, const Matrix& v) {
    if (v.cols() != rbm.visible())
        throw std::invalid_argument("prop_up: batch has " + std::to_string(v.cols()) +
                                    " columns, rbm expects " + std::to_string(rbm.visible()));
    detail::check_unit_range(v, "prop_up");
    Matrix a = matmul(v, transpose(rbm.w));
    detail::add_bias_rows(a, rbm.hbias);
    return sigmoid(a);
}

/// Visible probabilities sigmoid(h W + vbias), row per sample.
inline Matrix prop_down(const Rbm& rbm, const Matrix& h) {
    if (h.cols() != rbm.hidden())
        throw std::invalid_argument("prop_down: batch has " + std::to_string(h.cols()) +
                                    " columns, rbm expects " + std::to_string(rbm.hidden()));
    Matrix a = matmul(h, rbm.w);
    detail::add_bias_rows(a, rbm.vbias);
    return sigmoid(a);
}

struct CdStep {
    Rbm rbm;
    double mse = 0.0;
    // intermediates, exposed for the oracle tests
    Matrix h0_prob, h0_state, v_reconstruction, hk_prob;
};

namespace detail {

inline double cd_step_impl(Rbm& rbm, const Matrix& batch, const CdConfig& cfg, SeededRng& rng,
                           CdStep* trace) {
    if (batch.rows() == 0) throw std::invalid_argument("cd_step: empty batch");
    check_unit_range(batch, "cd_step");
    if (cfg.k < 1) throw std::invalid_argument("cd_step: k must be >= 1");

    const std::size_t n = batch.rows();
    const Matrix h0_prob = prop_up(rbm, batch);
    const Matrix h0 = bernoulli_sample(h0_prob, rng);

    Matrix h = h0;
    Matrix v_rec, hk_prob;
    for (int step = 0; step < cfg.k; ++step) {
        v_rec = prop_down(rbm, h);
        hk_prob = prop_up(rbm, v_rec);
        if (step + 1 < cfg.k) h = bernoulli_sample(hk_prob, rng);
    }

    const double lr = cfg.learning_rate;
    const Matrix positive = matmul(transpose(h0_prob), batch);  // hidden x visible
    const Matrix negative = matmul(transpose(hk_prob), v_rec);
    for (std::size_t i = 0; i < rbm.w.size(); ++i)
        rbm.w.values()[i] += lr * (positive.values()[i] - negative.values()[i]) / static_cast<double>(n);
    for (std::size_t c = 0; c < rbm.visible(); ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) acc += batch(r, c) - v_rec(r, c);
        rbm.vbias[c] += lr * acc / static_cast<double>(n);
    }
    for (std::size_t c = 0; c < rbm.hidden(); ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) acc += h0_prob(r, c) - hk_prob(r, c);
        rbm.hbias[c] += lr * acc / static_cast<double>(n);
    }

    double mse = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double d = batch.values()[i] - v_rec.values()[i];
        mse += d * d;
    }
    mse /= static_cast<double>(batch.size());

    if (trace) {
        trace->h0_prob = h0_prob;
        trace->h0_state = h0;
        trace->v_reconstruction = v_rec;
        trace->hk_prob = hk_prob;
    }
    return mse;
}

}  // namespace detail

/// Functional CD-k step; returns the updated machine, the batch
/// reconstruction MSE and the chain intermediates.
inline CdStep cd_step(const Rbm& rbm, const Matrix& batch, const CdConfig& cfg, SeededRng& rng) {
    CdStep out;
    out.rbm = rbm;
    out.mse = detail::cd_step_impl(out.rbm, batch, cfg, rng, &out);
    return out;
}

/// In-place CD-k step used by the training loop; returns the batch MSE.
inline double cd_step_inplace(Rbm& rbm, const Matrix& batch, const CdConfig& cfg, SeededRng& rng) {
    return detail::cd_step_impl(rbm, batch, cfg, rng, nullptr);
}

struct PretrainResult {
    Rbm rbm;
    ErrorCurve curve;  // per-epoch mean of batch MSEs
};

/// cfg.epochs sweeps of shuffled minibatches. One SeededRng seeded with
/// cfg.seed drives everything, consumed in order: per epoch, first the
/// shuffle, then each batch's hidden sampling. The last short batch is kept.
inline PretrainResult pretrain(const Rbm& rbm, const Matrix& data, const CdConfig& cfg) {
    if (data.rows() == 0) throw std::invalid_argument("pretrain: empty dataset");
    detail::check_unit_range(data, "pretrain");
    if (cfg.epochs < 1) throw std::invalid_argument("pretrain: epochs must be >= 1");
    if (cfg.batch_size < 1) throw std::invalid_argument("pretrain: batch_size must be >= 1");

    PretrainResult out;
    out.rbm = rbm;
    SeededRng rng(cfg.seed);
    std::vector<std::size_t> order(data.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, rng);
        double mse_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            Matrix batch(stop - start, data.cols());
            for (std::size_t r = start; r < stop; ++r)
                for (std::size_t c = 0; c < data.cols(); ++c) batch(r - start, c) = data(order[r], c);
            mse_sum += cd_step_inplace(out.rbm, batch, cfg, rng);
            ++batches;
        }
        out.curve.push_back(mse_sum / static_cast<double>(batches));
    }
    return out;
}

inline nlohmann::json rbm_to_json(const Rbm& rbm) {
    return {{"visible", rbm.visible()},
            {"hidden", rbm.hidden()},
            {"w", rbm.w.values()},
            {"vbias", rbm.vbias},
            {"hbias", rbm.hbias}};
}

inline Rbm rbm_from_json(const nlohmann::json& j) {
    const auto visible = j.at("visible").get<std::size_t>();
    const auto hidden = j.at("hidden").get<std::size_t>();
    Rbm rbm;
    rbm.w = Matrix(hidden, visible, j.at("w").get<std::vector<double>>());
    rbm.vbias = j.at("vbias").get<std::vector<double>>();
    rbm.hbias = j.at("hbias").get<std::vector<double>>();
    if (rbm.vbias.size() != visible || rbm.hbias.size() != hidden)
        throw std::runtime_error("rbm_from_json: bias lengths do not match dimensions");
    return rbm;
}

}  // namespace maldbn
