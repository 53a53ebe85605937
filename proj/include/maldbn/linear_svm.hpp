#pragma once

// Linear SVM trained by Pegasos-style stochastic subgradient descent on the
// L2-regularized hinge loss, lambda = 1/(c*n), step 1/(lambda*t). The bias
// rides along as an implicit constant-1 feature inside the regularized
// weight vector; an unregularized bias with this step schedule takes an
// enormous first step (1/lambda = c*n) and destabilizes training.
// Labels map {0 -> -1, 1 -> +1} internally; sign(0) predicts class 0.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "maldbn/features.hpp"
#include "maldbn/matrix.hpp"
#include "maldbn/rng.hpp"

namespace maldbn {

struct LinearSvmModel {
    std::vector<double> w;
    double b = 0.0;
    double c = 1.0;

    bool operator==(const LinearSvmModel&) const = default;
};

struct SvmConfig {
    double c = 1.0;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;
};

/// Regularized objective lambda/2 * (|w|^2 + b^2) + mean hinge(1 - y(wx+b)).
inline double hinge_objective(const std::vector<double>& w, double b, const Matrix& x,
                              const std::vector<int>& y, double lambda) {
    double norm2 = b * b;
    for (double v : w) norm2 += v * v;
    double hinge = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double score = b;
        for (std::size_t c = 0; c < x.cols(); ++c) score += w[c] * x(r, c);
        const double yi = y[r] ? 1.0 : -1.0;
        const double slack = 1.0 - yi * score;
        if (slack > 0.0) hinge += slack;
    }
    return 0.5 * lambda * norm2 + hinge / static_cast<double>(x.rows());
}

struct SvmFitResult {
    LinearSvmModel model;
    std::vector<double> objective_curve;  // objective after each epoch
};

inline SvmFitResult fit_linear_svm(const Matrix& x, const std::vector<int>& y, const SvmConfig& cfg) {
    if (cfg.c <= 0.0) throw std::invalid_argument("fit_linear_svm: c must be positive");
    if (x.rows() == 0) throw std::invalid_argument("fit_linear_svm: empty training set");
    if (x.rows() != y.size()) throw std::invalid_argument("fit_linear_svm: x/y length mismatch");
    if (cfg.epochs < 1) throw std::invalid_argument("fit_linear_svm: epochs must be >= 1");

    const std::size_t n = x.rows(), d = x.cols();
    const double lambda = 1.0 / (cfg.c * static_cast<double>(n));
    std::vector<double> w(d, 0.0);
    double b = 0.0;
    SeededRng rng(cfg.seed);
    SvmFitResult out;

    std::uint64_t t = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t step = 0; step < n; ++step) {
            ++t;
            const auto i = static_cast<std::size_t>(rng.below(n));
            const double yi = y[i] ? 1.0 : -1.0;
            double score = b;
            for (std::size_t c = 0; c < d; ++c) score += w[c] * x(i, c);
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            const double decay = 1.0 - eta * lambda;  // = 1 - 1/t
            for (double& v : w) v *= decay;
            b *= decay;
            if (yi * score < 1.0) {
                for (std::size_t c = 0; c < d; ++c) w[c] += eta * yi * x(i, c);
                b += eta * yi;  // the implicit constant-1 feature
            }
        }
        out.objective_curve.push_back(hinge_objective(w, b, x, y, lambda));
    }
    out.model = LinearSvmModel{std::move(w), b, cfg.c};
    return out;
}

inline SvmFitResult fit_linear_svm(const EncodedDataset& train, const SvmConfig& cfg) {
    if (!train.labeled()) throw std::invalid_argument("fit_linear_svm: dataset is unlabeled");
    return fit_linear_svm(train.x, train.y, cfg);
}

inline double svm_score(const LinearSvmModel& model, const Matrix& x, std::size_t row) {
    if (x.cols() != model.w.size())
        throw std::invalid_argument("linear_svm: batch has " + std::to_string(x.cols()) +
                                    " columns, model expects " + std::to_string(model.w.size()));
    double score = model.b;
    for (std::size_t c = 0; c < x.cols(); ++c) score += model.w[c] * x(row, c);
    return score;
}

/// sign(w x + b): positive scores are malicious, zero falls to class 0.
inline std::vector<int> predict_linear_svm(const LinearSvmModel& model, const Matrix& x) {
    std::vector<int> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) out[r] = svm_score(model, x, r) > 0.0 ? 1 : 0;
    return out;
}

inline nlohmann::json svm_to_json(const LinearSvmModel& model) {
    return {{"w", model.w}, {"b", model.b}, {"c", model.c}};
}

inline LinearSvmModel svm_from_json(const nlohmann::json& j) {
    LinearSvmModel model;
    model.w = j.at("w").get<std::vector<double>>();
    model.b = j.at("b").get<double>();
    model.c = j.at("c").get<double>();
    return model;
}

}  // namespace maldbn
