#pragma once

// Dense row-major matrices and the elementwise nonlinearities used by every
// learning module. All arithmetic is IEEE double; storage order is part of
// the contract (tests hand-index entries).

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace maldbn {

class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), data_(std::move(values)) {
        if (data_.size() != rows_ * cols_)
            throw std::invalid_argument("Matrix: values length " + std::to_string(data_.size()) +
                                        " does not equal rows*cols = " + std::to_string(rows_ * cols_));
    }

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        Matrix m;
        m.rows_ = rows.size();
        m.cols_ = rows.size() ? rows.begin()->size() : 0;
        m.data_.reserve(m.rows_ * m.cols_);
        for (const auto& r : rows) {
            if (r.size() != m.cols_)
                throw std::invalid_argument("Matrix::from_rows: ragged rows");
            m.data_.insert(m.data_.end(), r.begin(), r.end());
        }
        return m;
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n, 0.0);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

    const std::vector<double>& values() const { return data_; }
    std::vector<double>& values() { return data_; }

    Matrix row(std::size_t r) const {
        Matrix m(1, cols_);
        for (std::size_t c = 0; c < cols_; ++c) m(0, c) = (*this)(r, c);
        return m;
    }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

/// Standard matrix product. Accumulation runs over k in ascending order, so
/// the naive triple-loop oracle reproduces it bit for bit.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.rows()) + ")");
    Matrix c(a.rows(), b.cols(), 0.0);
    const std::size_t n = a.rows(), k_max = a.cols(), m = b.cols();
    const double* pa = a.values().data();
    const double* pb = b.values().data();
    double* pc = c.values().data();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < k_max; ++k) {
            const double aik = pa[i * k_max + k];
            if (aik == 0.0) continue;
            const double* brow = pb + k * m;
            double* crow = pc + i * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Elementwise logistic function; outputs lie strictly in (0,1).
inline Matrix sigmoid(const Matrix& x) {
    Matrix y(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) y.values()[i] = sigmoid(x.values()[i]);
    return y;
}

/// Exp-normalization with max-subtraction, stable for entries of any
/// magnitude. Entries are positive and sum to 1 (within round-off).
inline std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) throw std::invalid_argument("softmax: empty input");
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

/// Row-wise softmax of a logit matrix.
inline Matrix softmax_rows(const Matrix& logits) {
    if (logits.cols() == 0) throw std::invalid_argument("softmax_rows: zero columns");
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        double mx = logits(r, 0);
        for (std::size_t c = 1; c < logits.cols(); ++c) mx = std::max(mx, logits(r, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < logits.cols(); ++c) {
            const double e = std::exp(logits(r, c) - mx);
            out(r, c) = e;
            sum += e;
        }
        for (std::size_t c = 0; c < logits.cols(); ++c) out(r, c) /= sum;
    }
    return out;
}

}  // namespace maldbn
