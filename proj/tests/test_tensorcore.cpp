#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "maldbn/matrix.hpp"
#include "maldbn/rng.hpp"

using namespace maldbn;

namespace {

// independent triple-loop oracle, accumulating over k in ascending order
Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            c(i, j) = acc;
        }
    return c;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, SeededRng& rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (double& v : m.values()) v = lo + (hi - lo) * rng.uniform();
    return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    REQUIRE(a.rows() == b.rows());
    REQUIRE(a.cols() == b.cols());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::fabs(a.values()[i] - b.values()[i]));
    return worst;
}

}  // namespace

TEST_CASE("matmul identity is a no-op") {
    SeededRng rng(7);
    const Matrix m = random_matrix(3, 5, rng);
    CHECK(matmul(Matrix::identity(3), m) == m);
}

TEST_CASE("matmul on scalars multiplies") {
    const Matrix a(1, 1, {2.0}), b(1, 1, {3.0});
    CHECK(matmul(a, b)(0, 0) == 6.0);
}

TEST_CASE("matmul matches the naive triple-loop oracle") {
    SeededRng rng(11);
    const Matrix a = random_matrix(4, 5, rng), b = random_matrix(5, 2, rng);
    CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) <= 1e-12);
}

TEST_CASE("matmul agrees with the oracle on 100 random shapes") {
    SeededRng rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = 1 + rng.below(8), k = 1 + rng.below(8), m = 1 + rng.below(8);
        const Matrix a = random_matrix(n, k, rng), b = random_matrix(k, m, rng);
        REQUIRE(max_abs_diff(matmul(a, b), naive_matmul(a, b)) <= 1e-12);
    }
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
    CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 2)), std::invalid_argument);
}

TEST_CASE("matrix construction validates the value count") {
    CHECK_THROWS_AS(Matrix(2, 2, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("sigmoid fixed points") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(2.0) == Catch::Approx(0.8807970779778823).epsilon(1e-15));
}

TEST_CASE("sigmoid of x and -x sums to 1") {
    SeededRng rng(3);
    for (int i = 0; i < 200; ++i) {
        const double x = -8.0 + 16.0 * rng.uniform();
        CHECK(sigmoid(x) + sigmoid(-x) == Catch::Approx(1.0).margin(1e-15));
    }
}

TEST_CASE("sigmoid is strictly monotone on sampled pairs") {
    SeededRng rng(4);
    for (int i = 0; i < 500; ++i) {
        double x = -20.0 + 40.0 * rng.uniform();
        double y = -20.0 + 40.0 * rng.uniform();
        if (x == y) continue;
        if (x > y) std::swap(x, y);
        REQUIRE(sigmoid(x) < sigmoid(y));
    }
}

TEST_CASE("softmax uniform and shifted inputs") {
    const auto uniform = softmax({0.0, 0.0});
    CHECK(uniform[0] == 0.5);
    CHECK(uniform[1] == 0.5);

    const auto base = softmax({0.3, -1.2});
    const auto shifted = softmax({100.3, 98.8});
    CHECK(shifted[0] == Catch::Approx(base[0]).epsilon(1e-12));
    CHECK(shifted[1] == Catch::Approx(base[1]).epsilon(1e-12));
}

TEST_CASE("softmax of [1,2,3] matches direct exp-normalization") {
    const auto p = softmax({1.0, 2.0, 3.0});
    CHECK(p[0] == Catch::Approx(0.09003057317038046).epsilon(1e-14));
    CHECK(p[1] == Catch::Approx(0.24472847105479764).epsilon(1e-14));
    CHECK(p[2] == Catch::Approx(0.6652409557748218).epsilon(1e-14));
}

TEST_CASE("softmax rejects empty input") {
    CHECK_THROWS_AS(softmax({}), std::invalid_argument);
}

TEST_CASE("softmax sums to 1 for 1000 random vectors including huge entries") {
    SeededRng rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto len = 1 + rng.below(64);
        std::vector<double> logits(len);
        for (auto& v : logits) v = -500.0 + 1000.0 * rng.uniform();
        const auto p = softmax(logits);
        double sum = 0.0;
        for (double v : p) {
            REQUIRE(v > 0.0);
            sum += v;
        }
        REQUIRE(std::fabs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("bernoulli_sample at the endpoints is deterministic") {
    SeededRng rng(1);
    const Matrix zeros(3, 4, 0.0), ones(3, 4, 1.0);
    CHECK(bernoulli_sample(zeros, rng) == Matrix(3, 4, 0.0));
    CHECK(bernoulli_sample(ones, rng) == Matrix(3, 4, 1.0));
}

TEST_CASE("bernoulli_sample rejects probabilities outside [0,1]") {
    SeededRng rng(1);
    CHECK_THROWS_AS(bernoulli_sample(Matrix(1, 1, {1.5}), rng), std::invalid_argument);
    CHECK_THROWS_AS(bernoulli_sample(Matrix(1, 1, {-0.1}), rng), std::invalid_argument);
}

TEST_CASE("bernoulli_sample at p=0.5 has sample mean near 0.5") {
    SeededRng rng(123);
    const Matrix half(100, 100, 0.5);
    const Matrix draws = bernoulli_sample(half, rng);
    double mean = 0.0;
    for (double v : draws.values()) mean += v;
    mean /= static_cast<double>(draws.size());
    CHECK(std::fabs(mean - 0.5) < 0.02);
}

TEST_CASE("same seed gives identical draw sequences") {
    SeededRng a(987654321), b(987654321);
    for (int i = 0; i < 10000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform stays in [0,1)") {
    SeededRng rng(5);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("child streams do not depend on parent draw position") {
    SeededRng parent(77);
    SeededRng child_before = parent.child(3);
    for (int i = 0; i < 100; ++i) parent.next_u64();
    SeededRng child_after = parent.child(3);
    for (int i = 0; i < 100; ++i) REQUIRE(child_before.next_u64() == child_after.next_u64());
}

TEST_CASE("mix_seed separates streams") {
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 2, 3) != mix_seed(1, 3, 2));
    CHECK(mix_seed(0, 0, 0, 0) != mix_seed(0, 0, 0, 1));
}

TEST_CASE("normal draws are deterministic and roughly centered") {
    SeededRng a(2024), b(2024);
    double mean = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double v = a.normal(0.0, 0.01);
        REQUIRE(v == b.normal(0.0, 0.01));
        mean += v;
    }
    mean /= 10000.0;
    CHECK(std::fabs(mean) < 0.001);
}

TEST_CASE("shuffle is a deterministic permutation") {
    std::vector<int> v1{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, v2 = v1, sorted = v1;
    SeededRng a(8), b(8);
    shuffle(v1, a);
    shuffle(v2, b);
    CHECK(v1 == v2);
    std::sort(v2.begin(), v2.end());
    CHECK(v2 == sorted);
}
