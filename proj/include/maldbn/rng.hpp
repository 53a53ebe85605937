#pragma once

// Seeded, platform-stable randomness. The engine is std::mt19937_64 (fully
// specified by the C++ standard, so raw draws are identical everywhere); all
// value transforms are implemented here rather than with std::*_distribution,
// whose outputs are implementation-defined.
//
// Draw-order contract (tests rely on it):
//   - uniform():        one engine draw, mapped to [0,1) as (x >> 11) * 2^-53
//   - below(n):         one engine draw, reduced modulo n
//   - normal():         Box-Muller; draws two uniforms, returns one value and
//                       caches the second, so a pair costs two engine draws
//   - bernoulli_sample: one uniform per matrix entry, row-major order

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "maldbn/matrix.hpp"

namespace maldbn {

/// splitmix64 step; the basis for seed mixing.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Combines a base seed with a stream tag. Children derived this way depend
/// only on seeds, never on the parent's draw position.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t tag) {
    return splitmix64(base ^ (tag + 0x9e3779b97f4a7c15ULL + (base << 6) + (base >> 2)));
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return mix_seed(mix_seed(base, a), b);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix_seed(mix_seed(mix_seed(base, a), b), c);
}

class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0,1) from the top 53 bits of one draw.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Modulo reduction; the tiny bias is
    /// irrelevant at the n used here and keeps the mapping one-draw simple.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("SeededRng::below: n must be positive");
        return next_u64() % n;
    }

    /// Gaussian via Box-Muller on two uniform draws.
    double normal(double mean, double stddev) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + stddev * spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return mean + stddev * r * std::cos(theta);
    }

    /// Child generator for an independent stream; see mix_seed.
    SeededRng child(std::uint64_t tag) const { return SeededRng(mix_seed(seed_, tag)); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Fisher-Yates shuffle driven by below(); std::shuffle is not
/// platform-stable, this is.
template <typename T>
void shuffle(std::vector<T>& v, SeededRng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

/// Independent 0/1 draws, entry e is 1 with probability probs[e]; consumes
/// one uniform per entry in row-major order.
inline Matrix bernoulli_sample(const Matrix& probs, SeededRng& rng) {
    Matrix out(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs.values()[i];
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("bernoulli_sample: probability outside [0,1]");
        out.values()[i] = rng.uniform() < p ? 1.0 : 0.0;
    }
    return out;
}

}  // namespace maldbn
