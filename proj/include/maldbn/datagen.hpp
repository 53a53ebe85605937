#pragma once

// Synthetic corpus generator with a planted, optionally zone-conditioned
// rule. In the zone-conditioned default the label is the parity of
// rule_arity feature bits against a per-zone target, which makes location
// informative and the classes non-linearly separable in the raw bits; with
// zone conditioning off a single exact bit pattern marks malicious samples.
// Class counts are met exactly by rejection sampling.
//
// Streams derived from spec.seed: rule = mix(seed,0), malicious samples =
// mix(seed,1), benign samples = mix(seed,2,salt), noise flips =
// mix(seed,3,salt). The suite varies only the salt, so all ten corpora share
// the rule and the malicious block.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "maldbn/features.hpp"
#include "maldbn/rng.hpp"

namespace maldbn {

struct GenSpec {
    std::size_t n_malicious = 500;
    std::size_t n_benign = 500;
    std::size_t n_features = 64;
    std::size_t n_zones = 4;
    std::size_t rule_arity = 2;
    bool zone_conditioned = true;
    double label_noise = 0.0;
    std::uint64_t seed = 0;
};

struct ZoneRule {
    std::vector<std::size_t> feature_indices;
    int target_parity = 0;           // used when zone-conditioned
    std::vector<int> target_pattern; // used otherwise
};

struct GroundTruth {
    bool zone_conditioned = true;
    std::vector<ZoneRule> rules;  // one per zone, or a single global rule
    std::vector<std::string> flipped_ids;
};

/// The 14 distinct §III-style feature names seeding every generated
/// vocabulary, in first-occurrence order.
inline const std::vector<std::string>& stock_feature_names() {
    static const std::vector<std::string> names = {
        "INVOKE_INTERNAL_HANDLER", "ACCESS_NORTON_SECURITY", "READ_FRAME_BUFFER", "WRITE_GMAIL",
        "READ_PROFILE", "WAVE_LOCK", "ACCESS_WIMAX_STATE", "VIBRATION", "ACCESS_GPS",
        "ACCESS_COARSE_UPDATES", "INSTALL_THEME", "RECEIVE_BROADCASTS", "READ_INPUT_STATE", "UNLOCK"};
    return names;
}

inline void validate(const GenSpec& spec) {
    if (spec.n_features == 0) throw std::invalid_argument("gen spec: n_features must be positive");
    if (spec.n_zones == 0) throw std::invalid_argument("gen spec: n_zones must be positive");
    if (spec.rule_arity == 0) throw std::invalid_argument("gen spec: rule_arity must be positive");
    if (spec.zone_conditioned && spec.rule_arity < 2)
        throw std::invalid_argument("gen spec: zone-conditioned rules need rule_arity >= 2");
    if (spec.rule_arity > spec.n_features)
        throw std::invalid_argument("gen spec: rule_arity exceeds n_features");
    if (!(spec.label_noise >= 0.0 && spec.label_noise < 0.5))
        throw std::invalid_argument("gen spec: label_noise must lie in [0, 0.5)");
    if (spec.n_malicious + spec.n_benign == 0)
        throw std::invalid_argument("gen spec: no samples requested");
}

/// Label assigned by the planted rule to a (zone, bits) pair.
inline int rule_label(const GroundTruth& truth, std::size_t zone_index, const std::vector<int>& bits) {
    const ZoneRule& rule = truth.zone_conditioned ? truth.rules.at(zone_index) : truth.rules.at(0);
    if (truth.zone_conditioned) {
        int parity = 0;
        for (std::size_t f : rule.feature_indices) parity ^= bits[f];
        return parity == rule.target_parity ? 1 : 0;
    }
    for (std::size_t i = 0; i < rule.feature_indices.size(); ++i)
        if (bits[rule.feature_indices[i]] != rule.target_pattern[i]) return 0;
    return 1;
}

namespace detail {

inline std::string zero_pad(std::size_t v, int width) {
    std::string s = std::to_string(v);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

inline std::vector<std::string> gen_feature_names(std::size_t n) {
    std::vector<std::string> names;
    const auto& stock = stock_feature_names();
    for (std::size_t i = 0; i < n && i < stock.size(); ++i) names.push_back(stock[i]);
    for (std::size_t i = names.size(); i < n; ++i) names.push_back("FEATURE_" + zero_pad(i, 4));
    return names;
}

inline std::vector<std::size_t> sample_distinct(std::size_t count, std::size_t universe, SeededRng& rng) {
    std::vector<std::size_t> pool(universe);
    for (std::size_t i = 0; i < universe; ++i) pool[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(universe - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

inline AppSample make_sample(const std::string& id, const std::vector<int>& bits,
                             const std::vector<std::string>& feature_names, const std::string& zone,
                             int label) {
    AppSample s;
    s.id = id;
    for (std::size_t f = 0; f < bits.size(); ++f) {
        if (!bits[f]) continue;
        switch (f % 3) {
            case 0: s.permissions.insert(feature_names[f]); break;
            case 1: s.api_calls.insert(feature_names[f]); break;
            default: s.behaviors.insert(feature_names[f]); break;
        }
    }
    s.zone = zone;
    s.label = label;
    return s;
}

inline std::pair<Corpus, GroundTruth> generate_impl(const GenSpec& spec, std::uint64_t salt) {
    validate(spec);
    const auto feature_names = gen_feature_names(spec.n_features);
    std::vector<std::string> zone_names;
    for (std::size_t z = 0; z < spec.n_zones; ++z) zone_names.push_back("Z" + std::to_string(z));

    GroundTruth truth;
    truth.zone_conditioned = spec.zone_conditioned;
    SeededRng rule_rng(mix_seed(spec.seed, 0));
    const std::size_t rule_count = spec.zone_conditioned ? spec.n_zones : 1;
    for (std::size_t z = 0; z < rule_count; ++z) {
        ZoneRule rule;
        rule.feature_indices = sample_distinct(spec.rule_arity, spec.n_features, rule_rng);
        if (spec.zone_conditioned) {
            rule.target_parity = static_cast<int>(rule_rng.below(2));
        } else {
            for (std::size_t i = 0; i < spec.rule_arity; ++i)
                rule.target_pattern.push_back(static_cast<int>(rule_rng.below(2)));
        }
        truth.rules.push_back(std::move(rule));
    }

    Corpus corpus;
    corpus.zones = zone_names;
    const auto fill_class = [&](int wanted_label, std::size_t count, SeededRng& rng,
                                const std::string& id_prefix) {
        const std::uint64_t budget = 1000ULL * static_cast<std::uint64_t>(count);
        std::uint64_t attempts = 0;
        std::size_t produced = 0;
        std::vector<int> bits(spec.n_features);
        while (produced < count) {
            if (attempts++ >= budget)
                throw std::runtime_error("generate: rejection budget exhausted for " +
                                         std::string(wanted_label ? "malicious" : "benign") +
                                         " samples (" + std::to_string(produced) + " of " +
                                         std::to_string(count) + " after " + std::to_string(budget) +
                                         " attempts)");
            const auto zone = static_cast<std::size_t>(rng.below(spec.n_zones));
            for (auto& bit : bits) bit = static_cast<int>(rng.below(2));
            if (rule_label(truth, zone, bits) != wanted_label) continue;
            corpus.samples.push_back(make_sample(id_prefix + zero_pad(produced, 5), bits, feature_names,
                                                 zone_names[zone], wanted_label));
            ++produced;
        }
    };

    SeededRng mal_rng(mix_seed(spec.seed, 1));
    fill_class(1, spec.n_malicious, mal_rng, "mal_");
    SeededRng ben_rng(mix_seed(spec.seed, 2, salt));
    fill_class(0, spec.n_benign, ben_rng, "ben_");

    const std::size_t total = corpus.samples.size();
    const auto flips = static_cast<std::size_t>(std::llround(spec.label_noise * static_cast<double>(total)));
    if (flips > 0) {
        SeededRng noise_rng(mix_seed(spec.seed, 3, salt));
        for (std::size_t idx : sample_distinct(flips, total, noise_rng)) {
            auto& s = corpus.samples[idx];
            s.label = 1 - *s.label;
            truth.flipped_ids.push_back(s.id);
        }
        std::sort(truth.flipped_ids.begin(), truth.flipped_ids.end());
    }
    return {std::move(corpus), std::move(truth)};
}

}  // namespace detail

inline std::pair<Corpus, GroundTruth> generate(const GenSpec& spec) {
    return detail::generate_impl(spec, 0);
}

/// The ten-corpus sweep: benign counts 500, 1000, ..., 5000 with the base
/// spec's malicious count, shared rule and shared malicious block.
inline std::vector<std::pair<Corpus, GroundTruth>> generate_suite(const GenSpec& base) {
    std::vector<std::pair<Corpus, GroundTruth>> out;
    for (std::size_t i = 0; i < 10; ++i) {
        GenSpec spec = base;
        spec.n_benign = 500 * (i + 1);
        out.push_back(detail::generate_impl(spec, i));
    }
    return out;
}

inline nlohmann::json ground_truth_to_json(const GroundTruth& truth) {
    nlohmann::json rules = nlohmann::json::array();
    for (const auto& rule : truth.rules) {
        nlohmann::json jr;
        jr["feature_indices"] = rule.feature_indices;
        if (truth.zone_conditioned)
            jr["target_parity"] = rule.target_parity;
        else
            jr["target_pattern"] = rule.target_pattern;
        rules.push_back(std::move(jr));
    }
    return {{"zone_conditioned", truth.zone_conditioned},
            {"rules", rules},
            {"flipped_ids", truth.flipped_ids}};
}

inline GroundTruth ground_truth_from_json(const nlohmann::json& j) {
    GroundTruth truth;
    truth.zone_conditioned = j.at("zone_conditioned").get<bool>();
    for (const auto& jr : j.at("rules")) {
        ZoneRule rule;
        rule.feature_indices = jr.at("feature_indices").get<std::vector<std::size_t>>();
        if (truth.zone_conditioned)
            rule.target_parity = jr.at("target_parity").get<int>();
        else
            rule.target_pattern = jr.at("target_pattern").get<std::vector<int>>();
        truth.rules.push_back(std::move(rule));
    }
    truth.flipped_ids = j.at("flipped_ids").get<std::vector<std::string>>();
    return truth;
}

}  // namespace maldbn
