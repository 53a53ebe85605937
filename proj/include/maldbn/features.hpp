#pragma once

// Feature preprocessing: app descriptor ingestion, vocabulary construction,
// binary encoding with a one-hot location block, and train/test splitting.
//
// Corpus file format: a JSON object with keys "zones" (array of strings) and
// "samples" (array of objects); each sample has "id" (string),
// "permissions" / "api_calls" / "behaviors" (arrays of strings), "zone"
// (string) and an optional "label" (integer 0 or 1). UTF-8, no comments.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "maldbn/matrix.hpp"
#include "maldbn/rng.hpp"

namespace maldbn {

struct AppSample {
    std::string id;
    std::set<std::string> permissions;
    std::set<std::string> api_calls;
    std::set<std::string> behaviors;
    std::string zone;
    std::optional<int> label;  // 1 = malicious, 0 = benign

    bool operator==(const AppSample&) const = default;
};

struct Corpus {
    std::vector<std::string> zones;  // declared zone universe
    std::vector<AppSample> samples;

    bool operator==(const Corpus&) const = default;
};

struct FeatureVocabulary {
    std::vector<std::string> features;  // lexicographically sorted, unique
    std::vector<std::string> zones;     // lexicographically sorted, unique

    std::size_t columns() const { return features.size() + zones.size(); }
};

struct EncodedDataset {
    Matrix x;                                // rows = samples, entries in {0,1}
    std::vector<int> y;                      // empty when the corpus is unlabeled
    std::vector<std::string> feature_names;  // labels of the feature block
    std::vector<std::string> zone_names;     // labels of the one-hot zone block
    std::vector<std::string> sample_ids;

    bool labeled() const { return !y.empty(); }
    std::size_t feature_cols() const { return feature_names.size(); }

    /// Column labels across both blocks; zone columns carry a "zone:" prefix.
    std::vector<std::string> column_labels() const {
        std::vector<std::string> out = feature_names;
        for (const auto& z : zone_names) out.push_back("zone:" + z);
        return out;
    }
};

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    bool stratified = true;
};

namespace detail {

inline std::string json_type_name(const nlohmann::json& j) { return j.type_name(); }

inline std::vector<std::string> string_array(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array()) throw std::runtime_error(where + ": expected array of strings, got " + json_type_name(j));
    std::vector<std::string> out;
    out.reserve(j.size());
    for (const auto& e : j) {
        if (!e.is_string()) throw std::runtime_error(where + ": expected string elements");
        out.push_back(e.get<std::string>());
    }
    return out;
}

}  // namespace detail

inline nlohmann::json corpus_to_json(const Corpus& corpus) {
    nlohmann::json j;
    j["zones"] = corpus.zones;
    auto& samples = j["samples"] = nlohmann::json::array();
    for (const auto& s : corpus.samples) {
        nlohmann::json js;
        js["id"] = s.id;
        js["permissions"] = s.permissions;
        js["api_calls"] = s.api_calls;
        js["behaviors"] = s.behaviors;
        js["zone"] = s.zone;
        if (s.label) js["label"] = *s.label;
        samples.push_back(std::move(js));
    }
    return j;
}

inline Corpus corpus_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::runtime_error("corpus: top level must be an object");
    if (!j.contains("zones")) throw std::runtime_error("corpus: missing \"zones\"");
    if (!j.contains("samples")) throw std::runtime_error("corpus: missing \"samples\"");

    Corpus corpus;
    corpus.zones = detail::string_array(j["zones"], "corpus.zones");

    const auto& samples = j["samples"];
    if (!samples.is_array()) throw std::runtime_error("corpus.samples: expected array");
    std::unordered_set<std::string> seen_ids;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const std::string where = "corpus.samples[" + std::to_string(i) + "]";
        const auto& js = samples[i];
        if (!js.is_object()) throw std::runtime_error(where + ": expected object");
        AppSample s;
        if (!js.contains("id") || !js["id"].is_string())
            throw std::runtime_error(where + ".id: expected string");
        s.id = js["id"].get<std::string>();
        if (s.id.empty()) throw std::runtime_error(where + ".id: must be nonempty");
        if (!seen_ids.insert(s.id).second)
            throw std::runtime_error(where + ".id: duplicate id \"" + s.id + "\"");
        for (const char* key : {"permissions", "api_calls", "behaviors"})
            if (!js.contains(key)) throw std::runtime_error(where + "." + key + ": missing");
        auto perms = detail::string_array(js["permissions"], where + ".permissions");
        auto apis = detail::string_array(js["api_calls"], where + ".api_calls");
        auto behs = detail::string_array(js["behaviors"], where + ".behaviors");
        s.permissions.insert(perms.begin(), perms.end());
        s.api_calls.insert(apis.begin(), apis.end());
        s.behaviors.insert(behs.begin(), behs.end());
        if (!js.contains("zone") || !js["zone"].is_string())
            throw std::runtime_error(where + ".zone: expected string");
        s.zone = js["zone"].get<std::string>();
        if (js.contains("label")) {
            if (!js["label"].is_number_integer())
                throw std::runtime_error(where + ".label: expected integer 0 or 1");
            const int label = js["label"].get<int>();
            if (label != 0 && label != 1)
                throw std::runtime_error(where + ".label: expected 0 or 1, got " + std::to_string(label));
            s.label = label;
        }
        corpus.samples.push_back(std::move(s));
    }
    return corpus;
}

/// Reads a corpus file; malformed records are reported with their index and
/// field, duplicate ids are rejected.
inline Corpus load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_corpus: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_corpus: " + path + ": invalid JSON: " + e.what());
    }
    try {
        return corpus_from_json(j);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error("load_corpus: " + path + ": " + e.what());
    }
}

inline void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_corpus: cannot open " + path + " for writing");
    out << corpus_to_json(corpus).dump(2) << '\n';
}

/// Union of all feature names across the corpus plus the declared and
/// observed zones, each section sorted lexicographically. Order-insensitive
/// in the corpus, so any sample order yields the same vocabulary.
inline FeatureVocabulary build_vocab(const Corpus& corpus) {
    if (corpus.samples.empty()) throw std::invalid_argument("build_vocab: empty corpus");
    std::set<std::string> features;
    std::set<std::string> zones(corpus.zones.begin(), corpus.zones.end());
    for (const auto& s : corpus.samples) {
        features.insert(s.permissions.begin(), s.permissions.end());
        features.insert(s.api_calls.begin(), s.api_calls.end());
        features.insert(s.behaviors.begin(), s.behaviors.end());
        zones.insert(s.zone);
    }
    FeatureVocabulary v;
    v.features.assign(features.begin(), features.end());
    v.zones.assign(zones.begin(), zones.end());
    return v;
}

/// Bit-encodes the corpus: feature column = 1 iff the sample uses that name,
/// zone block is one-hot. Labels must be all present or all absent; an
/// unlabeled corpus yields an empty label vector (pre-training input).
inline EncodedDataset encode(const Corpus& corpus, const FeatureVocabulary& vocab) {
    std::unordered_map<std::string, std::size_t> feature_col;
    for (std::size_t i = 0; i < vocab.features.size(); ++i) feature_col.emplace(vocab.features[i], i);
    std::unordered_map<std::string, std::size_t> zone_col;
    for (std::size_t i = 0; i < vocab.zones.size(); ++i) zone_col.emplace(vocab.zones[i], i);

    const std::size_t n = corpus.samples.size();
    const std::size_t f = vocab.features.size();
    std::size_t labeled_count = 0;
    for (const auto& s : corpus.samples)
        if (s.label) ++labeled_count;
    if (labeled_count != 0 && labeled_count != n)
        throw std::invalid_argument("encode: corpus mixes labeled and unlabeled samples (" +
                                    std::to_string(labeled_count) + " of " + std::to_string(n) + " labeled)");

    EncodedDataset ds;
    ds.x = Matrix(n, vocab.columns());
    ds.feature_names = vocab.features;
    ds.zone_names = vocab.zones;
    for (std::size_t r = 0; r < n; ++r) {
        const auto& s = corpus.samples[r];
        for (const auto* names : {&s.permissions, &s.api_calls, &s.behaviors})
            for (const auto& name : *names) {
                auto it = feature_col.find(name);
                if (it != feature_col.end()) ds.x(r, it->second) = 1.0;
            }
        auto zit = zone_col.find(s.zone);
        if (zit == zone_col.end())
            throw std::invalid_argument("encode: sample \"" + s.id + "\" has unknown zone \"" + s.zone + "\"");
        ds.x(r, f + zit->second) = 1.0;
        ds.sample_ids.push_back(s.id);
        if (s.label) ds.y.push_back(*s.label);
    }
    return ds;
}

struct DecodedSample {
    std::string id;
    std::set<std::string> features;  // flat union; section membership is not encoded
    std::string zone;
    std::optional<int> label;
};

/// Inverse of encode up to the flattening of the three name sections.
inline std::vector<DecodedSample> decode(const EncodedDataset& ds) {
    std::vector<DecodedSample> out;
    const std::size_t f = ds.feature_cols();
    for (std::size_t r = 0; r < ds.x.rows(); ++r) {
        DecodedSample d;
        d.id = ds.sample_ids[r];
        for (std::size_t c = 0; c < f; ++c)
            if (ds.x(r, c) != 0.0) d.features.insert(ds.feature_names[c]);
        for (std::size_t z = 0; z < ds.zone_names.size(); ++z)
            if (ds.x(r, f + z) != 0.0) d.zone = ds.zone_names[z];
        if (ds.labeled()) d.label = ds.y[r];
        out.push_back(std::move(d));
    }
    return out;
}

namespace detail {

inline EncodedDataset take_rows(const EncodedDataset& ds, const std::vector<std::size_t>& idx) {
    EncodedDataset out;
    out.x = Matrix(idx.size(), ds.x.cols());
    out.feature_names = ds.feature_names;
    out.zone_names = ds.zone_names;
    for (std::size_t r = 0; r < idx.size(); ++r) {
        for (std::size_t c = 0; c < ds.x.cols(); ++c) out.x(r, c) = ds.x(idx[r], c);
        out.sample_ids.push_back(ds.sample_ids[idx[r]]);
        if (ds.labeled()) out.y.push_back(ds.y[idx[r]]);
    }
    return out;
}

}  // namespace detail

/// Disjoint, exhaustive train/test partition. The train size is
/// round-half-up(train_fraction * n); stratified mode keeps each class count
/// within one sample of its proportional share (largest-remainder rule,
/// remainder ties to the lower class). Row order follows the input dataset.
inline std::pair<EncodedDataset, EncodedDataset> split(const EncodedDataset& ds, const SplitSpec& spec) {
    const std::size_t n = ds.x.rows();
    if (n < 2) throw std::invalid_argument("split: need at least 2 samples");
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw std::invalid_argument("split: train_fraction must lie in (0,1)");
    const auto train_total = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n) + 0.5));
    if (train_total == 0 || train_total == n)
        throw std::invalid_argument("split: fraction " + std::to_string(spec.train_fraction) +
                                    " leaves an empty side for n = " + std::to_string(n));
    if (spec.stratified && !ds.labeled())
        throw std::invalid_argument("split: stratified split requires labels");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    SeededRng rng(spec.seed);
    shuffle(order, rng);

    std::vector<std::size_t> train_idx, test_idx;
    if (!spec.stratified) {
        train_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_total));
        test_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(train_total), order.end());
    } else {
        std::size_t counts[2] = {0, 0};
        for (int label : ds.y) ++counts[label];
        if (counts[0] == 0 || counts[1] == 0)
            throw std::invalid_argument("split: stratified split requires at least one sample per class");
        const double exact0 = spec.train_fraction * static_cast<double>(counts[0]);
        const double exact1 = spec.train_fraction * static_cast<double>(counts[1]);
        std::size_t quota[2] = {static_cast<std::size_t>(std::floor(exact0)),
                                static_cast<std::size_t>(std::floor(exact1))};
        std::size_t remaining = train_total - std::min(train_total, quota[0] + quota[1]);
        const double rem[2] = {exact0 - std::floor(exact0), exact1 - std::floor(exact1)};
        // largest remainder first; tie goes to class 0
        std::size_t first = (rem[1] > rem[0]) ? 1 : 0;
        for (std::size_t k = 0; k < remaining; ++k) {
            const std::size_t cls = (k == 0) ? first : 1 - first;
            if (quota[cls] < counts[cls])
                ++quota[cls];
            else
                ++quota[1 - cls];
        }
        for (std::size_t i : order) {
            const int cls = ds.y[i];
            if (quota[cls] > 0) {
                train_idx.push_back(i);
                --quota[cls];
            } else {
                test_idx.push_back(i);
            }
        }
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return {detail::take_rows(ds, train_idx), detail::take_rows(ds, test_idx)};
}

}  // namespace maldbn
