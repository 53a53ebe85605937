#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "maldbn/datagen.hpp"
#include "maldbn/features.hpp"

using namespace maldbn;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "maldbn_features_test";
    fs::create_directories(dir);
    return dir / name;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

AppSample sample(const std::string& id, std::set<std::string> perms, const std::string& zone,
                 std::optional<int> label = std::nullopt) {
    AppSample s;
    s.id = id;
    s.permissions = std::move(perms);
    s.zone = zone;
    s.label = label;
    return s;
}

}  // namespace

TEST_CASE("load_corpus accepts an empty sample list") {
    const auto path = temp_file("empty.json");
    write_file(path, R"({"zones": ["Z0"], "samples": []})");
    const Corpus corpus = load_corpus(path.string());
    CHECK(corpus.samples.empty());
    CHECK(corpus.zones == std::vector<std::string>{"Z0"});
}

TEST_CASE("load_corpus echoes a single record") {
    const auto path = temp_file("one.json");
    write_file(path, R"({"zones": ["Z0"], "samples": [
        {"id": "a1", "permissions": ["ACCESS_GPS"], "api_calls": [], "behaviors": [],
         "zone": "Z0", "label": 1}]})");
    const Corpus corpus = load_corpus(path.string());
    REQUIRE(corpus.samples.size() == 1);
    const AppSample& s = corpus.samples[0];
    CHECK(s.id == "a1");
    CHECK(s.permissions == std::set<std::string>{"ACCESS_GPS"});
    CHECK(s.api_calls.empty());
    CHECK(s.zone == "Z0");
    CHECK(s.label == 1);
}

TEST_CASE("corpus write/load roundtrip preserves the generated corpus") {
    GenSpec spec;
    spec.n_malicious = 20;
    spec.n_benign = 30;
    spec.n_features = 10;
    spec.n_zones = 3;
    spec.seed = 5;
    const auto [corpus, truth] = generate(spec);
    const auto path = temp_file("roundtrip.json");
    save_corpus(corpus, path.string());
    CHECK(load_corpus(path.string()) == corpus);
}

TEST_CASE("load_corpus names the record and field of a malformed entry") {
    const auto path = temp_file("bad_zone.json");
    write_file(path, R"({"zones": ["Z0"], "samples": [
        {"id": "a", "permissions": [], "api_calls": [], "behaviors": [], "zone": "Z0"},
        {"id": "b", "permissions": [], "api_calls": [], "behaviors": [], "zone": 5}]})");
    try {
        load_corpus(path.string());
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("samples[1]") != std::string::npos);
        CHECK(msg.find("zone") != std::string::npos);
    }
}

TEST_CASE("load_corpus rejects bad labels and duplicate ids") {
    const auto bad_label = temp_file("bad_label.json");
    write_file(bad_label, R"({"zones": ["Z0"], "samples": [
        {"id": "a", "permissions": [], "api_calls": [], "behaviors": [], "zone": "Z0", "label": 2}]})");
    CHECK_THROWS_WITH(load_corpus(bad_label.string()),
                      Catch::Matchers::ContainsSubstring("label"));

    const auto dup = temp_file("dup.json");
    write_file(dup, R"({"zones": ["Z0"], "samples": [
        {"id": "a", "permissions": [], "api_calls": [], "behaviors": [], "zone": "Z0"},
        {"id": "a", "permissions": [], "api_calls": [], "behaviors": [], "zone": "Z0"}]})");
    CHECK_THROWS_WITH(load_corpus(dup.string()), Catch::Matchers::ContainsSubstring("duplicate"));
}

TEST_CASE("build_vocab deduplicates and sorts") {
    Corpus corpus;
    corpus.zones = {"Z1", "Z0"};
    corpus.samples = {sample("a", {"B", "A"}, "Z0"), sample("b", {"A", "B"}, "Z1")};
    const auto vocab = build_vocab(corpus);
    CHECK(vocab.features == std::vector<std::string>{"A", "B"});
    CHECK(vocab.zones == std::vector<std::string>{"Z0", "Z1"});

    Corpus shared;
    shared.zones = {"Z0"};
    shared.samples = {sample("a", {"X", "Y"}, "Z0"), sample("b", {"X", "Y"}, "Z0")};
    CHECK(build_vocab(shared).features == std::vector<std::string>{"X", "Y"});
}

TEST_CASE("build_vocab rejects an empty corpus") {
    CHECK_THROWS_AS(build_vocab(Corpus{}), std::invalid_argument);
}

TEST_CASE("the stock 20-name feature list deduplicates to 14 names") {
    // the raw list contains six names twice: ACCESS_COARSE_UPDATES, ACCESS_GPS,
    // ACCESS_NORTON_SECURITY, ACCESS_WIMAX_STATE, READ_PROFILE, WAVE_LOCK
    const std::vector<std::string> raw = {
        "INVOKE_INTERNAL_HANDLER", "ACCESS_NORTON_SECURITY", "READ_FRAME_BUFFER", "WRITE_GMAIL",
        "READ_PROFILE", "WAVE_LOCK", "ACCESS_WIMAX_STATE", "VIBRATION", "ACCESS_GPS",
        "ACCESS_COARSE_UPDATES", "READ_PROFILE", "ACCESS_WIMAX_STATE", "ACCESS_COARSE_UPDATES",
        "INSTALL_THEME", "RECEIVE_BROADCASTS", "ACCESS_GPS", "READ_INPUT_STATE", "WAVE_LOCK",
        "ACCESS_NORTON_SECURITY", "UNLOCK"};
    REQUIRE(raw.size() == 20);

    Corpus corpus;
    corpus.zones = {"Z0"};
    AppSample s;
    s.id = "a";
    s.zone = "Z0";
    // spread the raw list across the three sections, duplicates landing in
    // different sections so the cross-section union is exercised
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (i % 3 == 0)
            s.permissions.insert(raw[i]);
        else if (i % 3 == 1)
            s.api_calls.insert(raw[i]);
        else
            s.behaviors.insert(raw[i]);
    }
    corpus.samples = {s};

    const auto vocab = build_vocab(corpus);
    CHECK(vocab.features.size() == 14);
    CHECK(std::is_sorted(vocab.features.begin(), vocab.features.end()));
    CHECK(stock_feature_names().size() == 14);
}

TEST_CASE("encode writes the one-hot zone block") {
    Corpus corpus;
    corpus.zones = {"Z0", "Z1"};
    corpus.samples = {sample("empty", {}, "Z0", 0)};
    FeatureVocabulary vocab;
    vocab.features = {"F0", "F1", "F2"};
    vocab.zones = {"Z0", "Z1"};
    const auto ds = encode(corpus, vocab);
    CHECK(ds.x == Matrix::from_rows({{0, 0, 0, 1, 0}}));
    CHECK(ds.y == std::vector<int>{0});
}

TEST_CASE("encode sets every feature bit for a full sample") {
    Corpus corpus;
    corpus.zones = {"Z0"};
    AppSample s = sample("full", {"F0", "F1"}, "Z0", 1);
    s.api_calls = {"F2"};
    s.behaviors = {"F3"};
    corpus.samples = {s};
    const auto vocab = build_vocab(corpus);
    const auto ds = encode(corpus, vocab);
    for (std::size_t c = 0; c < 4; ++c) CHECK(ds.x(0, c) == 1.0);
}

TEST_CASE("encode rejects unknown zones and mixed labeling") {
    FeatureVocabulary vocab;
    vocab.features = {"F"};
    vocab.zones = {"Z0"};

    Corpus bad_zone;
    bad_zone.zones = {"Z0"};
    bad_zone.samples = {sample("s9", {}, "Z9", 0)};
    CHECK_THROWS_WITH(encode(bad_zone, vocab), Catch::Matchers::ContainsSubstring("s9"));

    Corpus mixed;
    mixed.zones = {"Z0"};
    mixed.samples = {sample("a", {}, "Z0", 0), sample("b", {}, "Z0")};
    CHECK_THROWS_WITH(encode(mixed, vocab), Catch::Matchers::ContainsSubstring("mixes"));
}

TEST_CASE("an unlabeled corpus encodes with an empty label vector") {
    Corpus corpus;
    corpus.zones = {"Z0"};
    corpus.samples = {sample("a", {"F"}, "Z0"), sample("b", {}, "Z0")};
    const auto ds = encode(corpus, build_vocab(corpus));
    CHECK_FALSE(ds.labeled());
    CHECK(ds.x.rows() == 2);
}

TEST_CASE("decode reproduces feature sets and zones") {
    GenSpec spec;
    spec.n_malicious = 15;
    spec.n_benign = 15;
    spec.n_features = 12;
    spec.n_zones = 3;
    spec.seed = 9;
    const auto [corpus, truth] = generate(spec);
    const auto ds = encode(corpus, build_vocab(corpus));
    const auto decoded = decode(ds);
    REQUIRE(decoded.size() == corpus.samples.size());
    for (std::size_t i = 0; i < decoded.size(); ++i) {
        const AppSample& orig = corpus.samples[i];
        std::set<std::string> expected = orig.permissions;
        expected.insert(orig.api_calls.begin(), orig.api_calls.end());
        expected.insert(orig.behaviors.begin(), orig.behaviors.end());
        CHECK(decoded[i].id == orig.id);
        CHECK(decoded[i].features == expected);
        CHECK(decoded[i].zone == orig.zone);
        CHECK(decoded[i].label == orig.label);
    }
}

TEST_CASE("encode distinguishes distinct samples under a fixed vocabulary") {
    GenSpec spec;
    spec.n_malicious = 25;
    spec.n_benign = 25;
    spec.n_features = 10;
    spec.n_zones = 2;
    spec.seed = 21;
    const auto [corpus, truth] = generate(spec);
    const auto ds = encode(corpus, build_vocab(corpus));
    const auto decoded = decode(ds);
    for (std::size_t i = 0; i < decoded.size(); ++i)
        for (std::size_t j = i + 1; j < decoded.size(); ++j) {
            const bool same_content =
                decoded[i].features == decoded[j].features && decoded[i].zone == decoded[j].zone;
            if (!same_content) REQUIRE_FALSE(ds.x.row(i) == ds.x.row(j));
        }
}

TEST_CASE("vocabulary is insensitive to corpus order") {
    GenSpec spec;
    spec.n_malicious = 10;
    spec.n_benign = 10;
    spec.n_features = 8;
    spec.seed = 3;
    auto [corpus, truth] = generate(spec);
    const auto before = build_vocab(corpus);
    std::reverse(corpus.samples.begin(), corpus.samples.end());
    const auto after = build_vocab(corpus);
    CHECK(before.features == after.features);
    CHECK(before.zones == after.zones);
}

namespace {

EncodedDataset tiny_dataset(std::size_t n_class0, std::size_t n_class1) {
    EncodedDataset ds;
    ds.x = Matrix(n_class0 + n_class1, 1, 0.0);
    ds.feature_names = {"F"};
    for (std::size_t i = 0; i < n_class0 + n_class1; ++i) {
        ds.sample_ids.push_back("s" + std::to_string(i));
        ds.y.push_back(i < n_class1 ? 1 : 0);
    }
    return ds;
}

}  // namespace

TEST_CASE("split of 10 samples at 0.8 gives 8 train and 2 test") {
    const auto ds = tiny_dataset(5, 5);
    const auto [train, test] = split(ds, SplitSpec{0.8, 1, true});
    CHECK(train.x.rows() == 8);
    CHECK(test.x.rows() == 2);
}

TEST_CASE("split is deterministic in the seed") {
    const auto ds = tiny_dataset(20, 10);
    const auto [train1, test1] = split(ds, SplitSpec{0.8, 42, true});
    const auto [train2, test2] = split(ds, SplitSpec{0.8, 42, true});
    CHECK(train1.sample_ids == train2.sample_ids);
    CHECK(test1.sample_ids == test2.sample_ids);
    const auto [train3, test3] = split(ds, SplitSpec{0.8, 43, true});
    CHECK(train1.sample_ids != train3.sample_ids);
}

TEST_CASE("stratified split of 500/5000 at 0.8 trains on 400/4000") {
    const auto ds = tiny_dataset(5000, 500);
    const auto [train, test] = split(ds, SplitSpec{0.8, 7, true});
    std::size_t mal = 0, ben = 0;
    for (int label : train.y) (label ? mal : ben)++;
    CHECK(mal == 400);
    CHECK(ben == 4000);
    CHECK(test.y.size() == 1100);
}

TEST_CASE("split partitions are disjoint and exhaustive") {
    const auto ds = tiny_dataset(31, 17);
    for (double fraction : {0.5, 0.8}) {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const auto [train, test] = split(ds, SplitSpec{fraction, seed, true});
            std::set<std::string> seen(train.sample_ids.begin(), train.sample_ids.end());
            for (const auto& id : test.sample_ids) REQUIRE(seen.insert(id).second);
            REQUIRE(seen.size() == ds.sample_ids.size());
        }
    }
}

TEST_CASE("split rejects degenerate requests") {
    const auto two = tiny_dataset(1, 1);
    CHECK_THROWS_AS(split(two, SplitSpec{0.8, 0, true}), std::invalid_argument);  // empty test side
    const auto one = tiny_dataset(1, 0);
    CHECK_THROWS_AS(split(one, SplitSpec{0.5, 0, false}), std::invalid_argument);
    const auto ds = tiny_dataset(5, 5);
    CHECK_THROWS_AS(split(ds, SplitSpec{0.0, 0, true}), std::invalid_argument);
    CHECK_THROWS_AS(split(ds, SplitSpec{1.0, 0, true}), std::invalid_argument);
}
