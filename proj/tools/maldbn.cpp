// maldbn command-line interface.
//
// Subcommands: gen, encode, train, eval, bench, report. Progress and
// diagnostics go to stderr; machine-readable results go to stdout and files.
// Exit codes: 0 success, 1 usage error, 2 unknown algorithm, 3 data/model
// incompatibility, 4 missing input.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "maldbn/bench.hpp"
#include "maldbn/classifier.hpp"
#include "maldbn/datagen.hpp"
#include "maldbn/features.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitUnknownAlgorithm = 2;
constexpr int kExitDataError = 3;
constexpr int kExitMissingInput = 4;

struct CliError {
    int code;
    std::string message;
};

namespace fs = std::filesystem;
using nlohmann::json;

void require_file(const fs::path& path) {
    if (!fs::exists(path)) throw CliError{kExitMissingInput, "missing input: " + path.string()};
}

json load_json_file(const fs::path& path) {
    require_file(path);
    std::ifstream in(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw CliError{kExitDataError, path.string() + ": invalid JSON: " + e.what()};
    }
    return j;
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw CliError{kExitDataError, "cannot write " + path.string()};
    out << text;
}

maldbn::Corpus load_corpus_checked(const fs::path& path) {
    require_file(path);
    try {
        return maldbn::load_corpus(path.string());
    } catch (const std::exception& e) {
        throw CliError{kExitDataError, e.what()};
    }
}

// ---- config overlays ------------------------------------------------------

maldbn::GenSpec gen_spec_from_json(const json& j, maldbn::GenSpec spec) {
    spec.n_malicious = j.value("n_malicious", spec.n_malicious);
    spec.n_benign = j.value("n_benign", spec.n_benign);
    spec.n_features = j.value("n_features", spec.n_features);
    spec.n_zones = j.value("n_zones", spec.n_zones);
    spec.rule_arity = j.value("rule_arity", spec.rule_arity);
    spec.zone_conditioned = j.value("zone_conditioned", spec.zone_conditioned);
    spec.label_noise = j.value("label_noise", spec.label_noise);
    spec.seed = j.value("seed", spec.seed);
    return spec;
}

maldbn::CdConfig cd_config_from_json(const json& j, maldbn::CdConfig cfg) {
    cfg.k = j.value("k", cfg.k);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

maldbn::FineTuneConfig finetune_config_from_json(const json& j, maldbn::FineTuneConfig cfg) {
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

maldbn::TrainProfile profile_from_json(const json& j, maldbn::TrainProfile p) {
    if (j.contains("hidden_sizes")) p.hidden_sizes = j["hidden_sizes"].get<std::vector<std::size_t>>();
    if (j.contains("cd")) p.cd = cd_config_from_json(j["cd"], p.cd);
    if (j.contains("finetune")) p.finetune = finetune_config_from_json(j["finetune"], p.finetune);
    if (j.contains("softmax")) p.softmax = finetune_config_from_json(j["softmax"], p.softmax);
    if (j.contains("forest")) {
        const json& f = j["forest"];
        p.forest.n_trees = f.value("n_trees", p.forest.n_trees);
        p.forest.bootstrap = f.value("bootstrap", p.forest.bootstrap);
        p.forest.features_per_split = f.value("features_per_split", p.forest.features_per_split);
        p.forest.max_depth = f.value("max_depth", p.forest.max_depth);
        p.forest.seed = f.value("seed", p.forest.seed);
    }
    if (j.contains("svm")) {
        const json& s = j["svm"];
        p.svm.c = s.value("c", p.svm.c);
        p.svm.epochs = s.value("epochs", p.svm.epochs);
        p.svm.seed = s.value("seed", p.svm.seed);
    }
    p.tree_max_depth = j.value("tree_max_depth", p.tree_max_depth);
    return p;
}

std::string corpus_file_name(std::size_t n_malicious, std::size_t n_benign) {
    return "corpus_" + std::to_string(n_malicious) + "_" + std::to_string(n_benign) + ".json";
}

void write_curve_csv(const fs::path& path, const char* value_header, const std::vector<double>& curve) {
    std::string text = std::string("epoch,") + value_header + "\n";
    for (std::size_t e = 0; e < curve.size(); ++e)
        text += std::to_string(e + 1) + "," + maldbn::format_double(curve[e]) + "\n";
    write_text_file(path, text);
}

// ---- subcommands -----------------------------------------------------------

struct GenArgs {
    std::string out_dir;
    bool suite = false;
    std::string spec_file;
    std::optional<std::size_t> n_malicious, n_benign, n_features, n_zones, rule_arity;
    std::optional<bool> zone_conditioned;
    std::optional<double> label_noise;
    std::optional<std::uint64_t> seed;
};

int cmd_gen(const GenArgs& args) {
    maldbn::GenSpec spec;
    if (!args.spec_file.empty()) spec = gen_spec_from_json(load_json_file(args.spec_file), spec);
    if (args.n_malicious) spec.n_malicious = *args.n_malicious;
    if (args.n_benign) spec.n_benign = *args.n_benign;
    if (args.n_features) spec.n_features = *args.n_features;
    if (args.n_zones) spec.n_zones = *args.n_zones;
    if (args.rule_arity) spec.rule_arity = *args.rule_arity;
    if (args.zone_conditioned) spec.zone_conditioned = *args.zone_conditioned;
    if (args.label_noise) spec.label_noise = *args.label_noise;
    if (args.seed) spec.seed = *args.seed;

    std::vector<std::pair<maldbn::Corpus, maldbn::GroundTruth>> corpora;
    if (args.suite)
        corpora = maldbn::generate_suite(spec);
    else
        corpora.push_back(maldbn::generate(spec));

    fs::create_directories(args.out_dir);
    for (const auto& [corpus, truth] : corpora) {
        std::size_t mal = 0, ben = 0;
        for (const auto& s : corpus.samples) (s.label.value_or(0) == 1 ? mal : ben)++;
        const fs::path corpus_path = fs::path(args.out_dir) / corpus_file_name(mal, ben);
        maldbn::save_corpus(corpus, corpus_path.string());
        fs::path truth_path = corpus_path;
        truth_path.replace_extension(".truth.json");
        write_text_file(truth_path, maldbn::ground_truth_to_json(truth).dump(2) + "\n");
        std::cerr << "gen: wrote " << corpus.samples.size() << " samples\n";
        std::cout << corpus_path.string() << "\n";
    }
    return kExitOk;
}

int cmd_encode(const std::string& corpus_file, const std::string& out_file) {
    const maldbn::Corpus corpus = load_corpus_checked(corpus_file);
    try {
        const auto vocab = maldbn::build_vocab(corpus);
        const auto ds = maldbn::encode(corpus, vocab);
        json j;
        j["columns"] = ds.column_labels();
        j["ids"] = ds.sample_ids;
        auto& rows = j["x"] = json::array();
        for (std::size_t r = 0; r < ds.x.rows(); ++r) {
            json row = json::array();
            for (std::size_t c = 0; c < ds.x.cols(); ++c) row.push_back(static_cast<int>(ds.x(r, c)));
            rows.push_back(std::move(row));
        }
        j["y"] = ds.y;
        write_text_file(out_file, j.dump(2) + "\n");
        std::cout << json{{"samples", ds.x.rows()}, {"columns", ds.x.cols()}, {"out", out_file}}.dump()
                  << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        throw CliError{kExitDataError, e.what()};
    }
}

int cmd_train(const std::string& corpus_file, const std::string& algo_name, const std::string& config_file,
              const std::string& model_out, const std::string& curves_out, std::uint64_t seed) {
    const auto algorithm = maldbn::parse_algorithm(algo_name);
    if (!algorithm) {
        std::string supported;
        for (const auto a : maldbn::all_algorithms()) supported += " " + maldbn::algorithm_name(a);
        throw CliError{kExitUnknownAlgorithm, "unknown algorithm \"" + algo_name + "\"; supported:" + supported};
    }
    const maldbn::Corpus corpus = load_corpus_checked(corpus_file);
    maldbn::TrainProfile profile;
    if (!config_file.empty()) profile = profile_from_json(load_json_file(config_file), profile);

    try {
        const auto vocab = maldbn::build_vocab(corpus);
        const auto ds = maldbn::encode(corpus, vocab);
        std::cerr << "train: " << algo_name << " on " << ds.x.rows() << " samples x " << ds.x.cols()
                  << " columns\n";
        const maldbn::FitResult fitted = maldbn::fit(*algorithm, ds, profile, seed);

        json j = maldbn::model_to_json(fitted.model);
        j["vocab"] = {{"features", vocab.features}, {"zones", vocab.zones}};
        j["seed"] = seed;
        write_text_file(model_out, j.dump(2) + "\n");

        if (*algorithm == maldbn::Algorithm::dbn) {
            const fs::path dir = curves_out.empty() ? fs::path(model_out).parent_path() : fs::path(curves_out);
            write_curve_csv(dir / "pretrain_error.csv", "error", fitted.pretrain_error);
            write_curve_csv(dir / "finetune_loss.csv", "loss", fitted.finetune_loss);
        }

        const double train_acc = maldbn::accuracy(maldbn::predict(fitted.model, ds.x), ds.y);
        std::cout << json{{"algorithm", algo_name}, {"train_accuracy", train_acc}, {"model", model_out}}.dump()
                  << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        throw CliError{kExitDataError, e.what()};
    }
}

int cmd_eval(const std::string& model_file, const std::string& corpus_file, const std::string& json_out) {
    const json jm = load_json_file(model_file);
    const maldbn::Corpus corpus = load_corpus_checked(corpus_file);
    try {
        const maldbn::ModelVariant model = maldbn::model_from_json(jm);
        maldbn::FeatureVocabulary vocab;
        vocab.features = jm.at("vocab").at("features").get<std::vector<std::string>>();
        vocab.zones = jm.at("vocab").at("zones").get<std::vector<std::string>>();

        if (corpus.samples.empty()) throw std::invalid_argument("eval: corpus has no samples");
        const auto ds = maldbn::encode(corpus, vocab);
        if (!ds.labeled()) throw std::invalid_argument("eval: corpus is unlabeled");
        const std::vector<int> preds = maldbn::predict(model, ds.x);

        std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (preds[i] == 1)
                (ds.y[i] == 1 ? tp : fp)++;
            else
                (ds.y[i] == 0 ? tn : fn)++;
        }
        const json metrics{{"accuracy", maldbn::accuracy(preds, ds.y)}, {"samples", preds.size()},
                           {"tp", tp}, {"fp", fp}, {"tn", tn}, {"fn", fn}};
        const std::string text = metrics.dump(2) + "\n";
        std::cout << text;
        if (!json_out.empty()) write_text_file(json_out, text);
        return kExitOk;
    } catch (const std::exception& e) {
        throw CliError{kExitDataError, e.what()};
    }
}

int cmd_bench(const std::string& suite_dir, const std::string& out_dir, std::size_t reps,
              std::uint64_t seed, unsigned jobs, const std::string& profile_name,
              const std::string& config_file, std::size_t n_malicious) {
    maldbn::TrainProfile profile;
    if (profile_name == "ci")
        profile = maldbn::ci_profile();
    else if (profile_name != "default")
        throw CliError{kExitUsage, "unknown profile \"" + profile_name + "\" (default, ci)"};
    if (!config_file.empty()) profile = profile_from_json(load_json_file(config_file), profile);

    std::vector<maldbn::Corpus> suite;
    for (std::size_t i = 1; i <= 10; ++i) {
        const fs::path path = fs::path(suite_dir) / corpus_file_name(n_malicious, 500 * i);
        if (!fs::exists(path))
            throw CliError{kExitMissingInput, "bench: suite is missing " + path.string()};
        suite.push_back(load_corpus_checked(path));
    }

    try {
        const auto report = maldbn::run_benchmark(suite, maldbn::all_algorithms(), reps, seed, profile,
                                                  jobs, &std::cerr);
        maldbn::emit_report(report, out_dir);
        std::size_t failures = 0;
        double wall = 0.0;
        for (const auto& r : report.results) {
            failures += r.failed() ? 1 : 0;
            wall += r.wall_seconds;
        }
        std::cerr << "bench: " << report.results.size() << " runs, " << failures
                  << " failures, total fit time " << wall << " s\n";

        // mean-accuracy table, same content as accuracy_by_ratio.csv
        std::cout << "ratio";
        for (const auto& algo : report.algorithms) std::cout << ',' << algo;
        std::cout << "\n";
        for (const auto& dataset : report.datasets) {
            std::cout << dataset;
            for (const auto& algo : report.algorithms) {
                std::cout << ',';
                const auto it = report.mean_accuracy.find(algo);
                if (it != report.mean_accuracy.end() && it->second.count(dataset))
                    std::cout << maldbn::format_double(it->second.at(dataset));
            }
            std::cout << "\n";
        }
        return kExitOk;
    } catch (const std::exception& e) {
        throw CliError{kExitDataError, e.what()};
    }
}

int cmd_report(const std::string& report_file, const std::string& out_dir) {
    const json j = load_json_file(report_file);
    try {
        maldbn::emit_report(maldbn::report_from_json(j), out_dir);
        std::cout << out_dir << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        throw CliError{kExitDataError, e.what()};
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deep-belief-network malicious-application detector and benchmark harness"};
    app.require_subcommand(1);

    GenArgs gen_args;
    auto* gen = app.add_subcommand("gen", "generate synthetic corpora with a planted rule");
    gen->add_option("--out", gen_args.out_dir, "output directory")->required();
    gen->add_flag("--suite", gen_args.suite, "emit the 10-corpus benign sweep (500..5000)");
    gen->add_option("--spec", gen_args.spec_file, "JSON generation spec");
    gen->add_option("--n-malicious", gen_args.n_malicious);
    gen->add_option("--n-benign", gen_args.n_benign);
    gen->add_option("--n-features", gen_args.n_features);
    gen->add_option("--n-zones", gen_args.n_zones);
    gen->add_option("--rule-arity", gen_args.rule_arity);
    gen->add_option("--zone-conditioned", gen_args.zone_conditioned);
    gen->add_option("--label-noise", gen_args.label_noise);
    gen->add_option("--seed", gen_args.seed);

    std::string encode_corpus, encode_out;
    auto* enc = app.add_subcommand("encode", "encode a corpus into a bit matrix");
    enc->add_option("--corpus", encode_corpus, "corpus JSON file")->required();
    enc->add_option("--out", encode_out, "encoded dataset output file")->required();

    std::string train_corpus, train_algo, train_config, train_model_out, train_curves_out;
    std::uint64_t train_seed = 0;
    auto* train = app.add_subcommand("train", "fit one algorithm on a corpus");
    train->add_option("--corpus", train_corpus)->required();
    train->add_option("--algo", train_algo, "dbn | decision_tree | random_forest | softmax_regression | svm")
        ->required();
    train->add_option("--config", train_config, "JSON hyperparameter overrides");
    train->add_option("--model-out", train_model_out)->required();
    train->add_option("--curves-out", train_curves_out, "directory for dbn curve CSVs");
    train->add_option("--seed", train_seed);

    std::string eval_model, eval_corpus, eval_json_out;
    auto* eval = app.add_subcommand("eval", "score a saved model on a corpus");
    eval->add_option("--model", eval_model)->required();
    eval->add_option("--corpus", eval_corpus)->required();
    eval->add_option("--json-out", eval_json_out, "also write the metrics JSON here");

    std::string bench_suite, bench_out, bench_profile = "default", bench_config;
    std::size_t bench_reps = 10, bench_n_malicious = 500;
    std::uint64_t bench_seed = 0;
    unsigned bench_jobs = std::max(1u, std::thread::hardware_concurrency());
    auto* bench = app.add_subcommand("bench", "run the 5-algorithm x 10-dataset protocol");
    bench->add_option("--suite", bench_suite, "directory holding the 10 corpus files")->required();
    bench->add_option("--out", bench_out, "report output directory")->required();
    bench->add_option("--reps", bench_reps, "runs per (algorithm, dataset)");
    bench->add_option("--seed", bench_seed);
    bench->add_option("--jobs", bench_jobs, "parallel runs (results identical for any value)");
    bench->add_option("--profile", bench_profile, "default | ci");
    bench->add_option("--config", bench_config, "JSON hyperparameter overrides");
    bench->add_option("--n-malicious", bench_n_malicious, "malicious count in the suite file names");

    std::string report_file, report_out;
    auto* report = app.add_subcommand("report", "re-emit CSVs from a report.json");
    report->add_option("--report", report_file)->required();
    report->add_option("--out", report_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_gen(gen_args);
        if (enc->parsed()) return cmd_encode(encode_corpus, encode_out);
        if (train->parsed())
            return cmd_train(train_corpus, train_algo, train_config, train_model_out, train_curves_out,
                             train_seed);
        if (eval->parsed()) return cmd_eval(eval_model, eval_corpus, eval_json_out);
        if (bench->parsed())
            return cmd_bench(bench_suite, bench_out, bench_reps, bench_seed, bench_jobs, bench_profile,
                             bench_config, bench_n_malicious);
        if (report->parsed()) return cmd_report(report_file, report_out);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    }
    return kExitUsage;
}
