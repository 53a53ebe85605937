#pragma once

// Experiment harness: for each (dataset, algorithm, run) triple, encode,
// stratified 0.8/0.2 split, fit, score on the held-out side, then aggregate
// mean accuracies, per-algorithm five-number summaries and mean-accuracy
// deltas against the network. Run seeds derive from
// mix_seed(base_seed, dataset_index, algorithm_index, run_index), so every
// run is individually reproducible and the schedule (including --jobs
// parallelism) cannot change any result.
//
// Wall-clock timings stay in memory and on the progress stream; report.json
// carries only deterministic fields so same-seed invocations are
// byte-identical.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "maldbn/classifier.hpp"
#include "maldbn/features.hpp"

namespace maldbn {

struct RunResult {
    std::string algorithm;
    std::string dataset;  // ratio label, e.g. "500/1000"
    std::size_t dataset_index = 0;
    std::size_t run_index = 0;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    ErrorCurve pretrain_error;
    LossCurve finetune_loss;
    std::string error;           // nonempty when the run failed
    double wall_seconds = 0.0;   // not serialized

    bool failed() const { return !error.empty(); }
};

struct FiveNum {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

struct BenchmarkReport {
    std::vector<std::string> algorithms;  // canonical order
    std::vector<std::string> datasets;    // suite order
    std::size_t repetitions = 0;
    std::uint64_t base_seed = 0;
    std::vector<RunResult> results;  // ordered by (dataset, algorithm, run)

    // aggregates, always recomputable from results
    std::map<std::string, std::map<std::string, double>> mean_accuracy;  // algorithm -> dataset -> mean
    std::map<std::string, FiveNum> distribution;                         // algorithm -> five-number summary
    std::map<std::string, double> delta_vs_dbn;                          // mean(dbn) - mean(algorithm)
};

/// Fraction of positions where the two label vectors agree.
inline double accuracy(const std::vector<int>& preds, const std::vector<int>& truth) {
    if (preds.empty()) throw std::invalid_argument("accuracy: empty input");
    if (preds.size() != truth.size()) throw std::invalid_argument("accuracy: length mismatch");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

/// Five-number summary with quantiles at positions (n-1)*p, linearly
/// interpolated between the two bracketing order statistics.
inline FiveNum distribution_stats(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("distribution_stats: empty input");
    std::sort(values.begin(), values.end());
    const auto quantile = [&](double p) {
        const double pos = p * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return values[lo] * (1.0 - frac) + values[hi] * frac;
    };
    return {values.front(), quantile(0.25), quantile(0.5), quantile(0.75), values.back()};
}

/// One full experiment on an already-encoded dataset.
inline RunResult run_experiment(const EncodedDataset& ds, Algorithm algorithm, const TrainProfile& profile,
                                std::uint64_t split_seed, std::uint64_t train_seed,
                                const std::string& dataset_name = "") {
    RunResult r;
    r.algorithm = algorithm_name(algorithm);
    r.dataset = dataset_name;
    const auto start = std::chrono::steady_clock::now();
    try {
        auto [train, test] = split(ds, SplitSpec{0.8, split_seed, true});
        FitResult fitted = fit(algorithm, train, profile, train_seed);
        const std::vector<int> preds = predict(fitted.model, test.x);
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (preds[i] == 1)
                (test.y[i] == 1 ? r.tp : r.fp)++;
            else
                (test.y[i] == 0 ? r.tn : r.fn)++;
        }
        r.accuracy = accuracy(preds, test.y);
        r.pretrain_error = std::move(fitted.pretrain_error);
        r.finetune_loss = std::move(fitted.finetune_loss);
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

/// Convenience overload: encodes the corpus with its own vocabulary first.
inline RunResult run_experiment(const Corpus& corpus, Algorithm algorithm, const TrainProfile& profile,
                                std::uint64_t split_seed, std::uint64_t train_seed,
                                const std::string& dataset_name = "") {
    return run_experiment(encode(corpus, build_vocab(corpus)), algorithm, profile, split_seed, train_seed,
                          dataset_name);
}

/// Ratio label "<malicious>/<benign>" of a labeled corpus.
inline std::string dataset_ratio_label(const Corpus& corpus) {
    std::size_t mal = 0, ben = 0;
    for (const auto& s : corpus.samples) {
        if (s.label.value_or(0) == 1)
            ++mal;
        else
            ++ben;
    }
    return std::to_string(mal) + "/" + std::to_string(ben);
}

/// Recomputes every aggregate from the raw results. Failed runs are listed
/// in results but excluded from aggregates.
inline void finalize_aggregates(BenchmarkReport& report) {
    report.mean_accuracy.clear();
    report.distribution.clear();
    report.delta_vs_dbn.clear();

    std::map<std::string, std::map<std::string, std::vector<double>>> cells;
    std::map<std::string, std::vector<double>> per_algo;
    for (const auto& r : report.results) {
        if (r.failed()) continue;
        cells[r.algorithm][r.dataset].push_back(r.accuracy);
        per_algo[r.algorithm].push_back(r.accuracy);
    }
    for (const auto& [algo, by_dataset] : cells)
        for (const auto& [dataset, values] : by_dataset) {
            double sum = 0.0;
            for (double v : values) sum += v;
            report.mean_accuracy[algo][dataset] = sum / static_cast<double>(values.size());
        }
    for (const auto& [algo, values] : per_algo) report.distribution[algo] = distribution_stats(values);

    const auto overall_mean = [&](const std::string& algo) {
        const auto& values = per_algo.at(algo);
        double sum = 0.0;
        for (double v : values) sum += v;
        return sum / static_cast<double>(values.size());
    };
    if (per_algo.count("dbn")) {
        const double dbn_mean = overall_mean("dbn");
        for (const auto& [algo, values] : per_algo) {
            if (algo == "dbn") continue;
            (void)values;
            report.delta_vs_dbn[algo] = dbn_mean - overall_mean(algo);
        }
    }
}

/// The full cross product |suite| x |algorithms| x repetitions. Tasks may
/// execute on up to `jobs` threads; results land in schedule order.
inline BenchmarkReport run_benchmark(const std::vector<Corpus>& suite, const std::vector<Algorithm>& algorithms,
                                     std::size_t repetitions, std::uint64_t base_seed,
                                     const TrainProfile& profile, unsigned jobs = 1,
                                     std::ostream* progress = nullptr) {
    if (suite.empty()) throw std::invalid_argument("run_benchmark: empty suite");
    if (algorithms.empty()) throw std::invalid_argument("run_benchmark: no algorithms");
    if (repetitions == 0) throw std::invalid_argument("run_benchmark: repetitions must be positive");

    BenchmarkReport report;
    report.repetitions = repetitions;
    report.base_seed = base_seed;
    for (Algorithm a : algorithms) report.algorithms.push_back(algorithm_name(a));

    std::vector<EncodedDataset> encoded;
    encoded.reserve(suite.size());
    for (const auto& corpus : suite) {
        report.datasets.push_back(dataset_ratio_label(corpus));
        encoded.push_back(encode(corpus, build_vocab(corpus)));
    }

    struct Task {
        std::size_t dataset, algo, run;
    };
    std::vector<Task> tasks;
    for (std::size_t d = 0; d < suite.size(); ++d)
        for (std::size_t a = 0; a < algorithms.size(); ++a)
            for (std::size_t r = 0; r < repetitions; ++r) tasks.push_back({d, a, r});
    report.results.resize(tasks.size());

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    const auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& t = tasks[i];
            const std::uint64_t run_seed = mix_seed(base_seed, t.dataset, t.algo, t.run);
            RunResult r = run_experiment(encoded[t.dataset], algorithms[t.algo], profile,
                                         mix_seed(run_seed, 0), mix_seed(run_seed, 1),
                                         report.datasets[t.dataset]);
            r.dataset_index = t.dataset;
            r.run_index = t.run;
            r.seed = run_seed;
            report.results[i] = std::move(r);
            const std::size_t finished = done.fetch_add(1) + 1;
            if (progress && (finished % 25 == 0 || finished == tasks.size()))
                (*progress) << "bench: " << finished << "/" << tasks.size() << " runs\n" << std::flush;
        }
    };

    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    finalize_aggregates(report);
    return report;
}

/// Shortest decimal form that parses back to the same double (<= 17
/// significant digits).
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline nlohmann::json run_result_to_json(const RunResult& r) {
    nlohmann::json j{{"algorithm", r.algorithm}, {"dataset", r.dataset},
                     {"dataset_index", r.dataset_index}, {"run", r.run_index},
                     {"seed", r.seed},           {"accuracy", r.accuracy},
                     {"tp", r.tp},               {"fp", r.fp},
                     {"tn", r.tn},               {"fn", r.fn}};
    if (!r.pretrain_error.empty()) j["pretrain_error"] = r.pretrain_error;
    if (!r.finetune_loss.empty()) j["finetune_loss"] = r.finetune_loss;
    if (r.failed()) j["error"] = r.error;
    return j;
}

inline RunResult run_result_from_json(const nlohmann::json& j) {
    RunResult r;
    r.algorithm = j.at("algorithm").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.dataset_index = j.at("dataset_index").get<std::size_t>();
    r.run_index = j.at("run").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.accuracy = j.at("accuracy").get<double>();
    r.tp = j.at("tp").get<std::size_t>();
    r.fp = j.at("fp").get<std::size_t>();
    r.tn = j.at("tn").get<std::size_t>();
    r.fn = j.at("fn").get<std::size_t>();
    if (j.contains("pretrain_error")) r.pretrain_error = j["pretrain_error"].get<std::vector<double>>();
    if (j.contains("finetune_loss")) r.finetune_loss = j["finetune_loss"].get<std::vector<double>>();
    if (j.contains("error")) r.error = j["error"].get<std::string>();
    return r;
}

inline nlohmann::json report_to_json(const BenchmarkReport& report) {
    nlohmann::json results = nlohmann::json::array();
    for (const auto& r : report.results) results.push_back(run_result_to_json(r));

    nlohmann::json mean_accuracy;
    for (const auto& [algo, by_dataset] : report.mean_accuracy)
        for (const auto& [dataset, value] : by_dataset) mean_accuracy[algo][dataset] = value;
    nlohmann::json distribution;
    for (const auto& [algo, f] : report.distribution)
        distribution[algo] = {{"min", f.min}, {"q1", f.q1}, {"median", f.median}, {"q3", f.q3}, {"max", f.max}};

    return {{"protocol",
             {{"algorithms", report.algorithms},
              {"datasets", report.datasets},
              {"repetitions", report.repetitions},
              {"base_seed", report.base_seed}}},
            {"results", results},
            {"aggregates",
             {{"mean_accuracy", mean_accuracy},
              {"distribution", distribution},
              {"delta_vs_dbn", report.delta_vs_dbn}}}};
}

/// Rebuilds a report from its JSON serialization; aggregates are recomputed
/// from the raw results rather than trusted.
inline BenchmarkReport report_from_json(const nlohmann::json& j) {
    BenchmarkReport report;
    const auto& protocol = j.at("protocol");
    report.algorithms = protocol.at("algorithms").get<std::vector<std::string>>();
    report.datasets = protocol.at("datasets").get<std::vector<std::string>>();
    report.repetitions = protocol.at("repetitions").get<std::size_t>();
    report.base_seed = protocol.at("base_seed").get<std::uint64_t>();
    for (const auto& jr : j.at("results")) report.results.push_back(run_result_from_json(jr));
    finalize_aggregates(report);
    return report;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_report: cannot write " + path.string());
    return out;
}

/// Pointwise mean across runs; curves may be missing on failed runs.
inline std::vector<double> mean_curve(const BenchmarkReport& report,
                                      const std::vector<double> RunResult::*field) {
    std::size_t longest = 0;
    for (const auto& r : report.results) longest = std::max(longest, (r.*field).size());
    std::vector<double> mean(longest, 0.0);
    std::vector<std::size_t> count(longest, 0);
    for (const auto& r : report.results)
        for (std::size_t e = 0; e < (r.*field).size(); ++e) {
            mean[e] += (r.*field)[e];
            ++count[e];
        }
    for (std::size_t e = 0; e < longest; ++e) mean[e] /= static_cast<double>(count[e]);
    return mean;
}

}  // namespace detail

/// Writes accuracy_by_ratio.csv, accuracy_distribution.csv,
/// pretrain_error.csv, finetune_loss.csv and report.json into out_dir.
/// Emission is a pure function of the report: re-emitting the same report
/// yields byte-identical files.
inline void emit_report(const BenchmarkReport& report, const std::string& out_dir) {
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);

    {
        auto out = detail::open_out(dir / "accuracy_by_ratio.csv");
        out << "ratio";
        for (const auto& algo : report.algorithms) out << ',' << algo;
        out << '\n';
        for (const auto& dataset : report.datasets) {
            out << dataset;
            for (const auto& algo : report.algorithms) {
                out << ',';
                const auto ait = report.mean_accuracy.find(algo);
                if (ait != report.mean_accuracy.end()) {
                    const auto dit = ait->second.find(dataset);
                    if (dit != ait->second.end()) out << format_double(dit->second);
                }
            }
            out << '\n';
        }
    }
    {
        auto out = detail::open_out(dir / "accuracy_distribution.csv");
        out << "algorithm,min,q1,median,q3,max\n";
        for (const auto& algo : report.algorithms) {
            const auto it = report.distribution.find(algo);
            if (it == report.distribution.end()) continue;
            const FiveNum& f = it->second;
            out << algo << ',' << format_double(f.min) << ',' << format_double(f.q1) << ','
                << format_double(f.median) << ',' << format_double(f.q3) << ',' << format_double(f.max)
                << '\n';
        }
    }
    {
        auto out = detail::open_out(dir / "pretrain_error.csv");
        out << "epoch,mean_error\n";
        const auto curve = detail::mean_curve(report, &RunResult::pretrain_error);
        for (std::size_t e = 0; e < curve.size(); ++e)
            out << (e + 1) << ',' << format_double(curve[e]) << '\n';
    }
    {
        auto out = detail::open_out(dir / "finetune_loss.csv");
        out << "epoch,mean_loss\n";
        const auto curve = detail::mean_curve(report, &RunResult::finetune_loss);
        for (std::size_t e = 0; e < curve.size(); ++e)
            out << (e + 1) << ',' << format_double(curve[e]) << '\n';
    }
    {
        auto out = detail::open_out(dir / "report.json");
        out << report_to_json(report).dump(2) << '\n';
    }
}

}  // namespace maldbn
