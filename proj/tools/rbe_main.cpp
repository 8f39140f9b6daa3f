#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rbe/analysis.hpp"
#include "rbe/bench.hpp"
#include "rbe/embedding_io.hpp"
#include "rbe/index.hpp"
#include "rbe/model.hpp"
#include "rbe/search.hpp"
#include "rbe/synthetic.hpp"
#include "rbe/trainer.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct TrainArgs {
    std::string data;
    std::string model_out;
    std::string metrics_out;
    rbe::TrainConfig config;
    std::string estimator = "straight_through_variant";
    bool no_residual_weights = false;
    bool no_bias = false;
    bool full_precision = false;
};

int run_train(const TrainArgs& args) {
    rbe::TrainConfig config = args.config;
    config.model.estimator = rbe::estimator_from_name(args.estimator);
    config.model.residual_weights = !args.no_residual_weights;
    config.model.use_bias = !args.no_bias;
    config.model.full_precision = args.full_precision;
    const auto pairs = rbe::load_pairs_tsv(args.data);
    if (pairs.empty()) {
        throw std::runtime_error("training data is empty: " + args.data);
    }
    const rbe::TrainResult result = rbe::train(pairs, config);
    rbe::save_checkpoint(result.params, args.model_out);
    const std::string metrics =
        args.metrics_out.empty() ? args.model_out + ".metrics.csv" : args.metrics_out;
    rbe::write_metrics_csv(result.history, metrics);
    const rbe::EpochMetrics& last = result.history.back();
    std::printf("pairs=%zu epochs_run=%u query_planes=%u keyword_planes=%u\n",
                pairs.size(), last.epoch, config.model.u + 1, config.model.v + 1);
    std::printf("train_loss=%.9g valid_loss=%.9g valid_auc=%.9g\n", last.train_loss,
                last.valid_loss, last.valid_auc);
    return 0;
}

struct EncodeArgs {
    std::string model;
    std::string input;
    std::string output;
    std::string side = "keyword";
};

int run_encode(const EncodeArgs& args) {
    const rbe::RbeModelParams params = rbe::load_checkpoint(args.model);
    if (params.config.full_precision) {
        throw std::runtime_error("encode: checkpoint is a full-precision ablation model");
    }
    const rbe::Side side = args.side == "query" ? rbe::Side::Query : rbe::Side::Keyword;
    const uint32_t steps = params.config.steps_for(side);
    const rbe::Featurizer featurizer{params.config.hash_dim};

    std::ifstream in(args.input);
    if (!in) {
        throw std::runtime_error("cannot open keywords file: " + args.input);
    }
    rbe::EmbeddingWriter writer(args.output, params.config.n, steps + 1,
                                params.config.residual_weights);
    std::string line;
    uint64_t line_no = 0, skipped = 0;
    while (std::getline(in, line)) {
        const uint64_t id = line_no++;
        rbe::SparseVector features;
        try {
            features = featurizer.featurize(line);
        } catch (const std::invalid_argument&) {
            std::fprintf(stderr, "warning: line %llu not featurizable, skipped\n",
                         (unsigned long long)id);
            ++skipped;
            continue;
        }
        writer.add(id, rbe::embed(params, side, features, steps));
    }
    std::printf("encoded=%llu skipped=%llu planes=%u dim=%u\n",
                (unsigned long long)writer.written(), (unsigned long long)skipped,
                steps + 1, params.config.n);
    return 0;
}

struct BuildArgs {
    std::string embeddings;
    std::string output;
    uint32_t partitions = 1;
};

int run_build(const BuildArgs& args) {
    rbe::EmbeddingReader reader(args.embeddings);
    rbe::IndexBuilder builder(args.partitions, reader.residual_weights());
    while (auto record = reader.next()) {
        builder.add(record->first, record->second);
    }
    const rbe::KeywordIndex index = builder.finish();
    rbe::save_index(index, args.output);
    std::printf("keywords=%llu partitions=%u plane_bytes_per_keyword=%llu "
                "plane_payload_bytes=%llu\n",
                (unsigned long long)index.total_keywords(), args.partitions,
                (unsigned long long)index.plane_bytes_per_keyword(),
                (unsigned long long)index.plane_payload_bytes());
    return 0;
}

struct QueryArgs {
    std::string index;
    std::string model;
    std::string text;
    std::string batch;
    std::string output;
    uint64_t n = 10;
    uint32_t blocks = 0;  // 0 = derived from the largest partition
    uint32_t threads_per_block = 256;
    uint32_t items_per_thread = 256;
    uint32_t queue_length = 1;
};

int run_query(const QueryArgs& args) {
    if (args.text.empty() && args.batch.empty()) {
        throw std::invalid_argument("query: provide --text or --batch");
    }
    const rbe::KeywordIndex index = rbe::load_index(args.index);
    if (index.total_keywords() == 0) {
        throw std::runtime_error("index is empty");
    }
    const rbe::RbeModelParams params = rbe::load_checkpoint(args.model);
    const rbe::Featurizer featurizer{params.config.hash_dim};

    std::vector<std::string> queries;
    if (!args.text.empty()) {
        queries.push_back(args.text);
    } else {
        std::ifstream in(args.batch);
        if (!in) {
            throw std::runtime_error("cannot open batch file: " + args.batch);
        }
        std::string line;
        while (std::getline(in, line)) queries.push_back(line);
    }

    rbe::ScanGeometry geometry;
    geometry.threads_per_block = args.threads_per_block;
    geometry.items_per_thread = args.items_per_thread;
    geometry.queue_length = args.queue_length;
    uint64_t largest = 0;
    for (const auto& p : index.partitions) largest = std::max(largest, p.count);
    const uint64_t per_block =
        uint64_t(geometry.threads_per_block) * geometry.items_per_thread;
    geometry.blocks = args.blocks != 0
                          ? args.blocks
                          : uint32_t((largest + per_block - 1) / per_block);

    std::ofstream file_out;
    if (!args.output.empty()) {
        file_out.open(args.output);
        if (!file_out) {
            throw std::runtime_error("cannot open output file: " + args.output);
        }
    }
    std::ostream& out = args.output.empty() ? std::cout : file_out;

    std::vector<double> latencies_ms;
    latencies_ms.reserve(queries.size());
    char buf[96];
    for (size_t qi = 0; qi < queries.size(); ++qi) {
        const auto start = std::chrono::steady_clock::now();
        const rbe::RbeEmbedding q =
            rbe::embed_text(params, featurizer, rbe::Side::Query, queries[qi]);
        const rbe::SelectionResult result = rbe::search(q, index, geometry, args.n);
        latencies_ms.push_back(
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                      start)
                .count());
        for (const rbe::SelectionEntry& e : result.entries) {
            std::snprintf(buf, sizeof(buf), "%zu\t%llu\t%.9g\n", qi,
                          (unsigned long long)e.id, e.score);
            out << buf;
        }
    }
    if (!latencies_ms.empty()) {
        std::vector<double> sorted = latencies_ms;
        std::sort(sorted.begin(), sorted.end());
        double mean = 0;
        for (double v : sorted) mean += v;
        mean /= double(sorted.size());
        const double p99 = sorted[size_t(std::ceil(0.99 * double(sorted.size()))) - 1];
        std::fprintf(stderr, "queries=%zu latency_mean_ms=%.3f latency_p99_ms=%.3f\n",
                     latencies_ms.size(), mean, p99);
    }
    return 0;
}

struct AnalyzeArgs {
    uint64_t candidates = 1000000000ull;
    uint64_t relevant = 1000;
    uint64_t items_per_thread = 256;
    uint32_t max_l = 2;
    bool simulate = false;
    uint64_t trials = 100000;
    uint32_t queue_length = 1;
    uint64_t seed = 42;
    std::string output;
};

int run_analyze(const AnalyzeArgs& args) {
    std::ofstream file_out;
    if (!args.output.empty()) {
        file_out.open(args.output);
        if (!file_out) {
            throw std::runtime_error("cannot open output file: " + args.output);
        }
    }
    std::ostream& out = args.output.empty() ? std::cout : file_out;

    std::vector<double> exact(args.max_l + 1);
    for (uint32_t l = 0; l <= args.max_l; ++l) {
        exact[l] = rbe::p_l_at_most(args.candidates, args.relevant,
                                    args.items_per_thread, l);
    }
    out << "l";
    for (uint32_t l = 0; l <= args.max_l; ++l) out << ',' << l;
    out << '\n';
    char buf[48];
    out << "p_l_at_most_percent";
    for (uint32_t l = 0; l <= args.max_l; ++l) {
        std::snprintf(buf, sizeof(buf), ",%.6f", 100.0 * exact[l]);
        out << buf;
    }
    out << '\n';
    if (args.simulate) {
        const auto freq =
            rbe::simulate_miss(args.candidates, args.relevant, args.items_per_thread,
                               args.queue_length, args.trials, args.seed);
        out << "simulated_percent";
        double cumulative = 0.0;
        for (uint32_t l = 0; l <= args.max_l; ++l) {
            const auto it = freq.find(l);
            cumulative += it == freq.end() ? 0.0 : it->second;
            std::snprintf(buf, sizeof(buf), ",%.6f", 100.0 * cumulative);
            out << buf;
        }
        out << '\n';
    }
    return 0;
}

struct BenchArgs {
    uint64_t count = 10000000ull;
    uint32_t dim = 64;
    uint32_t query_planes = 2;
    uint32_t keyword_planes = 2;
    std::string mode = "both";
    uint32_t repeats = 3;
    uint64_t seed = 7;
};

int run_bench(const BenchArgs& args) {
    const bool run_binary = args.mode != "float";
    const bool run_float = args.mode != "binary";
    const rbe::BenchResult r =
        rbe::run_scan_benchmark(args.count, args.dim, args.query_planes,
                                args.keyword_planes, args.repeats, args.seed,
                                run_binary, run_float);
    if (run_binary) {
        std::printf("binary_throughput_keywords_per_s=%.4g stddev=%.3g\n",
                    r.binary_throughput, r.binary_stddev);
    }
    if (run_float) {
        std::printf("float_throughput_keywords_per_s=%.4g stddev=%.3g\n",
                    r.float_throughput, r.float_stddev);
    }
    if (run_binary && run_float) {
        std::printf("binary_to_float_ratio=%.4g\n", r.ratio);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recurrent binary embedding training, indexing, exhaustive "
                 "k-NN retrieval, and selection-miss analysis"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a key=value config file");

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Train a model on query/keyword pairs");
    train->add_option("--data", train_args.data, "TSV of query<TAB>keyword pairs")
        ->required()
        ->check(CLI::ExistingFile);
    train->add_option("--model", train_args.model_out, "Checkpoint output path")
        ->required();
    train->add_option("--metrics", train_args.metrics_out,
                      "Metrics CSV path (default: <model>.metrics.csv)");
    train->add_option("--m", train_args.config.model.m, "Dense feature width");
    train->add_option("--n", train_args.config.model.n, "Embedding width");
    train->add_option("--u", train_args.config.model.u, "Query refinement steps");
    train->add_option("--v", train_args.config.model.v, "Keyword refinement steps");
    train->add_option("--hash-dim", train_args.config.model.hash_dim,
                      "Trigram hash space size");
    train->add_option("--estimator", train_args.estimator,
                      "straight_through | straight_through_variant | annealing_tanh")
        ->check(CLI::IsMember({"straight_through", "straight_through_variant",
                               "annealing_tanh"}));
    train->add_option("--annealing-slope", train_args.config.model.annealing_slope,
                      "Initial annealing slope alpha")
        ->check(CLI::Range(1.0, 1e9));
    train->add_option("--annealing-growth", train_args.config.model.annealing_growth,
                      "Per-epoch alpha multiplier");
    train->add_flag("--no-residual-weights", train_args.no_residual_weights,
                    "Add residual planes without 2^-t weights");
    train->add_flag("--no-bias", train_args.no_bias, "Disable bias terms");
    train->add_flag("--full-precision", train_args.full_precision,
                    "Ablation: tanh projection without binarization");
    train->add_option("--gamma", train_args.config.gamma, "Softmax smoothing factor")
        ->check(CLI::PositiveNumber);
    train->add_option("--epochs", train_args.config.epochs, "Max epochs");
    train->add_option("--learning-rate", train_args.config.learning_rate, "SGD step");
    train->add_option("--lr-decay", train_args.config.lr_decay,
                      "Per-epoch learning-rate decay");
    train->add_option("--group-size", train_args.config.group_size,
                      "Sample group size (1 positive + negatives)")
        ->check(CLI::Range(2u, 1024u));
    train->add_option("--batch-size", train_args.config.batch_size, "Pairs per batch");
    train->add_option("--validation-fraction", train_args.config.validation_fraction,
                      "Held-out fraction")
        ->check(CLI::Range(0.0, 0.9));
    train->add_option("--patience", train_args.config.patience,
                      "Early-stopping patience in epochs");
    train->add_option("--seed", train_args.config.seed, "RNG seed");

    EncodeArgs encode_args;
    auto* encode = app.add_subcommand("encode", "Embed keywords (or queries) offline");
    encode->add_option("--model", encode_args.model, "Checkpoint path")
        ->required()
        ->check(CLI::ExistingFile);
    encode->add_option("--input", encode_args.input, "One text per line")
        ->required()
        ->check(CLI::ExistingFile);
    encode->add_option("--output", encode_args.output, "Embeddings file")->required();
    encode->add_option("--side", encode_args.side, "keyword | query")
        ->check(CLI::IsMember({"keyword", "query"}));

    BuildArgs build_args;
    auto* build = app.add_subcommand("build", "Build a partitioned index");
    build->add_option("--embeddings", build_args.embeddings, "Embeddings file")
        ->required()
        ->check(CLI::ExistingFile);
    build->add_option("--output", build_args.output, "Index output path")->required();
    build->add_option("--partitions", build_args.partitions, "Partition count")
        ->check(CLI::PositiveNumber);

    QueryArgs query_args;
    auto* query = app.add_subcommand("query", "Exhaustive top-N retrieval");
    query->add_option("--index", query_args.index, "Index path")
        ->required()
        ->check(CLI::ExistingFile);
    query->add_option("--model", query_args.model, "Checkpoint path")
        ->required()
        ->check(CLI::ExistingFile);
    auto* text_opt = query->add_option("--text", query_args.text, "Single query text");
    query->add_option("--batch", query_args.batch, "File with one query per line")
        ->excludes(text_opt)
        ->check(CLI::ExistingFile);
    query->add_option("--n", query_args.n, "Results per query")
        ->check(CLI::PositiveNumber);
    query->add_option("--blocks", query_args.blocks, "Scan blocks (0 = auto)");
    query->add_option("--threads-per-block", query_args.threads_per_block, "T_b")
        ->check(CLI::PositiveNumber);
    query->add_option("--items-per-thread", query_args.items_per_thread, "I")
        ->check(CLI::PositiveNumber);
    query->add_option("--queue-length", query_args.queue_length,
                      "Per-thread priority queue length")
        ->check(CLI::PositiveNumber);
    query->add_option("--output", query_args.output, "Write results here instead of stdout");

    AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand(
        "analyze", "Exact selection-miss probabilities (CSV), optionally simulated");
    analyze->add_option("--candidates", analyze_args.candidates, "C")
        ->check(CLI::PositiveNumber);
    analyze->add_option("--relevant", analyze_args.relevant, "N")
        ->check(CLI::PositiveNumber);
    analyze->add_option("--items-per-thread", analyze_args.items_per_thread, "I")
        ->check(CLI::PositiveNumber);
    analyze->add_option("--max-l", analyze_args.max_l, "Largest miss count column")
        ->check(CLI::Range(0u, 3u));
    analyze->add_flag("--simulate", analyze_args.simulate,
                      "Add a Monte Carlo row (keep C small)");
    analyze->add_option("--trials", analyze_args.trials, "Simulation trials")
        ->check(CLI::PositiveNumber);
    analyze->add_option("--queue-length", analyze_args.queue_length,
                        "Simulated queue length")
        ->check(CLI::PositiveNumber);
    analyze->add_option("--seed", analyze_args.seed, "Simulation seed");
    analyze->add_option("--output", analyze_args.output, "CSV path (default stdout)");

    BenchArgs bench_args;
    auto* bench = app.add_subcommand(
        "bench", "Relative throughput of the bitwise scan vs a float32 scan");
    bench->add_option("--count", bench_args.count, "Synthetic corpus size")
        ->check(CLI::PositiveNumber);
    bench->add_option("--dim", bench_args.dim, "Vector width")
        ->check(CLI::PositiveNumber);
    bench->add_option("--query-planes", bench_args.query_planes, "u+1")
        ->check(CLI::PositiveNumber);
    bench->add_option("--keyword-planes", bench_args.keyword_planes, "v+1")
        ->check(CLI::PositiveNumber);
    bench->add_option("--mode", bench_args.mode, "binary | float | both")
        ->check(CLI::IsMember({"binary", "float", "both"}));
    bench->add_option("--repeats", bench_args.repeats, "Timed repetitions")
        ->check(CLI::PositiveNumber);
    bench->add_option("--seed", bench_args.seed, "Corpus seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitUsage;
    }

    try {
        if (train->parsed()) return run_train(train_args);
        if (encode->parsed()) return run_encode(encode_args);
        if (build->parsed()) return run_build(build_args);
        if (query->parsed()) return run_query(query_args);
        if (analyze->parsed()) return run_analyze(analyze_args);
        if (bench->parsed()) return run_bench(bench_args);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return 0;
}
