#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rbe/model.hpp"

namespace rbe {

/// A clicked (query, keyword) pair — always a positive sample.
struct ClickPair {
    std::string query;
    std::string keyword;
};

/// One positive plus a fixed number of cross-sampled negatives. Negatives
/// keep the positive's query and borrow keywords from other pairs.
struct SampleGroup {
    ClickPair positive;
    std::vector<ClickPair> negatives;
};

struct TrainConfig {
    ModelConfig model;
    double gamma = 10.0;
    uint32_t epochs = 20;
    double learning_rate = 0.5;
    double lr_decay = 0.9;  // step decay per epoch
    uint32_t group_size = 11;  // 1 positive + 10 negatives
    uint32_t batch_size = 64;
    double validation_fraction = 0.1;
    uint32_t patience = 3;
    uint64_t seed = 1;
};

struct EpochMetrics {
    uint32_t epoch = 0;  // 0 is the pre-training evaluation
    double train_loss = 0.0;
    double valid_loss = 0.0;
    double valid_auc = 0.0;
};

struct TrainResult {
    RbeModelParams params;
    std::vector<EpochMetrics> history;
};

/// Cross sampling: for each pair, draws neg_per_pair distinct keywords from
/// the other pairs of the batch (never the positive's own keyword).
/// Deterministic under seed; throws if the batch cannot supply enough
/// distinct negatives.
std::vector<SampleGroup> cross_sample(std::span<const ClickPair> pairs,
                                      uint32_t neg_per_pair, uint64_t seed);

/// Softmax probability of the positive slot at temperature gamma, computed
/// with max subtraction. Throws on non-finite similarities.
double group_probability(std::span<const double> similarities,
                         size_t positive_index, double gamma);

/// Mean negative log probability over the groups (the "log loss"), with
/// similarities computed by the model's forward pass.
double objective(std::span<const SampleGroup> groups, const RbeModelParams& params,
                 const Featurizer& featurizer);

/// Mini-batch SGD on the sample-group softmax. Deterministic under
/// config.seed; throws with a diagnostic if the loss turns non-finite.
TrainResult train(std::span<const ClickPair> dataset, const TrainConfig& config);

/// Cosine of the two towers' reconstructed vectors for one (query, keyword)
/// text pair — the similarity the objective and the AUC evaluation use.
double score_pair(const RbeModelParams& params, const Featurizer& featurizer,
                  std::string_view query, std::string_view keyword);

std::vector<ClickPair> load_pairs_tsv(const std::filesystem::path& path);

struct LabeledPair {
    std::string query;
    std::string keyword;
    int label = 0;
};
std::vector<LabeledPair> load_labeled_tsv(const std::filesystem::path& path);

void write_metrics_csv(std::span<const EpochMetrics> history,
                       const std::filesystem::path& path);

}  // namespace rbe
