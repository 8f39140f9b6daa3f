#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rbe/trainer.hpp"

namespace rbe {

/// Knobs for the committed clustered-text benchmark: queries and keywords of
/// the same latent cluster share a small vocabulary, diluted with globally
/// shared noise words.
struct SyntheticSpec {
    uint32_t clusters = 48;
    uint32_t words_per_cluster = 12;
    uint32_t noise_words = 32;
    uint32_t train_pairs = 1800;
    uint32_t eval_positives = 400;
    uint32_t eval_negatives = 400;
    uint64_t seed = 20240117;
};

struct SyntheticData {
    std::vector<ClickPair> train;
    std::vector<LabeledPair> eval;
};

SyntheticData make_synthetic(const SyntheticSpec& spec);

void write_pairs_tsv(const std::vector<ClickPair>& pairs,
                     const std::filesystem::path& path);
void write_labeled_tsv(const std::vector<LabeledPair>& pairs,
                       const std::filesystem::path& path);

}  // namespace rbe
