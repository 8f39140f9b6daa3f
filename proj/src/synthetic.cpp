#include "rbe/synthetic.hpp"

#include <fstream>
#include <random>
#include <stdexcept>

namespace rbe {

namespace {

std::string cluster_word(uint32_t cluster, uint32_t word) {
    return "c" + std::to_string(cluster) + "w" + std::to_string(word);
}

std::string make_phrase(uint32_t cluster, const SyntheticSpec& spec,
                        std::mt19937_64& rng) {
    std::uniform_int_distribution<uint32_t> len_dist(2, 4);
    std::uniform_int_distribution<uint32_t> word_dist(0, spec.words_per_cluster - 1);
    std::uniform_int_distribution<uint32_t> noise_dist(0, spec.noise_words - 1);
    std::bernoulli_distribution add_noise(0.5);
    const uint32_t len = len_dist(rng);
    std::string phrase;
    for (uint32_t i = 0; i < len; ++i) {
        if (!phrase.empty()) phrase.push_back(' ');
        phrase += cluster_word(cluster, word_dist(rng));
    }
    if (spec.noise_words > 0 && add_noise(rng)) {
        phrase.push_back(' ');
        phrase += "n" + std::to_string(noise_dist(rng));
    }
    return phrase;
}

}  // namespace

SyntheticData make_synthetic(const SyntheticSpec& spec) {
    if (spec.clusters < 2 || spec.words_per_cluster == 0) {
        throw std::invalid_argument("make_synthetic: need >= 2 clusters with words");
    }
    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<uint32_t> cluster_dist(0, spec.clusters - 1);

    SyntheticData data;
    data.train.reserve(spec.train_pairs);
    for (uint32_t i = 0; i < spec.train_pairs; ++i) {
        const uint32_t c = cluster_dist(rng);
        data.train.push_back({make_phrase(c, spec, rng), make_phrase(c, spec, rng)});
    }
    for (uint32_t i = 0; i < spec.eval_positives; ++i) {
        const uint32_t c = cluster_dist(rng);
        data.eval.push_back({make_phrase(c, spec, rng), make_phrase(c, spec, rng), 1});
    }
    for (uint32_t i = 0; i < spec.eval_negatives; ++i) {
        const uint32_t cq = cluster_dist(rng);
        uint32_t ck = cluster_dist(rng);
        while (ck == cq) ck = cluster_dist(rng);
        data.eval.push_back({make_phrase(cq, spec, rng), make_phrase(ck, spec, rng), 0});
    }
    return data;
}

void write_pairs_tsv(const std::vector<ClickPair>& pairs,
                     const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    for (const ClickPair& p : pairs) {
        out << p.query << '\t' << p.keyword << '\n';
    }
}

void write_labeled_tsv(const std::vector<LabeledPair>& pairs,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    for (const LabeledPair& p : pairs) {
        out << p.query << '\t' << p.keyword << '\t' << p.label << '\n';
    }
}

}  // namespace rbe
