// Regenerates the committed synthetic benchmark under data/.
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "rbe/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Write the clustered synthetic training/eval benchmark"};
    rbe::SyntheticSpec spec;
    std::string train_out = "data/synthetic_train.tsv";
    std::string eval_out = "data/synthetic_eval.tsv";
    app.add_option("--train-out", train_out, "Training pairs TSV");
    app.add_option("--eval-out", eval_out, "Labeled eval TSV");
    app.add_option("--clusters", spec.clusters);
    app.add_option("--words-per-cluster", spec.words_per_cluster);
    app.add_option("--noise-words", spec.noise_words);
    app.add_option("--train-pairs", spec.train_pairs);
    app.add_option("--eval-positives", spec.eval_positives);
    app.add_option("--eval-negatives", spec.eval_negatives);
    app.add_option("--seed", spec.seed);
    CLI11_PARSE(app, argc, argv);

    const rbe::SyntheticData data = rbe::make_synthetic(spec);
    rbe::write_pairs_tsv(data.train, train_out);
    rbe::write_labeled_tsv(data.eval, eval_out);
    std::printf("train=%zu eval=%zu -> %s, %s\n", data.train.size(), data.eval.size(),
                train_out.c_str(), eval_out.c_str());
    return 0;
}
