#include "rbe/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "rbe/metrics.hpp"

namespace rbe {

std::vector<SampleGroup> cross_sample(std::span<const ClickPair> pairs,
                                      uint32_t neg_per_pair, uint64_t seed) {
    if (pairs.size() < 2) {
        throw std::invalid_argument("cross_sample: need at least two pairs");
    }
    if (neg_per_pair == 0) {
        throw std::invalid_argument("cross_sample: neg_per_pair must be positive");
    }
    std::vector<SampleGroup> groups;
    groups.reserve(pairs.size());
    std::vector<std::string> candidates;
    for (size_t i = 0; i < pairs.size(); ++i) {
        candidates.clear();
        for (size_t j = 0; j < pairs.size(); ++j) {
            if (j == i || pairs[j].keyword == pairs[i].keyword) continue;
            if (std::find(candidates.begin(), candidates.end(), pairs[j].keyword) ==
                candidates.end()) {
                candidates.push_back(pairs[j].keyword);
            }
        }
        if (candidates.size() < neg_per_pair) {
            throw std::invalid_argument(
                "cross_sample: batch cannot supply " + std::to_string(neg_per_pair) +
                " distinct negative keywords");
        }
        std::mt19937_64 rng(seed ^ (0x51e03daf3b2c1a5full + i * 0x9e3779b97f4a7c15ull));
        std::shuffle(candidates.begin(), candidates.end(), rng);
        SampleGroup group;
        group.positive = pairs[i];
        for (uint32_t k = 0; k < neg_per_pair; ++k) {
            group.negatives.push_back({pairs[i].query, candidates[k]});
        }
        groups.push_back(std::move(group));
    }
    return groups;
}

double group_probability(std::span<const double> similarities,
                         size_t positive_index, double gamma) {
    if (similarities.empty() || positive_index >= similarities.size()) {
        throw std::invalid_argument("group_probability: bad positive index");
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (double s : similarities) {
        if (!std::isfinite(s)) {
            throw std::invalid_argument("group_probability: non-finite similarity");
        }
        mx = std::max(mx, gamma * s);
    }
    double denom = 0.0;
    for (double s : similarities) denom += std::exp(gamma * s - mx);
    return std::exp(gamma * similarities[positive_index] - mx) / denom;
}

namespace {

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double na = a.norm(), nb = b.norm();
    if (na < 1e-12 || nb < 1e-12) return 0.0;  // degenerate reconstruction
    return a.dot(b) / (na * nb);
}

// d cos(a, b) / d a; zero at degenerate norms, matching cosine() above.
Eigen::VectorXd cosine_grad_lhs(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double na = a.norm(), nb = b.norm();
    if (na < 1e-12 || nb < 1e-12) return Eigen::VectorXd::Zero(a.size());
    const double dot = a.dot(b);
    return b / (na * nb) - (dot / (na * na * na * nb)) * a;
}

}  // namespace

double score_pair(const RbeModelParams& params, const Featurizer& featurizer,
                  std::string_view query, std::string_view keyword) {
    const uint32_t u = params.config.full_precision ? 0 : params.config.u;
    const uint32_t v = params.config.full_precision ? 0 : params.config.v;
    const auto tq = forward(params, Side::Query, featurizer.featurize(query), u);
    const auto tk = forward(params, Side::Keyword, featurizer.featurize(keyword), v);
    return cosine(tq.refined, tk.refined);
}

double objective(std::span<const SampleGroup> groups, const RbeModelParams& params,
                 const Featurizer& featurizer) {
    if (groups.empty()) {
        throw std::invalid_argument("objective: no groups");
    }
    double total = 0.0;
    std::vector<double> sims;
    for (const SampleGroup& group : groups) {
        sims.clear();
        sims.push_back(
            score_pair(params, featurizer, group.positive.query, group.positive.keyword));
        for (const ClickPair& neg : group.negatives) {
            sims.push_back(score_pair(params, featurizer, neg.query, neg.keyword));
        }
        total += -std::log(group_probability(sims, 0, params.gamma));
    }
    return total / double(groups.size());
}

namespace {

struct TextForward {
    ForwardTrace trace;
    Eigen::VectorXd grad;  // accumulated d(loss)/d(refined)
};

// Per-batch forward cache keyed by text, iterated in insertion order so the
// gradient reduction is deterministic.
class BatchTower {
public:
    BatchTower(const RbeModelParams& params, Side side, uint32_t steps, double alpha,
               const std::unordered_map<std::string, SparseVector>& features)
        : params_(params), side_(side), steps_(steps), alpha_(alpha),
          features_(features) {}

    size_t require(const std::string& text) {
        auto it = lookup_.find(text);
        if (it != lookup_.end()) return it->second;
        TextForward tf;
        tf.trace = forward(params_, side_, features_.at(text), steps_,
                           ForwardMode::Hard, alpha_);
        tf.grad = Eigen::VectorXd::Zero(tf.trace.refined.size());
        entries_.push_back(std::move(tf));
        lookup_.emplace(text, entries_.size() - 1);
        return entries_.size() - 1;
    }

    TextForward& at(size_t i) { return entries_[i]; }

    void backward_all(SideParams& grads) {
        for (TextForward& tf : entries_) {
            backward(params_, side_, tf.trace, tf.grad, ForwardMode::Hard, alpha_,
                     grads);
        }
    }

private:
    const RbeModelParams& params_;
    Side side_;
    uint32_t steps_;
    double alpha_;
    const std::unordered_map<std::string, SparseVector>& features_;
    std::vector<TextForward> entries_;
    std::unordered_map<std::string, size_t> lookup_;
};

SideParams zero_like(const SideParams& p) {
    SideParams z = p;
    z.setZero();
    return z;
}

double evaluate_groups_auc(std::span<const SampleGroup> groups,
                           const RbeModelParams& params, const Featurizer& featurizer) {
    std::vector<std::pair<double, int>> scored;
    for (const SampleGroup& group : groups) {
        scored.emplace_back(
            score_pair(params, featurizer, group.positive.query, group.positive.keyword),
            1);
        for (const ClickPair& neg : group.negatives) {
            scored.emplace_back(score_pair(params, featurizer, neg.query, neg.keyword), 0);
        }
    }
    return evaluate_auc(scored);
}

}  // namespace

TrainResult train(std::span<const ClickPair> dataset, const TrainConfig& config) {
    if (dataset.empty()) {
        throw std::invalid_argument("train: empty dataset");
    }
    if (config.group_size < 2) {
        throw std::invalid_argument("train: group_size must be at least 2");
    }
    const uint32_t neg_per_pair = config.group_size - 1;
    const Featurizer featurizer{config.model.hash_dim};

    // Featurize every distinct string once up front.
    std::unordered_map<std::string, SparseVector> features;
    for (const ClickPair& pair : dataset) {
        features.try_emplace(pair.query, featurizer.featurize(pair.query));
        features.try_emplace(pair.keyword, featurizer.featurize(pair.keyword));
    }

    // Deterministic split.
    std::vector<size_t> order(dataset.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 split_rng(config.seed ^ 0xa02bdbf7bb3c0a7ull);
    std::shuffle(order.begin(), order.end(), split_rng);
    size_t valid_count = size_t(std::llround(config.validation_fraction *
                                             double(dataset.size())));
    valid_count = std::min(valid_count, dataset.size() - 1);
    std::vector<ClickPair> valid_pairs, train_pairs;
    for (size_t i = 0; i < order.size(); ++i) {
        (i < valid_count ? valid_pairs : train_pairs).push_back(dataset[order[i]]);
    }

    std::vector<SampleGroup> valid_groups;
    if (!valid_pairs.empty()) {
        valid_groups = cross_sample(valid_pairs, neg_per_pair,
                                    config.seed ^ 0x7d0c1ed6ull);
    }

    RbeModelParams params =
        RbeModelParams::init(config.model, config.gamma, config.seed);
    const uint32_t u = config.model.full_precision ? 0 : config.model.u;
    const uint32_t v = config.model.full_precision ? 0 : config.model.v;

    auto eval_losses = [&](const RbeModelParams& p, double* train_loss,
                           double* valid_loss, double* auc) {
        std::vector<SampleGroup> train_eval =
            cross_sample(train_pairs, neg_per_pair, config.seed ^ 0x11d5ull);
        *train_loss = objective(train_eval, p, featurizer);
        if (!valid_groups.empty()) {
            *valid_loss = objective(valid_groups, p, featurizer);
            *auc = evaluate_groups_auc(valid_groups, p, featurizer);
        } else {
            *valid_loss = *train_loss;
            *auc = evaluate_groups_auc(train_eval, p, featurizer);
        }
    };

    TrainResult result;
    {
        EpochMetrics m0;
        m0.epoch = 0;
        eval_losses(params, &m0.train_loss, &m0.valid_loss, &m0.valid_auc);
        result.history.push_back(m0);
    }

    RbeModelParams best = params;
    double best_valid = result.history.front().valid_loss;
    uint32_t since_best = 0;
    SideParams query_grads = zero_like(params.query);
    SideParams keyword_grads = zero_like(params.keyword);

    for (uint32_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const double lr = config.learning_rate *
                          std::pow(config.lr_decay, double(epoch - 1));
        const double alpha = config.model.annealing_slope *
                             std::pow(config.model.annealing_growth, double(epoch - 1));

        std::vector<ClickPair> shuffled = train_pairs;
        std::mt19937_64 epoch_rng(config.seed + 0x9e37ull * epoch);
        std::shuffle(shuffled.begin(), shuffled.end(), epoch_rng);

        double epoch_loss = 0.0;
        size_t epoch_groups = 0;
        size_t start = 0;
        size_t batch_index = 0;
        while (start < shuffled.size()) {
            size_t end = std::min(start + config.batch_size, shuffled.size());
            // Fold a too-small tail into this batch.
            if (shuffled.size() - end < config.group_size) end = shuffled.size();
            std::span<const ClickPair> batch(shuffled.data() + start, end - start);
            const uint64_t batch_seed =
                config.seed ^ (uint64_t(epoch) << 32) ^ (batch_index * 0x2545f491ull);
            const auto groups = cross_sample(batch, neg_per_pair, batch_seed);

            BatchTower queries(params, Side::Query, u, alpha, features);
            BatchTower keywords(params, Side::Keyword, v, alpha, features);

            std::vector<double> sims;
            std::vector<size_t> kw_slots;
            for (const SampleGroup& group : groups) {
                const size_t q_slot = queries.require(group.positive.query);
                sims.clear();
                kw_slots.clear();
                kw_slots.push_back(keywords.require(group.positive.keyword));
                for (const ClickPair& neg : group.negatives) {
                    kw_slots.push_back(keywords.require(neg.keyword));
                }
                const Eigen::VectorXd& q_ref = queries.at(q_slot).trace.refined;
                for (size_t slot : kw_slots) {
                    sims.push_back(cosine(q_ref, keywords.at(slot).trace.refined));
                }
                const double p = group_probability(sims, 0, config.gamma);
                epoch_loss += -std::log(p);
                ++epoch_groups;

                // d(-log softmax_0)/d sim_j = gamma * (p_j - [j == 0])
                double mx = -std::numeric_limits<double>::infinity();
                for (double s : sims) mx = std::max(mx, config.gamma * s);
                double denom = 0.0;
                for (double s : sims) denom += std::exp(config.gamma * s - mx);
                for (size_t j = 0; j < sims.size(); ++j) {
                    const double pj = std::exp(config.gamma * sims[j] - mx) / denom;
                    const double dsim = config.gamma * (pj - (j == 0 ? 1.0 : 0.0));
                    const Eigen::VectorXd& k_ref =
                        keywords.at(kw_slots[j]).trace.refined;
                    queries.at(q_slot).grad += dsim * cosine_grad_lhs(q_ref, k_ref);
                    keywords.at(kw_slots[j]).grad +=
                        dsim * cosine_grad_lhs(k_ref, q_ref);
                }
            }

            query_grads.setZero();
            keyword_grads.setZero();
            queries.backward_all(query_grads);
            keywords.backward_all(keyword_grads);
            const double scale = -lr / double(groups.size());
            params.query.add_scaled(query_grads, scale);
            params.keyword.add_scaled(keyword_grads, scale);

            start = end;
            ++batch_index;
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = epoch_loss / double(epoch_groups);
        if (!valid_groups.empty()) {
            m.valid_loss = objective(valid_groups, params, featurizer);
            m.valid_auc = evaluate_groups_auc(valid_groups, params, featurizer);
        } else {
            m.valid_loss = m.train_loss;
            m.valid_auc = 0.5;
        }
        if (!std::isfinite(m.train_loss) || !std::isfinite(m.valid_loss)) {
            throw std::runtime_error("train: loss diverged at epoch " +
                                     std::to_string(epoch));
        }
        result.history.push_back(m);

        if (m.valid_loss < best_valid) {
            best_valid = m.valid_loss;
            best = params;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
    }

    result.params = valid_groups.empty() ? params : best;
    return result;
}

std::vector<ClickPair> load_pairs_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open training data: " + path.string());
    }
    std::vector<ClickPair> pairs;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected query<TAB>keyword");
        }
        pairs.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    return pairs;
}

std::vector<LabeledPair> load_labeled_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open labeled data: " + path.string());
    }
    std::vector<LabeledPair> pairs;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        LabeledPair p;
        std::string label;
        if (!std::getline(ss, p.query, '\t') || !std::getline(ss, p.keyword, '\t') ||
            !std::getline(ss, label)) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected query<TAB>keyword<TAB>label");
        }
        p.label = std::stoi(label);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

void write_metrics_csv(std::span<const EpochMetrics> history,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open metrics file: " + path.string());
    }
    out << "epoch,train_loss,valid_loss,valid_auc\n";
    char buf[160];
    for (const EpochMetrics& m : history) {
        std::snprintf(buf, sizeof(buf), "%u,%.9g,%.9g,%.9g\n", m.epoch, m.train_loss,
                      m.valid_loss, m.valid_auc);
        out << buf;
    }
}

}  // namespace rbe
