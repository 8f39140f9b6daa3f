#include "rbe/metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace rbe {

double evaluate_auc(std::span<const std::pair<double, int>> scored) {
    std::vector<size_t> order(scored.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return scored[a].first < scored[b].first;
    });

    size_t positives = 0;
    double rank_sum = 0.0;  // average ranks of positives, 1-based
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() &&
               scored[order[j]].first == scored[order[i]].first) {
            ++j;
        }
        const double avg_rank = 0.5 * double(i + 1 + j);  // mean of ranks i+1..j
        for (size_t k = i; k < j; ++k) {
            if (scored[order[k]].second != 0) {
                ++positives;
                rank_sum += avg_rank;
            }
        }
        i = j;
    }
    const size_t negatives = scored.size() - positives;
    if (positives == 0 || negatives == 0) {
        throw std::invalid_argument("evaluate_auc: need both classes");
    }
    const double u = rank_sum - double(positives) * double(positives + 1) / 2.0;
    return u / (double(positives) * double(negatives));
}

}  // namespace rbe
