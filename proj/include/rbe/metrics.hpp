#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace rbe {

/// ROC AUC via the Mann-Whitney U statistic; tied scores contribute 1/2.
/// Input is (score, label) with label 0 or 1. Throws if either class is
/// absent.
double evaluate_auc(std::span<const std::pair<double, int>> scored);

}  // namespace rbe
