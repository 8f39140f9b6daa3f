#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rbe {

/// Sparse feature: (hashed trigram index, count), sorted by index.
using SparseVector = std::vector<std::pair<uint32_t, float>>;

/// Lowercases ASCII letters, collapses whitespace runs to single spaces and
/// trims the ends.
std::string normalize_text(std::string_view text);

/// Character tri-letter-gram featurizer over '#'-wrapped tokens, hashed into
/// a fixed-size space. Deterministic across platforms (FNV-1a).
struct Featurizer {
    uint32_t hash_dim = uint32_t(1) << 15;

    /// Throws std::invalid_argument if the text is empty after normalization.
    SparseVector featurize(std::string_view text) const;
};

}  // namespace rbe
