#include "rbe/featurizer.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

namespace rbe {

std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(char(std::tolower(c)));
    }
    return out;
}

namespace {

uint32_t hash_trigram(const char* p, uint32_t hash_dim) {
    uint64_t h = 14695981039346656037ull;  // FNV-1a
    for (int i = 0; i < 3; ++i) {
        h ^= uint8_t(p[i]);
        h *= 1099511628211ull;
    }
    return uint32_t(h % hash_dim);
}

}  // namespace

SparseVector Featurizer::featurize(std::string_view text) const {
    const std::string norm = normalize_text(text);
    if (norm.empty()) {
        throw std::invalid_argument("featurize: text is empty after normalization");
    }
    std::map<uint32_t, float> counts;
    size_t pos = 0;
    std::string wrapped;
    while (pos < norm.size()) {
        size_t end = norm.find(' ', pos);
        if (end == std::string::npos) end = norm.size();
        wrapped.assign(1, '#');
        wrapped.append(norm, pos, end - pos);
        wrapped.push_back('#');
        for (size_t i = 0; i + 3 <= wrapped.size(); ++i) {
            counts[hash_trigram(wrapped.data() + i, hash_dim)] += 1.0f;
        }
        pos = end + 1;
    }
    return SparseVector(counts.begin(), counts.end());
}

}  // namespace rbe
