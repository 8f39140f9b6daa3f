#include "rbe/binary_vector.hpp"

#include <stdexcept>

namespace rbe {

PackedBinaryVector pack(std::span<const int> values) {
    if (values.empty()) {
        throw std::invalid_argument("pack: empty input");
    }
    PackedBinaryVector v;
    v.dim = static_cast<uint32_t>(values.size());
    v.words.assign(PackedBinaryVector::words_for(v.dim), 0);
    for (size_t i = 0; i < values.size(); ++i) {
        if (values[i] == 1) {
            v.words[i / 64] |= uint64_t(1) << (i % 64);
        } else if (values[i] != -1) {
            throw std::invalid_argument("pack: values must be -1 or +1");
        }
    }
    return v;
}

std::vector<int> unpack(const PackedBinaryVector& v) {
    std::vector<int> out(v.dim);
    for (uint32_t i = 0; i < v.dim; ++i) {
        out[i] = (v.words[i / 64] >> (i % 64)) & 1 ? 1 : -1;
    }
    return out;
}

int64_t binary_dot(const PackedBinaryVector& x, const PackedBinaryVector& y) {
    if (x.dim != y.dim) {
        throw std::invalid_argument("binary_dot: dimension mismatch");
    }
    return binary_dot_words(x.words.data(), y.words.data(), x.words.size(), x.dim);
}

}  // namespace rbe
