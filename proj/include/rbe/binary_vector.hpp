#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

namespace rbe {

/// One ingredient plane: n values in {-1,+1} packed into 64-bit words.
/// Bit i of words[i/64] is set iff dimension i is +1. Bits at positions
/// >= dim are always zero, so word-wise equality implies logical equality
/// and the XOR/popcount kernel needs no tail masking.
struct PackedBinaryVector {
    uint32_t dim = 0;
    std::vector<uint64_t> words;

    static size_t words_for(uint32_t dim) { return (size_t(dim) + 63) / 64; }

    bool operator==(const PackedBinaryVector&) const = default;
};

/// Packs a {-1,+1} sequence. Throws std::invalid_argument on empty input or
/// values outside {-1,+1}.
PackedBinaryVector pack(std::span<const int> values);

/// Inverse of pack.
std::vector<int> unpack(const PackedBinaryVector& v);

/// Raw kernel: dot product of two packed {-1,+1} vectors stored at x and y,
/// both dim logical dimensions with canonical zero padding.
/// Identity: x.y = dim - 2*popcount(x XOR y).
inline int64_t binary_dot_words(const uint64_t* x, const uint64_t* y,
                                size_t nwords, uint32_t dim) {
    uint64_t mismatched = 0;
    for (size_t i = 0; i < nwords; ++i) {
        mismatched += std::popcount(x[i] ^ y[i]);
    }
    return int64_t(dim) - 2 * int64_t(mismatched);
}

/// Dot product over logical {-1,+1} vectors; throws on dimension mismatch.
int64_t binary_dot(const PackedBinaryVector& x, const PackedBinaryVector& y);

}  // namespace rbe
