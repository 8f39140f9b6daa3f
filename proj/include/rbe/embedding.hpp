#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rbe/binary_vector.hpp"

namespace rbe {

/// A recurrent binary embedding: plane 0 is the base vector, plane t >= 1 is
/// the residual added at step t (with weight 2^-t when residual weights are
/// on). magnitude caches the Euclidean norm of the reconstructed float vector.
struct RbeEmbedding {
    std::vector<PackedBinaryVector> planes;
    double magnitude = 0.0;

    uint32_t dim() const { return planes.empty() ? 0 : planes.front().dim; }
};

struct SimilarityConfig {
    uint32_t query_planes = 1;    // u + 1
    uint32_t keyword_planes = 1;  // v + 1
    bool residual_weights = true;
    // Full cosine when true; with it off the query norm is dropped, which
    // preserves per-query ranking and is what the scan engine uses.
    bool normalize_query = true;
};

/// Float reconstruction: plane t contributes 2^-t per dimension when
/// residual_weights is on, 1 otherwise.
std::vector<double> refined_vector(const RbeEmbedding& e, bool residual_weights);

/// Builds an embedding from planes, computing the cached magnitude.
RbeEmbedding make_embedding(std::vector<PackedBinaryVector> planes,
                            bool residual_weights);

/// Combines the grid of per-plane integer dot products into the embedding dot
/// product. dots is row-major [query_planes x keyword_planes]. With residual
/// weights, plane pair (s, t) carries weight 2^-(s+t); the sum is evaluated
/// Horner-style over weight levels so the integer accumulator stays exact and
/// is scaled by 2^(u+v) until the single final division.
double combine_plane_dots(const int64_t* dots, uint32_t query_planes,
                          uint32_t keyword_planes, bool residual_weights);

/// Similarity of Eq-style decomposed embeddings. With normalize_query on this
/// is the exact cosine of the two reconstructed float vectors; off, the query
/// norm is dropped. Throws on dimension/plane-count mismatch or zero keyword
/// magnitude.
double rbe_score(const RbeEmbedding& q, const RbeEmbedding& k,
                 const SimilarityConfig& cfg);

}  // namespace rbe
