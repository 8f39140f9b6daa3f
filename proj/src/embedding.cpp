#include "rbe/embedding.hpp"

#include <stdexcept>

namespace rbe {

std::vector<double> refined_vector(const RbeEmbedding& e, bool residual_weights) {
    if (e.planes.empty()) {
        throw std::invalid_argument("refined_vector: embedding has no planes");
    }
    const uint32_t dim = e.planes.front().dim;
    std::vector<double> out(dim, 0.0);
    for (size_t t = 0; t < e.planes.size(); ++t) {
        const auto& plane = e.planes[t];
        if (plane.dim != dim) {
            throw std::invalid_argument("refined_vector: plane dim mismatch");
        }
        const double w = residual_weights ? std::ldexp(1.0, -int(t)) : 1.0;
        for (uint32_t i = 0; i < dim; ++i) {
            const bool bit = (plane.words[i / 64] >> (i % 64)) & 1;
            out[i] += bit ? w : -w;
        }
    }
    return out;
}

RbeEmbedding make_embedding(std::vector<PackedBinaryVector> planes,
                            bool residual_weights) {
    RbeEmbedding e;
    e.planes = std::move(planes);
    const auto refined = refined_vector(e, residual_weights);
    double sq = 0.0;
    for (double x : refined) sq += x * x;
    e.magnitude = std::sqrt(sq);
    return e;
}

double combine_plane_dots(const int64_t* dots, uint32_t query_planes,
                          uint32_t keyword_planes, bool residual_weights) {
    if (!residual_weights) {
        int64_t sum = 0;
        for (uint32_t i = 0; i < query_planes * keyword_planes; ++i) sum += dots[i];
        return double(sum);
    }
    // Level l = s + t groups all pairs of weight 2^-l. Descending a level
    // doubles the scaled accumulator, so at most u+v shifts happen per score.
    const uint32_t levels = query_planes + keyword_planes - 2;
    int64_t acc = 0;
    for (uint32_t l = 0; l <= levels; ++l) {
        acc <<= (l > 0 ? 1 : 0);
        const uint32_t s_lo = l >= keyword_planes ? l - keyword_planes + 1 : 0;
        const uint32_t s_hi = l < query_planes ? l : query_planes - 1;
        for (uint32_t s = s_lo; s <= s_hi; ++s) {
            acc += dots[s * keyword_planes + (l - s)];
        }
    }
    return std::ldexp(double(acc), -int(levels));
}

double rbe_score(const RbeEmbedding& q, const RbeEmbedding& k,
                 const SimilarityConfig& cfg) {
    if (q.planes.size() != cfg.query_planes || k.planes.size() != cfg.keyword_planes) {
        throw std::invalid_argument("rbe_score: plane count does not match config");
    }
    if (q.dim() != k.dim()) {
        throw std::invalid_argument("rbe_score: dimension mismatch");
    }
    if (!(k.magnitude > 0.0)) {
        throw std::invalid_argument("rbe_score: zero keyword magnitude");
    }
    int64_t dots[64];
    if (cfg.query_planes * cfg.keyword_planes > 64) {
        throw std::invalid_argument("rbe_score: too many planes");
    }
    for (uint32_t s = 0; s < cfg.query_planes; ++s) {
        for (uint32_t t = 0; t < cfg.keyword_planes; ++t) {
            dots[s * cfg.keyword_planes + t] = binary_dot(q.planes[s], k.planes[t]);
        }
    }
    double score = combine_plane_dots(dots, cfg.query_planes, cfg.keyword_planes,
                                      cfg.residual_weights) /
                   k.magnitude;
    if (cfg.normalize_query) {
        if (!(q.magnitude > 0.0)) {
            throw std::invalid_argument("rbe_score: zero query magnitude");
        }
        score /= q.magnitude;
    }
    return score;
}

}  // namespace rbe
