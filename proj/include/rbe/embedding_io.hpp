#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <utility>

#include "rbe/embedding.hpp"

namespace rbe {

/// Bulk embeddings file: self-describing header (dim, plane count, flags)
/// followed by fixed-width records of (id, plane words in plane order,
/// float32 magnitude). Record width is implied by the header, so readers can
/// stream and validate length without a count field.
class EmbeddingWriter {
public:
    EmbeddingWriter(const std::filesystem::path& path, uint32_t dim,
                    uint32_t plane_count, bool residual_weights);
    void add(uint64_t id, const RbeEmbedding& embedding);
    uint64_t written() const { return written_; }

private:
    std::ofstream out_;
    std::filesystem::path path_;
    uint32_t dim_;
    uint32_t plane_count_;
    uint64_t written_ = 0;
};

class EmbeddingReader {
public:
    explicit EmbeddingReader(const std::filesystem::path& path);
    uint32_t dim() const { return dim_; }
    uint32_t plane_count() const { return plane_count_; }
    bool residual_weights() const { return residual_weights_; }
    uint64_t count() const { return count_; }

    std::optional<std::pair<uint64_t, RbeEmbedding>> next();

private:
    std::ifstream in_;
    uint32_t dim_ = 0;
    uint32_t plane_count_ = 0;
    bool residual_weights_ = true;
    uint64_t count_ = 0;
    uint64_t read_ = 0;
};

}  // namespace rbe
