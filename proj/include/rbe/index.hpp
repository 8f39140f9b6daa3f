#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "rbe/embedding.hpp"

namespace rbe {

/// One shard of the keyword store. Storage is plane-separated: all plane-0
/// words for the shard sit in one contiguous block, then all plane-1 words,
/// and so on, so a scan streams each plane sequentially.
struct Partition {
    uint64_t count = 0;
    std::vector<std::vector<uint64_t>> plane_blocks;  // [plane][count * words_per_plane]
    std::vector<float> magnitudes;
    std::vector<uint64_t> ids;
};

struct KeywordIndex {
    uint32_t dim = 0;
    uint32_t keyword_planes = 1;  // v + 1
    bool residual_weights = true;
    std::vector<Partition> partitions;

    size_t words_per_plane() const { return PackedBinaryVector::words_for(dim); }
    uint64_t total_keywords() const;
    /// Bytes of packed plane data per keyword: (v+1) * ceil(n/64) * 8.
    uint64_t plane_bytes_per_keyword() const;
    uint64_t plane_payload_bytes() const;
};

/// Streaming builder with round-robin partition assignment. Magnitudes are
/// recomputed from the reconstruction when the embedding carries none.
class IndexBuilder {
public:
    IndexBuilder(uint32_t partition_count, bool residual_weights);

    void add(uint64_t id, const RbeEmbedding& embedding);
    KeywordIndex finish();

private:
    KeywordIndex index_;
    uint64_t added_ = 0;
    std::vector<uint64_t> seen_ids_;
};

KeywordIndex build_index(std::span<const std::pair<uint64_t, RbeEmbedding>> embeddings,
                         uint32_t partition_count, bool residual_weights);

/// Fetches one stored keyword back as an embedding (test and tooling path).
RbeEmbedding index_entry(const KeywordIndex& index, uint32_t partition, uint64_t slot);

void save_index(const KeywordIndex& index, const std::filesystem::path& path);
KeywordIndex load_index(const std::filesystem::path& path);

}  // namespace rbe
