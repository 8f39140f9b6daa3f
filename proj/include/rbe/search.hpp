#pragma once

#include <cstdint>
#include <vector>

#include "rbe/index.hpp"

namespace rbe {

/// Candidate-to-worker assignment mirroring the scan kernel: thread y of
/// block x starts at z = x*T_b*I + y and strides by T_b for I items.
struct ScanGeometry {
    uint32_t blocks = 1;
    uint32_t threads_per_block = 256;
    uint32_t items_per_thread = 256;
    uint32_t queue_length = 1;

    uint64_t capacity() const {
        return uint64_t(blocks) * threads_per_block * items_per_thread;
    }
};

/// The items one simulated thread scans, in scan order, range-filtered to the
/// partition. Throws when block/thread are out of range.
std::vector<uint64_t> thread_assignment(const ScanGeometry& geometry,
                                        uint64_t partition_count, uint32_t block,
                                        uint32_t thread);

struct Candidate {
    double score = 0.0;
    uint64_t slot = 0;  // index within the partition
};

struct SelectionEntry {
    double score = 0.0;
    uint64_t id = 0;
    uint32_t partition = 0;
};

/// Entries ordered by (score desc, id asc); at most the requested N.
struct SelectionResult {
    std::vector<SelectionEntry> entries;
};

struct SearchStats {
    uint64_t scored = 0;  // similarity evaluations; equals keyword count
};

/// Per-thread scan of one partition: every stored keyword is scored exactly
/// once with the query norm dropped; each thread keeps its best queue_length
/// candidates (ties prefer the lower slot). Returned lists are indexed by
/// block * threads_per_block + thread.
std::vector<std::vector<Candidate>> local_select(const RbeEmbedding& query,
                                                 const KeywordIndex& index,
                                                 uint32_t partition,
                                                 const ScanGeometry& geometry,
                                                 SearchStats* stats = nullptr);

/// Sorts the surviving candidates of one partition under (score desc, id asc)
/// and keeps the best N.
SelectionResult global_select(const std::vector<std::vector<Candidate>>& per_thread,
                              const Partition& partition, uint32_t partition_ordinal,
                              uint64_t n);

/// Full pipeline: per-partition local+global selection (parallel across
/// partitions) merged under the global key. Deterministic for a given index,
/// query, and geometry regardless of worker scheduling.
SelectionResult search(const RbeEmbedding& query, const KeywordIndex& index,
                       const ScanGeometry& geometry, uint64_t n,
                       SearchStats* stats = nullptr);

}  // namespace rbe
