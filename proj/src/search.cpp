#include "rbe/search.hpp"

#include <algorithm>
#include <atomic>
#include <future>
#include <stdexcept>

namespace rbe {

std::vector<uint64_t> thread_assignment(const ScanGeometry& geometry,
                                        uint64_t partition_count, uint32_t block,
                                        uint32_t thread) {
    if (block >= geometry.blocks || thread >= geometry.threads_per_block) {
        throw std::invalid_argument("thread_assignment: block or thread out of range");
    }
    std::vector<uint64_t> items;
    items.reserve(geometry.items_per_thread);
    uint64_t z = uint64_t(block) * geometry.threads_per_block *
                     geometry.items_per_thread +
                 thread;
    for (uint32_t i = 0; i < geometry.items_per_thread; ++i) {
        if (z < partition_count) items.push_back(z);
        z += geometry.threads_per_block;
    }
    return items;
}

namespace {

// Keeps the best queue_length candidates by (score desc, slot asc). Queues
// are tiny (length 1 in production), so a sorted array beats a heap.
struct BoundedQueue {
    uint32_t capacity;
    std::vector<Candidate>& entries;

    void insert(double score, uint64_t slot) {
        if (entries.size() == capacity) {
            const Candidate& worst = entries.back();
            if (score <= worst.score) return;  // equal keeps the earlier slot
            entries.pop_back();
        }
        auto pos = std::upper_bound(entries.begin(), entries.end(), score,
                                    [](double s, const Candidate& c) {
                                        return s > c.score;
                                    });
        entries.insert(pos, Candidate{score, slot});
    }
};

bool entry_less(const SelectionEntry& a, const SelectionEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
}

}  // namespace

std::vector<std::vector<Candidate>> local_select(const RbeEmbedding& query,
                                                 const KeywordIndex& index,
                                                 uint32_t partition,
                                                 const ScanGeometry& geometry,
                                                 SearchStats* stats) {
    if (query.dim() != index.dim) {
        throw std::invalid_argument("local_select: query dimension mismatch");
    }
    if (geometry.queue_length == 0) {
        throw std::invalid_argument("local_select: queue_length must be positive");
    }
    const Partition& part = index.partitions.at(partition);
    if (geometry.capacity() < part.count) {
        throw std::invalid_argument("local_select: geometry does not cover partition");
    }
    const size_t wpp = index.words_per_plane();
    const uint32_t qplanes = uint32_t(query.planes.size());
    const uint32_t kplanes = index.keyword_planes;

    std::vector<std::vector<Candidate>> lists(uint64_t(geometry.blocks) *
                                              geometry.threads_per_block);
    uint64_t scored = 0;
    int64_t dots[64];
    if (qplanes * kplanes > 64) {
        throw std::invalid_argument("local_select: too many planes");
    }
    for (uint32_t x = 0; x < geometry.blocks; ++x) {
        for (uint32_t y = 0; y < geometry.threads_per_block; ++y) {
            auto& list = lists[uint64_t(x) * geometry.threads_per_block + y];
            list.reserve(geometry.queue_length);
            BoundedQueue queue{geometry.queue_length, list};
            uint64_t z = (uint64_t(x) * geometry.threads_per_block *
                          geometry.items_per_thread) +
                         y;
            for (uint32_t i = 0; i < geometry.items_per_thread;
                 ++i, z += geometry.threads_per_block) {
                if (z >= part.count) continue;
                for (uint32_t s = 0; s < qplanes; ++s) {
                    const uint64_t* qwords = query.planes[s].words.data();
                    for (uint32_t t = 0; t < kplanes; ++t) {
                        dots[s * kplanes + t] = binary_dot_words(
                            qwords, part.plane_blocks[t].data() + z * wpp, wpp,
                            index.dim);
                    }
                }
                const double score =
                    combine_plane_dots(dots, qplanes, kplanes,
                                       index.residual_weights) /
                    double(part.magnitudes[z]);
                queue.insert(score, z);
                ++scored;
            }
        }
    }
    if (stats != nullptr) stats->scored += scored;
    return lists;
}

SelectionResult global_select(const std::vector<std::vector<Candidate>>& per_thread,
                              const Partition& partition, uint32_t partition_ordinal,
                              uint64_t n) {
    SelectionResult result;
    for (const auto& list : per_thread) {
        for (const Candidate& c : list) {
            result.entries.push_back(
                SelectionEntry{c.score, partition.ids[c.slot], partition_ordinal});
        }
    }
    std::sort(result.entries.begin(), result.entries.end(), entry_less);
    if (result.entries.size() > n) result.entries.resize(n);
    return result;
}

SelectionResult search(const RbeEmbedding& query, const KeywordIndex& index,
                       const ScanGeometry& geometry, uint64_t n,
                       SearchStats* stats) {
    if (index.partitions.empty() || index.total_keywords() == 0) {
        throw std::invalid_argument("search: empty index");
    }
    std::vector<SelectionResult> per_partition(index.partitions.size());
    std::atomic<uint64_t> scored{0};

    auto scan_one = [&](uint32_t p) {
        SearchStats local_stats;
        const auto lists =
            local_select(query, index, p, geometry,
                         stats != nullptr ? &local_stats : nullptr);
        scored += local_stats.scored;
        per_partition[p] = global_select(lists, index.partitions[p], p, n);
    };

    if (index.partitions.size() == 1) {
        scan_one(0);
    } else {
        std::vector<std::future<void>> workers;
        workers.reserve(index.partitions.size());
        for (uint32_t p = 0; p < index.partitions.size(); ++p) {
            workers.push_back(std::async(std::launch::async, scan_one, p));
        }
        for (auto& w : workers) w.get();
    }
    if (stats != nullptr) stats->scored += scored.load();

    SelectionResult merged;
    for (const SelectionResult& part : per_partition) {
        merged.entries.insert(merged.entries.end(), part.entries.begin(),
                              part.entries.end());
    }
    std::sort(merged.entries.begin(), merged.entries.end(), entry_less);
    if (merged.entries.size() > n) merged.entries.resize(n);
    return merged;
}

}  // namespace rbe
