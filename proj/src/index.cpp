#include "rbe/index.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace rbe {

uint64_t KeywordIndex::total_keywords() const {
    uint64_t total = 0;
    for (const Partition& p : partitions) total += p.count;
    return total;
}

uint64_t KeywordIndex::plane_bytes_per_keyword() const {
    return uint64_t(keyword_planes) * words_per_plane() * 8;
}

uint64_t KeywordIndex::plane_payload_bytes() const {
    uint64_t total = 0;
    for (const Partition& p : partitions) {
        for (const auto& block : p.plane_blocks) total += block.size() * 8;
    }
    return total;
}

IndexBuilder::IndexBuilder(uint32_t partition_count, bool residual_weights) {
    if (partition_count == 0) {
        throw std::invalid_argument("IndexBuilder: need at least one partition");
    }
    index_.residual_weights = residual_weights;
    index_.partitions.resize(partition_count);
}

void IndexBuilder::add(uint64_t id, const RbeEmbedding& embedding) {
    if (embedding.planes.empty()) {
        throw std::invalid_argument("IndexBuilder: embedding has no planes");
    }
    if (added_ == 0) {
        index_.dim = embedding.dim();
        index_.keyword_planes = uint32_t(embedding.planes.size());
        for (Partition& p : index_.partitions) {
            p.plane_blocks.resize(index_.keyword_planes);
        }
    } else if (embedding.dim() != index_.dim ||
               embedding.planes.size() != index_.keyword_planes) {
        throw std::invalid_argument(
            "IndexBuilder: inconsistent dim or plane count in stream");
    }
    seen_ids_.push_back(id);

    Partition& p = index_.partitions[added_ % index_.partitions.size()];
    for (uint32_t t = 0; t < index_.keyword_planes; ++t) {
        const auto& words = embedding.planes[t].words;
        p.plane_blocks[t].insert(p.plane_blocks[t].end(), words.begin(), words.end());
    }
    double magnitude = embedding.magnitude;
    if (!(magnitude > 0.0)) {
        RbeEmbedding rebuilt = make_embedding(embedding.planes, index_.residual_weights);
        magnitude = rebuilt.magnitude;
    }
    if (!(magnitude > 0.0)) {
        throw std::invalid_argument("IndexBuilder: keyword has zero magnitude");
    }
    p.magnitudes.push_back(float(magnitude));
    p.ids.push_back(id);
    ++p.count;
    ++added_;
}

KeywordIndex IndexBuilder::finish() {
    std::sort(seen_ids_.begin(), seen_ids_.end());
    if (std::adjacent_find(seen_ids_.begin(), seen_ids_.end()) != seen_ids_.end()) {
        throw std::invalid_argument("IndexBuilder: duplicate keyword id");
    }
    return std::move(index_);
}

KeywordIndex build_index(std::span<const std::pair<uint64_t, RbeEmbedding>> embeddings,
                         uint32_t partition_count, bool residual_weights) {
    IndexBuilder builder(partition_count, residual_weights);
    for (const auto& [id, embedding] : embeddings) builder.add(id, embedding);
    return builder.finish();
}

RbeEmbedding index_entry(const KeywordIndex& index, uint32_t partition, uint64_t slot) {
    const Partition& p = index.partitions.at(partition);
    if (slot >= p.count) {
        throw std::out_of_range("index_entry: slot out of range");
    }
    const size_t wpp = index.words_per_plane();
    std::vector<PackedBinaryVector> planes;
    for (uint32_t t = 0; t < index.keyword_planes; ++t) {
        PackedBinaryVector v;
        v.dim = index.dim;
        v.words.assign(p.plane_blocks[t].begin() + slot * wpp,
                       p.plane_blocks[t].begin() + (slot + 1) * wpp);
        planes.push_back(std::move(v));
    }
    RbeEmbedding e = make_embedding(std::move(planes), index.residual_weights);
    e.magnitude = double(p.magnitudes[slot]);
    return e;
}

namespace {

constexpr char kIndexMagic[4] = {'R', 'B', 'E', 'I'};
constexpr uint32_t kIndexVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
    unsigned char buf[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = (uint64_t(value) >> (8 * i)) & 0xff;
    }
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= uint64_t(buf[i]) << (8 * i);
    return T(v);
}

void write_f32(std::ostream& out, float value) {
    uint32_t bits;
    std::memcpy(&bits, &value, 4);
    write_le<uint32_t>(out, bits);
}

float read_f32(std::istream& in) {
    const uint32_t bits = read_le<uint32_t>(in);
    float value;
    std::memcpy(&value, &bits, 4);
    return value;
}

}  // namespace

void save_index(const KeywordIndex& index, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open index for writing: " + path.string());
    }
    out.write(kIndexMagic, 4);
    write_le<uint32_t>(out, kIndexVersion);
    write_le<uint32_t>(out, index.dim);
    write_le<uint32_t>(out, index.keyword_planes);
    write_le<uint32_t>(out, index.residual_weights ? 1 : 0);
    write_le<uint32_t>(out, uint32_t(index.partitions.size()));
    for (const Partition& p : index.partitions) {
        write_le<uint64_t>(out, p.count);
    }
    for (const Partition& p : index.partitions) {
        for (const auto& block : p.plane_blocks) {
            for (uint64_t word : block) write_le<uint64_t>(out, word);
        }
        for (float m : p.magnitudes) write_f32(out, m);
        for (uint64_t id : p.ids) write_le<uint64_t>(out, id);
    }
    if (!out) {
        throw std::runtime_error("failed writing index: " + path.string());
    }
}

KeywordIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open index: " + path.string());
    }
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kIndexMagic, 4) != 0) {
        throw std::runtime_error("not an RBEI index file: " + path.string());
    }
    if (read_le<uint32_t>(in) != kIndexVersion) {
        throw std::runtime_error("unsupported index version");
    }
    KeywordIndex index;
    index.dim = read_le<uint32_t>(in);
    index.keyword_planes = read_le<uint32_t>(in);
    index.residual_weights = read_le<uint32_t>(in) != 0;
    const uint32_t partition_count = read_le<uint32_t>(in);
    index.partitions.resize(partition_count);
    for (Partition& p : index.partitions) {
        p.count = read_le<uint64_t>(in);
    }
    const size_t wpp = index.words_per_plane();
    for (Partition& p : index.partitions) {
        p.plane_blocks.assign(index.keyword_planes, {});
        for (auto& block : p.plane_blocks) {
            block.resize(p.count * wpp);
            for (uint64_t& word : block) word = read_le<uint64_t>(in);
        }
        p.magnitudes.resize(p.count);
        for (float& m : p.magnitudes) m = read_f32(in);
        p.ids.resize(p.count);
        for (uint64_t& id : p.ids) id = read_le<uint64_t>(in);
    }
    if (!in) {
        throw std::runtime_error("truncated index file: " + path.string());
    }
    return index;
}

}  // namespace rbe
