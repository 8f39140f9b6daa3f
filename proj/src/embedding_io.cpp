#include "rbe/embedding_io.hpp"

#include <stdexcept>

#include "serial.hpp"

namespace rbe {

namespace {
constexpr char kEmbeddingMagic[4] = {'R', 'B', 'E', 'E'};
constexpr uint32_t kEmbeddingVersion = 1;
constexpr size_t kHeaderBytes = 4 + 4 * 4;
}  // namespace

EmbeddingWriter::EmbeddingWriter(const std::filesystem::path& path, uint32_t dim,
                                 uint32_t plane_count, bool residual_weights)
    : out_(path, std::ios::binary), path_(path), dim_(dim), plane_count_(plane_count) {
    if (!out_) {
        throw std::runtime_error("cannot open embeddings file for writing: " +
                                 path.string());
    }
    if (dim == 0 || plane_count == 0) {
        throw std::invalid_argument("EmbeddingWriter: dim and plane count must be positive");
    }
    out_.write(kEmbeddingMagic, 4);
    detail::write_le<uint32_t>(out_, kEmbeddingVersion);
    detail::write_le<uint32_t>(out_, dim);
    detail::write_le<uint32_t>(out_, plane_count);
    detail::write_le<uint32_t>(out_, residual_weights ? 1 : 0);
}

void EmbeddingWriter::add(uint64_t id, const RbeEmbedding& embedding) {
    if (embedding.dim() != dim_ || embedding.planes.size() != plane_count_) {
        throw std::invalid_argument("EmbeddingWriter: record shape mismatch");
    }
    detail::write_le<uint64_t>(out_, id);
    for (const PackedBinaryVector& plane : embedding.planes) {
        for (uint64_t word : plane.words) detail::write_le<uint64_t>(out_, word);
    }
    detail::write_f32(out_, float(embedding.magnitude));
    if (!out_) {
        throw std::runtime_error("failed writing embeddings: " + path_.string());
    }
    ++written_;
}

EmbeddingReader::EmbeddingReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary) {
    if (!in_) {
        throw std::runtime_error("cannot open embeddings file: " + path.string());
    }
    char magic[4];
    in_.read(magic, 4);
    if (!in_ || std::memcmp(magic, kEmbeddingMagic, 4) != 0) {
        throw std::runtime_error("not an RBEE embeddings file: " + path.string());
    }
    if (detail::read_le<uint32_t>(in_) != kEmbeddingVersion) {
        throw std::runtime_error("unsupported embeddings version");
    }
    dim_ = detail::read_le<uint32_t>(in_);
    plane_count_ = detail::read_le<uint32_t>(in_);
    residual_weights_ = detail::read_le<uint32_t>(in_) != 0;
    if (dim_ == 0 || plane_count_ == 0) {
        throw std::runtime_error("embeddings file has empty shape: " + path.string());
    }

    const auto size = std::filesystem::file_size(path);
    const size_t words = PackedBinaryVector::words_for(dim_) * plane_count_;
    const size_t record = 8 + words * 8 + 4;
    if (size < kHeaderBytes || (size - kHeaderBytes) % record != 0) {
        throw std::runtime_error("embeddings file has truncated records: " +
                                 path.string());
    }
    count_ = (size - kHeaderBytes) / record;
}

std::optional<std::pair<uint64_t, RbeEmbedding>> EmbeddingReader::next() {
    if (read_ >= count_) return std::nullopt;
    const size_t wpp = PackedBinaryVector::words_for(dim_);
    const uint64_t id = detail::read_le<uint64_t>(in_);
    RbeEmbedding e;
    for (uint32_t t = 0; t < plane_count_; ++t) {
        PackedBinaryVector plane;
        plane.dim = dim_;
        plane.words.resize(wpp);
        for (uint64_t& word : plane.words) word = detail::read_le<uint64_t>(in_);
        e.planes.push_back(std::move(plane));
    }
    e.magnitude = double(detail::read_f32(in_));
    if (!in_) {
        throw std::runtime_error("truncated embeddings record");
    }
    ++read_;
    return std::make_pair(id, std::move(e));
}

}  // namespace rbe
