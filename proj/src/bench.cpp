#include "rbe/bench.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "rbe/binary_vector.hpp"
#include "rbe/embedding.hpp"

namespace rbe {

namespace {

uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
}

struct Timing {
    double mean = 0.0;
    double stddev = 0.0;
};

Timing summarize(const std::vector<double>& throughputs) {
    Timing t;
    for (double x : throughputs) t.mean += x;
    t.mean /= double(throughputs.size());
    if (throughputs.size() > 1) {
        double sq = 0.0;
        for (double x : throughputs) sq += (x - t.mean) * (x - t.mean);
        t.stddev = std::sqrt(sq / double(throughputs.size() - 1));
    }
    return t;
}

}  // namespace

BenchResult run_scan_benchmark(uint64_t count, uint32_t dim, uint32_t query_planes,
                               uint32_t keyword_planes, uint32_t repeats,
                               uint64_t seed, bool run_binary, bool run_float) {
    if (count == 0 || dim == 0 || repeats == 0) {
        throw std::invalid_argument("run_scan_benchmark: zero-sized benchmark");
    }
    BenchResult result;
    double sink = 0.0;

    std::vector<float> magnitudes(count);
    {
        uint64_t state = seed ^ 0x5bf0ull;
        for (uint64_t z = 0; z < count; ++z) {
            magnitudes[z] = 0.5f + float(splitmix64(state) >> 40) * 1e-4f;
        }
    }

    if (run_float) {
        std::vector<float> corpus(count * dim);
        uint64_t state = seed;
        for (float& x : corpus) {
            x = float(int64_t(splitmix64(state) & 0xffff) - 0x8000) / 32768.0f;
        }
        std::vector<float> query(dim);
        for (float& x : query) {
            x = float(int64_t(splitmix64(state) & 0xffff) - 0x8000) / 32768.0f;
        }
        std::vector<double> runs;
        for (uint32_t rep = 0; rep < repeats; ++rep) {
            const auto start = std::chrono::steady_clock::now();
            float best = -1e30f;
            const float* row = corpus.data();
            for (uint64_t z = 0; z < count; ++z, row += dim) {
                float dot = 0.0f;
                for (uint32_t i = 0; i < dim; ++i) dot += query[i] * row[i];
                const float score = dot / magnitudes[z];
                if (score > best) best = score;
            }
            runs.push_back(double(count) / elapsed_seconds(start));
            sink += double(best);
        }
        const Timing t = summarize(runs);
        result.float_throughput = t.mean;
        result.float_stddev = t.stddev;
    }

    if (run_binary) {
        const size_t wpp = PackedBinaryVector::words_for(dim);
        const uint64_t pad_mask =
            dim % 64 == 0 ? ~uint64_t(0) : (uint64_t(1) << (dim % 64)) - 1;
        std::vector<std::vector<uint64_t>> blocks(keyword_planes);
        uint64_t state = seed ^ 0xb17ull;
        for (auto& block : blocks) {
            block.resize(count * wpp);
            for (size_t i = 0; i < block.size(); ++i) {
                block[i] = splitmix64(state);
                if ((i + 1) % wpp == 0) block[i] &= pad_mask;
            }
        }
        std::vector<std::vector<uint64_t>> qplanes(query_planes);
        for (auto& plane : qplanes) {
            plane.resize(wpp);
            for (size_t i = 0; i < wpp; ++i) plane[i] = splitmix64(state);
            plane.back() &= pad_mask;
        }
        std::vector<int64_t> dots(size_t(query_planes) * keyword_planes);
        std::vector<double> runs;
        for (uint32_t rep = 0; rep < repeats; ++rep) {
            const auto start = std::chrono::steady_clock::now();
            double best = -1e30;
            for (uint64_t z = 0; z < count; ++z) {
                for (uint32_t s = 0; s < query_planes; ++s) {
                    for (uint32_t t = 0; t < keyword_planes; ++t) {
                        dots[s * keyword_planes + t] =
                            binary_dot_words(qplanes[s].data(),
                                             blocks[t].data() + z * wpp, wpp, dim);
                    }
                }
                const double score =
                    combine_plane_dots(dots.data(), query_planes, keyword_planes,
                                       true) /
                    double(magnitudes[z]);
                if (score > best) best = score;
            }
            runs.push_back(double(count) / elapsed_seconds(start));
            sink += best;
        }
        const Timing t = summarize(runs);
        result.binary_throughput = t.mean;
        result.binary_stddev = t.stddev;
    }

    if (run_binary && run_float && result.float_throughput > 0.0) {
        result.ratio = result.binary_throughput / result.float_throughput;
    }
    // Keep the scans observable so the loops cannot be elided.
    if (sink == 0x1p120) result.ratio = -result.ratio;
    return result;
}

}  // namespace rbe
