#pragma once

#include <cstdint>

namespace rbe {

struct BenchResult {
    double binary_throughput = 0.0;  // keywords scored per second
    double float_throughput = 0.0;
    double ratio = 0.0;
    double binary_stddev = 0.0;  // across repeats, same unit as throughput
    double float_stddev = 0.0;
};

/// Times an exhaustive similarity scan over `count` synthetic keywords of
/// width `dim`: once with the bitwise multi-plane kernel (query_planes x
/// keyword_planes), once with a float32 dot product over the same vectors.
/// The two corpora are generated and timed sequentially so peak memory stays
/// near the float corpus size. Throws on count == 0.
BenchResult run_scan_benchmark(uint64_t count, uint32_t dim, uint32_t query_planes,
                               uint32_t keyword_planes, uint32_t repeats,
                               uint64_t seed, bool run_binary = true,
                               bool run_float = true);

}  // namespace rbe
