#pragma once

#include <cstdint>
#include <map>
#include <vector>

namespace rbe {

/// Probability that exactly M of the T = C/I threads hold at least one of the
/// N relevant keywords, for a uniformly random placement of the N relevants
/// among C candidate slots and a length-1 priority queue. L = N - M is the
/// number of missed relevants. Closed-form composition sums are used; only
/// L <= 3 is supported (the general enumeration blows up combinatorially).
/// Requires C divisible by I, 1 <= M <= N; M > T yields probability 0.
double exact_p_m(uint64_t C, uint64_t N, uint64_t I, uint64_t M);

/// P(L <= l) = sum of exact_p_m over M = N-l ... N. l <= 3.
double p_l_at_most(uint64_t C, uint64_t N, uint64_t I, uint32_t l);

/// Monte Carlo: drops N distinct relevant positions uniformly into C slots
/// grouped into ceil(C/I) threads of I (last one shorter when I does not
/// divide C), counts per-thread overflow beyond queue_length. Returns the
/// frequency of each observed L. Deterministic under seed.
std::map<uint64_t, double> simulate_miss(uint64_t C, uint64_t N, uint64_t I,
                                         uint32_t queue_length, uint64_t trials,
                                         uint64_t seed);

struct RecallPrediction {
    /// (N - E[L]) / N with E[L] = N - sum_t P(thread t nonempty), exact for
    /// the placement model over the actual thread-size profile (floor(C/I)
    /// threads of I plus one remainder thread). Valid for any C, I.
    double expected_recall = 0.0;
    double expected_misses = 0.0;
    /// The L<=2 truncation of the same quantity plus its error bound; only
    /// meaningful when C is divisible by I and the tail is small.
    double truncated_recall = 0.0;
    double truncation_bound = 1.0;
    bool truncated_valid = false;
};

/// Predicted recall@N for the length-1-queue scan of C candidates with I
/// items per thread.
RecallPrediction expected_recall(uint64_t C, uint64_t N, uint64_t I);

}  // namespace rbe
