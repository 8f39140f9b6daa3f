#include "rbe/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <unordered_set>

namespace rbe {

namespace {

constexpr long double kNegInf = -std::numeric_limits<long double>::infinity();

long double log_choose(long double n, long double k) {
    if (k < 0 || k > n || n < 0) return kNegInf;
    return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1);
}

long double log_sum(const std::vector<long double>& terms) {
    long double mx = kNegInf;
    for (long double t : terms) mx = std::max(mx, t);
    if (mx == kNegInf) return kNegInf;
    long double s = 0;
    for (long double t : terms) s += std::exp(t - mx);
    return mx + std::log(s);
}

}  // namespace

double exact_p_m(uint64_t C, uint64_t N, uint64_t I, uint64_t M) {
    if (I == 0 || C == 0 || N == 0) {
        throw std::invalid_argument("exact_p_m: C, N, I must be positive");
    }
    if (C % I != 0) {
        throw std::invalid_argument("exact_p_m: C must be divisible by I");
    }
    if (N > C) {
        throw std::invalid_argument("exact_p_m: N exceeds C");
    }
    if (M < 1 || M > N) {
        throw std::invalid_argument("exact_p_m: M out of range");
    }
    const uint64_t L = N - M;
    if (L > 3) {
        throw std::invalid_argument("exact_p_m: only L <= 3 is tractable");
    }
    const uint64_t T = C / I;
    const long double Tl = (long double)T, Il = (long double)I,
                      Ml = (long double)M;
    const long double base = log_choose(Tl, Ml);
    if (base == kNegInf) return 0.0;  // more occupied threads than threads

    const long double lI1 = log_choose(Il, 1);
    std::vector<long double> terms;
    auto add = [&](long double mult_log, long double body_log) {
        if (mult_log == kNegInf || body_log == kNegInf) return;
        terms.push_back(mult_log + body_log);
    };
    switch (L) {
        case 0:
            add(0.0L, Ml * lI1);
            break;
        case 1:
            add(log_choose(Ml, 1), log_choose(Il, 2) + (Ml - 1) * lI1);
            break;
        case 2:
            add(log_choose(Ml, 1), log_choose(Il, 3) + (Ml - 1) * lI1);
            add(log_choose(Ml, 2), 2 * log_choose(Il, 2) + (Ml - 2) * lI1);
            break;
        case 3:
            add(log_choose(Ml, 1), log_choose(Il, 4) + (Ml - 1) * lI1);
            // One thread of 3 and one of 2: ordered pair of distinct threads.
            if (M >= 2) {
                add(std::log(Ml) + std::log(Ml - 1),
                    log_choose(Il, 3) + log_choose(Il, 2) + (Ml - 2) * lI1);
            }
            add(log_choose(Ml, 3), 3 * log_choose(Il, 2) + (Ml - 3) * lI1);
            break;
    }
    const long double num = log_sum(terms);
    if (num == kNegInf) return 0.0;
    const long double log_p = base + num - log_choose((long double)C, (long double)N);
    return double(std::exp(log_p));
}

double p_l_at_most(uint64_t C, uint64_t N, uint64_t I, uint32_t l) {
    if (l > 3) {
        throw std::invalid_argument("p_l_at_most: only l <= 3 is tractable");
    }
    long double sum = 0;
    for (uint64_t L = 0; L <= l && L < N; ++L) {
        sum += (long double)exact_p_m(C, N, I, N - L);
    }
    return double(std::min(sum, (long double)1.0));
}

std::map<uint64_t, double> simulate_miss(uint64_t C, uint64_t N, uint64_t I,
                                         uint32_t queue_length, uint64_t trials,
                                         uint64_t seed) {
    if (N > C) {
        throw std::invalid_argument("simulate_miss: N exceeds C");
    }
    if (I == 0 || queue_length == 0 || trials == 0) {
        throw std::invalid_argument("simulate_miss: I, queue_length, trials must be positive");
    }
    const uint64_t threads = (C + I - 1) / I;
    std::map<uint64_t, uint64_t> histogram;
    std::vector<uint64_t> per_thread(threads, 0);
    std::vector<uint64_t> touched;
    touched.reserve(N);
    for (uint64_t trial = 0; trial < trials; ++trial) {
        std::mt19937_64 rng(seed + trial * 0x9e3779b97f4a7c15ull);
        std::unordered_set<uint64_t> chosen;
        chosen.reserve(size_t(N) * 2);
        touched.clear();
        // Floyd's sampling of N distinct slots out of C.
        for (uint64_t j = C - N; j < C; ++j) {
            std::uniform_int_distribution<uint64_t> dist(0, j);
            uint64_t x = dist(rng);
            if (!chosen.insert(x).second) {
                chosen.insert(j);
                x = j;
            }
            const uint64_t t = x / I;
            if (per_thread[t]++ == 0) touched.push_back(t);
        }
        uint64_t missed = 0;
        for (uint64_t t : touched) {
            if (per_thread[t] > queue_length) missed += per_thread[t] - queue_length;
            per_thread[t] = 0;
        }
        ++histogram[missed];
    }
    std::map<uint64_t, double> freq;
    for (const auto& [l, count] : histogram) {
        freq[l] = double(count) / double(trials);
    }
    return freq;
}

RecallPrediction expected_recall(uint64_t C, uint64_t N, uint64_t I) {
    if (N == 0 || N > C || I == 0) {
        throw std::invalid_argument("expected_recall: need 0 < N <= C and I > 0");
    }
    const long double denom = log_choose((long double)C, (long double)N);
    const uint64_t full = C / I;
    const uint64_t rem = C % I;
    // E[M] by linearity: each thread is empty with probability
    // C(C - I_t, N) / C(C, N).
    long double occupied = 0;
    const long double p_full_empty =
        std::exp(log_choose((long double)(C - I), (long double)N) - denom);
    occupied += (long double)full * (1 - p_full_empty);
    if (rem > 0) {
        occupied += 1 - std::exp(log_choose((long double)(C - rem), (long double)N) - denom);
    }
    RecallPrediction out;
    out.expected_misses = double((long double)N - occupied);
    out.expected_recall = double((occupied) / (long double)N);

    if (rem == 0) {
        long double mass = 0, misses = 0;
        bool ok = true;
        for (uint64_t L = 0; L <= 2 && L < N; ++L) {
            double p;
            try {
                p = exact_p_m(C, N, I, N - L);
            } catch (const std::invalid_argument&) {
                ok = false;
                break;
            }
            mass += p;
            misses += (long double)L * p;
        }
        if (ok) {
            out.truncated_recall = double(((long double)N - misses) / (long double)N);
            out.truncation_bound = double(std::max((long double)0.0, 1 - mass));
            out.truncated_valid = true;
        }
    }
    return out;
}

}  // namespace rbe
