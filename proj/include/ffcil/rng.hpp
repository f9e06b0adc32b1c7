#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ffcil {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from a root seed and a stream id.
// All randomness in an experiment fans out from one root seed through these,
// so adding a run to a sweep never perturbs the streams of other runs.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    std::uint64_t s = root ^ (0x9e3779b97f4a7c15ull * (stream + 0x632be59bd9b4e019ull));
    splitmix64(s);
    return splitmix64(s);
}

// Stream ids for the experiment pipeline.
namespace streams {
constexpr std::uint64_t kScheduleCounts = 1;
constexpr std::uint64_t kSchedulePermutation = 2;
constexpr std::uint64_t kDatasetCenters = 3;
constexpr std::uint64_t kDatasetTrain = 4;
constexpr std::uint64_t kDatasetTest = 5;
constexpr std::uint64_t kHeadInit = 6;
constexpr std::uint64_t kAuxInit = 7;
constexpr std::uint64_t kBatchShuffle = 8;
constexpr std::uint64_t kBufferSelect = 9;
constexpr std::uint64_t kModelInit = 10;
}  // namespace streams

// mt19937_64 core with draw functions implemented here rather than through
// std distributions, whose output is not specified by the standard. Given a
// seed, every draw is bit-reproducible across platforms and thread counts.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi], both inclusive, via rejection.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(next_u64());  // full range
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return lo + static_cast<std::int64_t>(r % span);
    }

    // Standard normal via Box-Muller.
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace ffcil
