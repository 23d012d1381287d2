#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string_view>
#include <vector>

namespace metamem {

// Deterministic hierarchical RNG. A stream is identified by a 64-bit key
// derived from (root_seed, label path); substream(tag, index) derives a child
// key by hashing. Two streams with the same root seed and label path produce
// identical sequences; streams with different paths are independent for
// statistical purposes. Streams are single-owner: never share one across
// concurrent call sites.
class RngStream {
public:
    explicit RngStream(std::uint64_t root_seed) : key_(mix(root_seed ^ kRootSalt)) {}

    RngStream substream(std::string_view tag, std::uint64_t index) const {
        std::uint64_t k = key_;
        k = mix(k ^ fnv1a(tag));
        k = mix(k ^ index);
        return RngStream(k, Derived{});
    }

    std::uint64_t key() const { return key_; }

    std::uint64_t next_u64() { return engine()(); }

    double uniform() {  // [0, 1)
        return std::uniform_real_distribution<double>(0.0, 1.0)(engine());
    }
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine());
    }
    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine());
    }
    // uniform integer in [lo, hi]
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        return std::uniform_int_distribution<std::uint64_t>(lo, hi)(engine());
    }

private:
    struct Derived {};
    RngStream(std::uint64_t key, Derived) : key_(key) {}

    static constexpr std::uint64_t kRootSalt = 0x9e3779b97f4a7c15ull;

    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }
    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
        return h;
    }

    std::mt19937_64& engine() {
        if (!engine_ready_) {
            eng_.seed(key_);
            engine_ready_ = true;
        }
        return eng_;
    }

    std::uint64_t key_;
    std::mt19937_64 eng_;
    bool engine_ready_ = false;
};

// Uniformly random size-B subset of {1..n}, returned sorted.
// Each index has marginal inclusion probability B/n. When B == n the full set
// is returned and the stream is not consumed, so replay alignment across
// configs with different B is preserved.
std::vector<int> sample_without_replacement(RngStream& rng, int n, int B);

// Independent Bernoulli inclusion: index i (1-based) kept with probability
// p[i-1]. Every p_i must lie in (0, 1].
std::vector<int> bernoulli_subset(RngStream& rng, const std::vector<double>& p);

// Shared substream keying for per-task data batches: (role, iteration, task).
// Both the centralized and the federated loops key their data draws through
// this helper so that reduction-equivalence identities hold exactly.
inline RngStream data_stream(const RngStream& root, std::string_view role,
                             std::uint64_t t, std::uint64_t task_id) {
    return root.substream(role, t).substream("task", task_id);
}

}  // namespace metamem
