#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace glore {

// std::mt19937_64 has a fully specified output sequence; the standard
// distributions do not. Everything below maps raw engine output by hand so
// that a seed reproduces the same stream on every conforming toolchain.

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::size_t index(std::size_t n) {
        const std::uint64_t bound = n;
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
        std::uint64_t x = engine_();
        while (x >= limit)
            x = engine_();
        return static_cast<std::size_t>(x % bound);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Draw from an unnormalized discrete distribution.
    template <typename Weights>
    std::size_t categorical(const Weights& weights) {
        double total = 0.0;
        for (double w : weights)
            total += w;
        double u = uniform() * total;
        std::size_t last = 0;
        for (std::size_t i = 0; i < std::size(weights); ++i) {
            if (weights[i] <= 0.0)
                continue;
            last = i;
            if (u < weights[i])
                return i;
            u -= weights[i];
        }
        return last;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[index(i)]);
    }

    /// k distinct indices from [0, n) in sampled order (partial Fisher-Yates).
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i)
            pool[i] = i;
        for (std::size_t i = 0; i < k; ++i)
            std::swap(pool[i], pool[i + index(n - i)]);
        pool.resize(k);
        return pool;
    }

private:
    std::mt19937_64 engine_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for a named stage, derived from the root seed. Stages rerun in
/// isolation see the same stream as in a full run.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stage) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : stage) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(root ^ splitmix64(h));
}

} // namespace glore
