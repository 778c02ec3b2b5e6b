#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace nrdicke {

// Deterministic 64-bit generator (splitmix64). We avoid the std distributions
// on purpose: their output is implementation-defined, and sweep results must
// be reproducible across platforms and thread counts.
struct SplitMix64 {
    std::uint64_t state = 0x9e3779b97f4a7c15ull;

    explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0,1), 53 bits
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
};

// Stable mixing of a global seed with indices (per-cell / per-IC streams).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    SplitMix64 g(seed);
    std::uint64_t h = g.next();
    h ^= a + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    g.state = h;
    h = g.next();
    h ^= b + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    g.state = h;
    return g.next();
}

// Index-parallel loop with results keyed by index; identical output for any
// thread count. body(i) must not touch shared mutable state.
template <typename Body>
void parallel_for(std::size_t n, unsigned n_threads, Body&& body) {
    if (n == 0) return;
    if (n_threads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            body(i);
        }
    };
    std::vector<std::thread> pool;
    unsigned k = static_cast<unsigned>(std::min<std::size_t>(n_threads, n));
    pool.reserve(k);
    for (unsigned t = 0; t < k; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

} // namespace nrdicke
