#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace ilpnli {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Small deterministic generator. std::mt19937 + distributions are
// implementation-defined across standard libraries; output files must be
// byte-stable, so all randomness in the pipeline goes through this.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {
        next();
        next();
    }

    uint64_t next() { return splitmix64(state_); }

    // Uniform in [0, n). Modulo bias is irrelevant at the scales used here.
    uint64_t below(uint64_t n) { return n == 0 ? 0 : next() % n; }

    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool chance(double p) { return next_double() < p; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[below(i)]);
    }

private:
    uint64_t state_;
};

// Derives an independent stream for (seed, index)-style keying.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
    splitmix64(s);
    return splitmix64(s);
}

inline uint64_t fnv1a64(std::string_view data, uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace ilpnli
