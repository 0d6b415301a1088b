#include "ccsp/common.hpp"

namespace ccsp {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

uint64_t mix_seed(uint64_t seed, std::string_view tag) {
    // FNV-1a over the tag, folded into the seed through splitmix.
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<uint64_t>(static_cast<unsigned char>(c));
        h *= 0x100000001b3ULL;
    }
    return splitmix64(seed ^ h);
}

Rng::Rng(uint64_t seed) : state_(seed) {
    // Warm up so that small seeds do not produce correlated first draws.
    next_u64();
    next_u64();
}

uint64_t Rng::next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

int64_t Rng::below(int64_t n) {
    if (n <= 0) return 0;
    return static_cast<int64_t>(next_u64() % static_cast<uint64_t>(n));
}

int64_t Rng::range(int64_t lo, int64_t hi) {
    return lo + below(hi - lo + 1);
}

}  // namespace ccsp
