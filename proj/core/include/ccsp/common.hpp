#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ccsp {

/// Raised when a model/config is internally inconsistent (bad wiring, bad keys).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when runtime data violates an operation's preconditions.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

uint64_t splitmix64(uint64_t x);

/// Derives an independent stream seed from (seed, tag). Stable across runs.
uint64_t mix_seed(uint64_t seed, std::string_view tag);

/// Deterministic RNG with portable draw functions (no libstdc++ distribution
/// objects, so the same seed gives the same stream on any platform).
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();
    double uniform();                        // [0, 1)
    double uniform(double lo, double hi);    // [lo, hi)
    int64_t below(int64_t n);                // [0, n)
    int64_t range(int64_t lo, int64_t hi);   // [lo, hi] inclusive

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
            std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(below(i + 1))]);
        }
    }

private:
    uint64_t state_;
};

}  // namespace ccsp
