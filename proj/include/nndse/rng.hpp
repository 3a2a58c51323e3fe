#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace nndse {

// Deterministic random source. Wraps mt19937_64 with hand-rolled draw
// functions so every call consumes a fixed, documented number of engine
// words; this keeps replayed runs bit-identical regardless of the standard
// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1). One engine word.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller. Always two engine words.
    double normal() {
        double u1 = 1.0 - uniform(); // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    // Uniform index in [0, n). One engine word (Lemire multiply-shift).
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::string save_state() const {
        std::ostringstream os;
        os << engine_;
        return os.str();
    }

    void restore_state(const std::string& state) {
        std::istringstream is(state);
        is >> engine_;
    }

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
};

// Stable 64-bit string hash (FNV-1a). Used to derive per-candidate seeds
// from a run seed and a canonical config key.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace nndse
