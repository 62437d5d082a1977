#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "coopdrive/core.hpp"

// Deterministic, platform-independent random streams. std::mt19937 is
// portable but the standard distributions are not; everything here is
// specified down to the bit so runs reproduce across compilers.

namespace coopdrive {

inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class RngStream {
  public:
    explicit RngStream(uint64_t seed) : state_(seed) {}

    /// Derives an independent child stream; the label keeps sibling streams
    /// (per vehicle, per link, per epoch) decorrelated.
    RngStream substream(uint64_t label) const {
        uint64_t s = state_;
        uint64_t mixed = splitmix64(s) ^ (0x9e3779b97f4a7c15ULL * (label + 1));
        return RngStream(mixed);
    }

    uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in [0, 1) with 53 random bits.
    double next_u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_u01(); }

    /// Uniform integer in [0, n).
    uint64_t next_below(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    /// Standard normal via Box-Muller; draws two uniforms per call.
    double normal() {
        double u1 = next_u01();
        double u2 = next_u01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    bool bernoulli(double p) { return next_u01() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    uint64_t state_;
};

}  // namespace coopdrive
