#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>

#include "genlearn/matrix.hpp"

namespace genlearn {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Deterministic 64-bit generator (xoshiro256++ seeded through splitmix64).
/// Sub-streams are derived from the root seed and a purpose string, so new
/// samplers never shift the draws of existing ones. One instance per owner;
/// concurrent draws from a shared instance are not supported.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : root_seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = detail::splitmix64(sm);
    }

    /// Child stream keyed by purpose; independent of draws made so far.
    Rng split(std::string_view purpose) const {
        return Rng(detail::fnv1a64(purpose) ^ (root_seed_ * 0x9e3779b97f4a7c15ULL + 1));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform index in [0, n).
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return static_cast<std::size_t>(x % n);
    }

    /// One standard-normal draw (Marsaglia polar; the pair's second value is
    /// discarded so each call is self-contained).
    double gaussian() {
        double a, b;
        gaussian_pair(a, b);
        return a;
    }

    void gaussian_pair(double& a, double& b) {
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        a = u * f;
        b = v * f;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t root_seed_;
    std::uint64_t state_[4];
};

/// dim i.i.d. N(0,1) variates; deterministic given the generator state.
inline Vec sample_std_normal(Rng& rng, std::size_t dim) {
    if (dim == 0) throw std::invalid_argument("sample_std_normal: dim must be >= 1");
    Vec out(dim);
    std::size_t i = 0;
    while (i + 1 < dim) {
        rng.gaussian_pair(out[i], out[i + 1]);
        i += 2;
    }
    if (i < dim) out[i] = rng.gaussian();
    return out;
}

}  // namespace genlearn
