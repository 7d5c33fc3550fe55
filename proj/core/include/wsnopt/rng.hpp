#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace wsnopt {

// Seeded random source. Every draw in the project goes through this class so
// that runs are reproducible from a single seed. std::mt19937_64 has a
// standardized output sequence; the bounded/real/normal draws below are
// implemented explicitly because the <random> distributions are free to vary
// between standard libraries.
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // uniform double in [0, 1), 53 bits of precision
    double uniform_real() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // uniform integer in [lo, hi], inclusive; Lemire's multiply-shift with
    // rejection, unbiased
    int64_t uniform_int(int64_t lo, int64_t hi) {
        if (lo > hi) throw std::invalid_argument("uniform_int: lo > hi");
        uint64_t span = static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo) + 1;
        if (span == 0) return static_cast<int64_t>(engine_());  // full 64-bit range
        unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * span;
        auto lowbits = static_cast<uint64_t>(m);
        if (lowbits < span) {
            uint64_t threshold = (0 - span) % span;
            while (lowbits < threshold) {
                m = static_cast<unsigned __int128>(engine_()) * span;
                lowbits = static_cast<uint64_t>(m);
            }
        }
        return lo + static_cast<int64_t>(static_cast<uint64_t>(m >> 64));
    }

    // uniform index in [0, n)
    size_t index(size_t n) {
        if (n == 0) throw std::invalid_argument("index: empty range");
        return static_cast<size_t>(uniform_int(0, static_cast<int64_t>(n) - 1));
    }

    // standard normal via Box-Muller; consumes exactly two uniform draws
    double normal() {
        double u1 = 1.0 - uniform_real();  // (0, 1]
        double u2 = uniform_real();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // gamma(shape, 1) via Marsaglia-Tsang; shape > 0
    double gamma(double shape) {
        if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be > 0");
        if (shape < 1.0) {
            double u = uniform_real();
            while (u <= 0.0) u = uniform_real();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = uniform_real();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Fisher-Yates
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
};

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Sub-seed derivation: one top-level seed reproduces the whole run. Each
// component draws from Rng(derive_seed(root, "role", i, j)) so components
// never share or reorder each other's streams.
inline uint64_t derive_seed(uint64_t root, std::string_view role, uint64_t a = 0, uint64_t b = 0) {
    uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the role name
    for (char c : role) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    h = splitmix64(h ^ splitmix64(root));
    h = splitmix64(h ^ splitmix64(a + 0x9e3779b97f4a7c15ULL));
    h = splitmix64(h ^ splitmix64(b + 0x7f4a7c159e3779b9ULL));
    return h;
}

}  // namespace wsnopt
