#pragma once

#include <cstdint>
#include <cmath>
#include <random>

// Seeded random source. All stochastic code in the library draws from an
// explicitly passed Rng; nothing is seeded from the wall clock. The
// distribution math is written out here so results do not depend on the
// standard library's <random> distribution implementations.

namespace evtrack {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}
}  // namespace detail

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(detail::splitmix64(seed)) {}

    // uniform double in [0, 1)
    double canonical() { return double(engine_() >> 11) * 0x1.0p-53; }

    // uniform double in [a, b)
    double uniform(double a, double b) { return a + canonical() * (b - a); }

    // uniform integer in [0, n)
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = n * (UINT64_MAX / n);
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    double normal(double mean, double stddev) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + stddev * spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * canonical() - 1.0;
            v = 2.0 * canonical() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return mean + stddev * u * f;
    }

    std::uint64_t raw() { return engine_(); }

    // Independent stream for work item `index`; parallel and serial runs over
    // items draw identical values.
    Rng derive(std::uint64_t index) const {
        return Rng(detail::splitmix64(seed_ ^ detail::splitmix64(index + 0x51ed270b7a9e1337ull)));
    }

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace evtrack
