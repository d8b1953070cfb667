#pragma once
// Seeded RNG with hand-rolled variate transforms. std::mt19937_64 gives a
// portable bit stream, but the std:: distributions are implementation-defined;
// rolling our own Box-Muller/inversion keeps datasets bit-identical across
// toolchains for a fixed seed.

#include <cmath>
#include <cstdint>
#include <random>

namespace oddcat {

inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Independent substream id -> 64-bit seed, so parallel and serial generation
// of per-segment streams agree bit-exactly.
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
    uint64_t s = master;
    (void)splitmix64(s);
    s ^= 0xA0761D6478BD642Full * (stream + 1);
    (void)splitmix64(s);
    return splitmix64(s);
}

class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}
    static Rng substream(uint64_t master, uint64_t stream) { return Rng(derive_seed(master, stream)); }

    // uniform in [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Marsaglia polar method (no libm trig in the stream)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    uint64_t raw() { return eng_(); }

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0;
};

}  // namespace oddcat
