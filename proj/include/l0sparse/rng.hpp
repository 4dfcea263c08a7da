#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace l0sparse {

// splitmix64; used to expand (seed, stream) pairs into engine seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic PRNG. Wraps std::mt19937_64 (whose output sequence the
// standard pins down) and converts to doubles by hand: std::*_distribution
// results are implementation-defined, which would break run-to-run and
// cross-platform reproducibility of the experiments.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    // Independent stream for e.g. a parallel episode; derivation depends
    // only on (seed, stream), never on draw history.
    static Rng stream(std::uint64_t seed, std::uint64_t stream) {
        return Rng(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform in the open interval (0, 1); tails clamped so logit(u) stays finite.
    double uniform_open() {
        constexpr double eps = 1e-7;
        double u = uniform();
        if (u < eps) return eps;
        if (u > 1.0 - eps) return 1.0 - eps;
        return u;
    }

    // Box-Muller with cached spare.
    double normal(double mean = 0.0, double stddev = 1.0) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + stddev * spare_;
        }
        double u1 = uniform_open();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return mean + stddev * r * std::cos(theta);
    }

    // Uniform index in [0, n). Modulo bias is < 2^-53 for any realistic n.
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace l0sparse
