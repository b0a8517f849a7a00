#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace duforge {

// Counter-based seeding: child streams derived as splitmix(master, index) are
// independent of evaluation order, which is what makes parallel dataset builds
// byte-identical regardless of worker count.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

// Self-contained generator so stream values do not depend on the standard
// library implementation. State advances by splitmix64 steps.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
        return next_u64() % n;
    }

    // Box-Muller; one value per call keeps the stream position predictable.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double normal(double mean, double stddev) {
        return mean + stddev * normal();
    }

    // Rejection-sampled truncation. The configured windows all keep a few
    // percent of the mass at minimum, so the loop terminates fast; the cap is
    // a guard against misconfiguration, not a tuning knob.
    double truncated_normal(double mean, double stddev, double lo, double hi) {
        if (!(lo < hi)) throw std::invalid_argument("truncated_normal: empty interval");
        for (int i = 0; i < 100000; ++i) {
            double v = normal(mean, stddev);
            if (v >= lo && v <= hi) return v;
        }
        throw std::runtime_error("truncated_normal: interval rejects effectively all mass");
    }

private:
    uint64_t state_;
};

} // namespace duforge
