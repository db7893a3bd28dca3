#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ssc {

// Deterministic RNG wrapper. std::mt19937_64's raw output stream is fixed by
// the standard; the helpers below avoid std::*_distribution, whose results
// are implementation-defined, so sequences are reproducible across toolchains.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform integer in [0, bound) via rejection sampling. bound > 0.
    std::uint64_t bounded(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = gen_();
        while (x >= limit) x = gen_();
        return x % bound;
    }

    // Uniform double in [0, 1) with 53 bits of entropy.
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    // Standard normal via Box-Muller (one value per call, cached pair).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = unit();
        double u2 = unit();
        while (u1 <= 0.0) u1 = unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ssc
