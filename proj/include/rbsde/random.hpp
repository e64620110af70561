#pragma once

#include <cstdint>

namespace rbsde {

// Counter-based uniform stream: a 10-round Philox-2x64 block keyed by the
// seed. Draw (ctr0, ctr1) is a pure function of its counters, so any scalar
// draw in a simulation can be addressed directly -- path p's numbers do not
// depend on how many other paths exist.
struct CounterRng {
    std::uint64_t key;

    explicit CounterRng(std::uint64_t seed) : key(seed) {}

    static void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
        const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
        hi = static_cast<std::uint64_t>(p >> 64);
        lo = static_cast<std::uint64_t>(p);
    }

    std::uint64_t raw(std::uint64_t ctr0, std::uint64_t ctr1) const {
        constexpr std::uint64_t mult = 0xD2B74407B1CE6E93ULL;
        constexpr std::uint64_t weyl = 0x9E3779B97F4A7C15ULL;
        std::uint64_t x0 = ctr0, x1 = ctr1, k = key;
        for (int r = 0; r < 10; ++r) {
            std::uint64_t hi, lo;
            mulhilo(mult, x0, hi, lo);
            x0 = hi ^ k ^ x1;
            x1 = lo;
            k += weyl;
        }
        return x0;
    }

    // Uniform in the open interval (0,1); never returns an exact endpoint.
    double uniform(std::uint64_t ctr0, std::uint64_t ctr1) const {
        const std::uint64_t u = raw(ctr0, ctr1);
        return (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal(std::uint64_t ctr0, std::uint64_t ctr1) const;
};

// Inverse standard normal CDF (Wichura's PPND16), accurate to ~1e-16 over
// the full open interval.
double normal_icdf(double p);

inline double CounterRng::normal(std::uint64_t ctr0, std::uint64_t ctr1) const {
    return normal_icdf(uniform(ctr0, ctr1));
}

}  // namespace rbsde
