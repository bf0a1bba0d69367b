#pragma once

#include <cmath>
#include <cstdint>

namespace pfpp {

/// Deterministic counter-based random stream. Streams are cheap value types;
/// one stream per (seed, path, period) gives reproducible parallel simulation
/// regardless of execution order.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    static RngStream keyed(std::uint64_t seed, std::uint64_t path, std::uint64_t period) {
        std::uint64_t s = splitmix(seed + 0x9e3779b97f4a7c15ULL);
        s = splitmix(s ^ (path * 0xbf58476d1ce4e5b9ULL + 0x94d049bb133111ebULL));
        s = splitmix(s ^ (period * 0xd6e8feb86659fd93ULL + 0x2545f4914f6cdd1dULL));
        return RngStream(s);
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return splitmix(state_);
    }

    /// Uniform draw in (0, 1); never returns exactly 0 or 1.
    double next_uniform() {
        const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (platform-stable, unlike
    /// std::normal_distribution).
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    static std::uint64_t splitmix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace pfpp
