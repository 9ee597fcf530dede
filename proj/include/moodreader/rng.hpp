#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mr {

/// Deterministic random stream: same seed and call sequence gives the same
/// draws. Keeps a draw counter so streams can be compared or re-derived.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t position() const { return position_; }

    std::uint64_t next_u64() {
        ++position_;
        return engine_();
    }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; hand-rolled so draws do not depend on
    /// the standard library's distribution implementation.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    /// Independent child stream for a named purpose; stable under call order
    /// of other streams.
    RandomStream derive(std::uint64_t tag) const {
        return RandomStream(seed_ ^ (0x9e3779b97f4a7c15ULL * (tag + 1)));
    }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t position_ = 0;
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mr
