#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>

namespace omem {

/// Deterministic random source. All sampling goes through hand-rolled
/// transforms instead of std distributions, whose output is
/// implementation-defined; identical seeds give identical streams on
/// every platform.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1).
    double uniform() {
        // 53 random mantissa bits.
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        if (hi < lo) throw std::invalid_argument("uniform: hi < lo");
        return lo + (hi - lo) * uniform();
    }

    /// Uniform integer in [lo, hi], inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw std::invalid_argument("uniform_int: hi < lo");
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(engine_() % span);
    }

    /// Box-Muller; one draw consumed per returned value pair.
    double normal(double mean, double sigma) {
        if (sigma < 0.0) throw std::invalid_argument("normal: sigma < 0");
        if (sigma == 0.0) return mean;
        if (has_spare_) {
            has_spare_ = false;
            return mean + sigma * spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * M_PI * u2);
        has_spare_ = true;
        return mean + sigma * mag * std::cos(2.0 * M_PI * u2);
    }

    /// True with probability p. Exact at the endpoints: p = 0 never
    /// fires, p = 1 always does.
    bool bernoulli(double p) {
        if (p < 0.0 || p > 1.0) throw std::invalid_argument("bernoulli: p outside [0,1]");
        return uniform() < p;
    }

    /// Independent child stream; distinct salts give decorrelated streams.
    SeededRng fork(std::uint64_t salt) {
        const std::uint64_t base = engine_();
        return SeededRng(base ^ (salt * 0x9e3779b97f4a7c15ull));
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace omem
