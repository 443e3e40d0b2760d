#pragma once

#include <cstdint>
#include <random>

namespace occuflux {

// Derives a well-mixed 64-bit seed for a numbered stream. Replica i always
// draws from stream (base_seed, i), so results do not depend on how replicas
// are scheduled across threads.
std::uint64_t mix_seed(std::uint64_t base_seed, std::uint64_t stream);

// Per-replica random source. One instance per replica, used sequentially.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : eng_(mix_seed(seed, 0)) {}
    RngStream(std::uint64_t base_seed, std::uint64_t stream)
        : eng_(mix_seed(base_seed, stream)) {}

    // U[0,1)
    double uniform() { return unit_(eng_); }
    double uniform(double a, double b) { return a + (b - a) * unit_(eng_); }
    // N(0,1)
    double normal() { return normal_(eng_); }
    // Exp(rate), mean 1/rate
    double exponential(double rate) {
        return std::exponential_distribution<double>(rate)(eng_);
    }
    std::uint64_t poisson(double mean) {
        return std::poisson_distribution<std::uint64_t>(mean)(eng_);
    }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace occuflux
