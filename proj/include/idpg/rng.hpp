#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace idpg {

std::uint64_t splitmix64(std::uint64_t x);
/// Stable 64-bit hash of (name, index); used to derive replication streams.
std::uint64_t hash64(std::string_view name, std::uint64_t index);

/// Deterministic generator identified by (seed, stream).
class SeededRng {
public:
    SeededRng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    std::uint64_t next() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on (0, 1).
    double uniform_open();
    double normal();
    double exponential(double mean);
    bool bernoulli(double p) { return uniform() < p; }
    std::uint64_t poisson(double mean);
    std::size_t below(std::size_t n);

    /// Independent child generator; does not advance this one.
    SeededRng child(std::uint64_t tag) const;

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace idpg
