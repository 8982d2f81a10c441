#include "idpg/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace idpg {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash64(std::string_view name, std::uint64_t index) {
    // FNV-1a over the name, then mixed with the index.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(h ^ splitmix64(index));
}

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream) {
    std::uint64_t a = splitmix64(seed);
    std::uint64_t b = splitmix64(stream ^ 0x5851f42d4c957f2dULL);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    engine_.seed(seq);
}

double SeededRng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double SeededRng::normal() { return normal_(engine_); }

double SeededRng::exponential(double mean) {
    return -mean * std::log(uniform_open());
}

std::size_t SeededRng::below(std::size_t n) {
    if (n == 0) throw std::invalid_argument("below(0)");
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
}

SeededRng SeededRng::child(std::uint64_t tag) const {
    return SeededRng(seed_, splitmix64(stream_ ^ splitmix64(tag + 0x632be59bd9b4e019ULL)));
}

std::uint64_t SeededRng::poisson(double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) throw std::invalid_argument("poisson mean must be finite and >= 0");
    if (mean == 0.0) return 0;
    if (mean < 30.0) {
        // Sequential inversion.
        double p = std::exp(-mean);
        double cdf = p;
        double u = uniform();
        std::uint64_t k = 0;
        while (u > cdf && k < 1000) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }
    // PTRS transformed rejection (Hormann 1993).
    const double smu = std::sqrt(mean);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
        double u = uniform() - 0.5;
        double v = uniform();
        double us = 0.5 - std::fabs(u);
        double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        double lhs = std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b);
        double rhs = -mean + kf * log_mean - std::lgamma(kf + 1.0);
        if (lhs <= rhs) return static_cast<std::uint64_t>(kf);
    }
}

}  // namespace idpg
