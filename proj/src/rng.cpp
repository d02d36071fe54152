#include "rfadex/rng.hpp"

#include <cmath>
#include <numbers>

#include "rfadex/error.hpp"

namespace rfadex {

const char* to_string(FormatErrc code) {
    switch (code) {
        case FormatErrc::io: return "io";
        case FormatErrc::bad_magic: return "bad magic";
        case FormatErrc::unsupported_version: return "unsupported version";
        case FormatErrc::truncated: return "truncated";
        case FormatErrc::unknown_label: return "unknown label";
        case FormatErrc::architecture_mismatch: return "architecture mismatch";
    }
    return "unknown";
}

std::uint64_t Rng::below(std::uint64_t n) {
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(base);
    for (auto k : keys) h = mix(h ^ mix(k));
    return h;
}

}  // namespace rfadex
