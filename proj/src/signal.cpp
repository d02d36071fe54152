#include "rfadex/signal.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "rfadex/error.hpp"
#include "rfadex/rng.hpp"

namespace rfadex {

namespace {

constexpr double kPi = std::numbers::pi;

// Gray levels for one 16-QAM rail: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
constexpr std::array<double, 4> kQamRail = {-3.0, -1.0, 3.0, 1.0};

ComplexSample symbol_for(ModClass c, unsigned value) {
    switch (c) {
        case ModClass::bpsk:
            return value == 0 ? ComplexSample{1.0, 0.0} : ComplexSample{-1.0, 0.0};
        case ModClass::qpsk: {
            const double s = 1.0 / std::numbers::sqrt2;
            const double i = (value & 2u) ? -s : s;
            const double q = (value & 1u) ? -s : s;
            return {i, q};
        }
        case ModClass::psk8: {
            // Invert the Gray code to find the angular position.
            unsigned k = value;
            for (unsigned shift = value >> 1; shift != 0; shift >>= 1) k ^= shift;
            return std::polar(1.0, 2.0 * kPi * static_cast<double>(k) / 8.0);
        }
        case ModClass::qam16: {
            const double scale = 1.0 / std::sqrt(10.0);
            return {kQamRail[(value >> 2) & 3u] * scale, kQamRail[value & 3u] * scale};
        }
    }
    return {};
}

double rrc_at(double t, double beta) {
    if (std::abs(t) < 1e-12) return 1.0 - beta + 4.0 * beta / kPi;
    if (std::abs(std::abs(4.0 * beta * t) - 1.0) < 1e-9) {
        const double a = kPi / (4.0 * beta);
        return beta / std::numbers::sqrt2 *
               ((1.0 + 2.0 / kPi) * std::sin(a) + (1.0 - 2.0 / kPi) * std::cos(a));
    }
    const double num = std::sin(kPi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(kPi * t * (1.0 + beta));
    const double den = kPi * t * (1.0 - (4.0 * beta * t) * (4.0 * beta * t));
    return num / den;
}

}  // namespace

std::string_view name(ModClass c) {
    switch (c) {
        case ModClass::bpsk: return "bpsk";
        case ModClass::qpsk: return "qpsk";
        case ModClass::psk8: return "8psk";
        case ModClass::qam16: return "16qam";
    }
    return "?";
}

std::optional<ModClass> parse_mod_class(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    for (auto c : kAllModClasses)
        if (lower == name(c)) return c;
    if (lower == "psk8") return ModClass::psk8;
    if (lower == "qam16") return ModClass::qam16;
    return std::nullopt;
}

std::optional<ModClass> mod_class_from_code(int value) {
    if (value < 0 || value >= static_cast<int>(kModClassCount)) return std::nullopt;
    return static_cast<ModClass>(value);
}

int bits_per_symbol(ModClass c) {
    switch (c) {
        case ModClass::bpsk: return 1;
        case ModClass::qpsk: return 2;
        case ModClass::psk8: return 3;
        case ModClass::qam16: return 4;
    }
    return 1;
}

std::vector<ComplexSample> constellation(ModClass c) {
    const unsigned size = 1u << bits_per_symbol(c);
    std::vector<ComplexSample> points(size);
    for (unsigned v = 0; v < size; ++v) points[v] = symbol_for(c, v);
    return points;
}

void ShapingParams::validate() const {
    if (samples_per_symbol < 2) throw InvalidArgument("samples_per_symbol must be >= 2");
    if (!(rolloff > 0.0 && rolloff <= 1.0)) throw InvalidArgument("rolloff must lie in (0, 1]");
    if (span_symbols < 2 || span_symbols % 2 != 0)
        throw InvalidArgument("span_symbols must be even and >= 2");
}

std::vector<ComplexSample> map_bits_to_symbols(std::span<const std::uint8_t> bits, ModClass scheme) {
    const auto bps = static_cast<std::size_t>(bits_per_symbol(scheme));
    if (bits.size() % bps != 0)
        throw InvalidArgument("bit count " + std::to_string(bits.size()) + " is not a multiple of " +
                              std::to_string(bps) + " for " + std::string(name(scheme)));
    std::vector<ComplexSample> out;
    out.reserve(bits.size() / bps);
    for (std::size_t i = 0; i < bits.size(); i += bps) {
        unsigned value = 0;
        for (std::size_t b = 0; b < bps; ++b) value = (value << 1) | (bits[i + b] & 1u);
        out.push_back(symbol_for(scheme, value));
    }
    return out;
}

std::vector<double> rrc_taps(const ShapingParams& p) {
    p.validate();
    const int half = p.span_symbols * p.samples_per_symbol / 2;
    std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
    double energy = 0.0;
    for (int n = -half; n <= half; ++n) {
        const double h = rrc_at(static_cast<double>(n) / p.samples_per_symbol, p.rolloff);
        taps[static_cast<std::size_t>(n + half)] = h;
        energy += h * h;
    }
    const double norm = 1.0 / std::sqrt(energy);
    for (auto& h : taps) h *= norm;
    return taps;
}

std::vector<ComplexSample> pulse_shape(std::span<const ComplexSample> symbols, const ShapingParams& p) {
    if (symbols.empty()) throw InvalidArgument("pulse_shape needs at least one symbol");
    const auto taps = rrc_taps(p);
    const auto sps = static_cast<std::size_t>(p.samples_per_symbol);
    const auto delay = taps.size() / 2;
    const std::size_t out_len = symbols.size() * sps;
    std::vector<ComplexSample> out(out_len);
    // out[n] = sum_s symbols[s] * taps[n + delay - s * sps], skipping the zeros of the upsampled train.
    for (std::size_t n = 0; n < out_len; ++n) {
        const std::size_t pos = n + delay;
        ComplexSample acc{0.0, 0.0};
        const std::size_t s_hi = std::min(symbols.size() - 1, pos / sps);
        const std::size_t s_lo = pos >= taps.size() - 1 ? (pos - (taps.size() - 1) + sps - 1) / sps : 0;
        for (std::size_t s = s_lo; s <= s_hi; ++s) acc += symbols[s] * taps[pos - s * sps];
        out[n] = acc;
    }
    return out;
}

double mean_power(std::span<const ComplexSample> samples) {
    if (samples.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : samples) acc += std::norm(s);
    return acc / static_cast<double>(samples.size());
}

void normalize_power(std::vector<ComplexSample>& samples) {
    const double power = mean_power(samples);
    if (power <= 0.0) return;
    const double scale = 1.0 / std::sqrt(power);
    for (auto& s : samples) s *= scale;
}

IQFrame generate_frame(ModClass scheme, double snr_db, const ShapingParams& p, std::uint64_t seed,
                       const FrameOptions& options) {
    p.validate();
    if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
        throw InvalidArgument("snr_db must be finite or +inf");

    const auto sps = static_cast<std::size_t>(p.samples_per_symbol);
    const std::size_t n_symbols = (kFrameSamples + sps - 1) / sps + static_cast<std::size_t>(p.span_symbols);
    const auto bps = static_cast<std::size_t>(bits_per_symbol(scheme));

    Rng bit_rng(derive_seed(seed, {1}));
    std::vector<std::uint8_t> bits(n_symbols * bps);
    for (auto& b : bits) b = static_cast<std::uint8_t>(bit_rng.next() >> 63);

    const auto symbols = map_bits_to_symbols(bits, scheme);
    const auto shaped = pulse_shape(symbols, p);

    // Skip the leading half-span so the frame sits on the steady-state part of the burst.
    const std::size_t offset = static_cast<std::size_t>(p.span_symbols / 2) * sps;
    IQFrame frame;
    frame.label = scheme;
    frame.snr_db = snr_db;
    frame.seed = seed;
    frame.samples.assign(shaped.begin() + static_cast<std::ptrdiff_t>(offset),
                         shaped.begin() + static_cast<std::ptrdiff_t>(offset + kFrameSamples));

    Rng phase_rng(derive_seed(seed, {2}));
    const double phase = phase_rng.uniform(0.0, 2.0 * kPi);
    const double cfo = options.max_cfo > 0.0 ? phase_rng.uniform(-options.max_cfo, options.max_cfo) : 0.0;
    for (std::size_t n = 0; n < frame.samples.size(); ++n)
        frame.samples[n] *= std::polar(1.0, phase + 2.0 * kPi * cfo * static_cast<double>(n));

    normalize_power(frame.samples);
    if (std::isfinite(snr_db)) {
        frame = apply_awgn(frame, snr_db, derive_seed(seed, {3}));
        normalize_power(frame.samples);
    }
    frame.snr_db = snr_db;
    return frame;
}

IQFrame apply_awgn(const IQFrame& frame, double snr_db, std::uint64_t seed) {
    if (std::isnan(snr_db)) throw InvalidArgument("snr_db is NaN");
    IQFrame out = frame;
    if (snr_db == std::numeric_limits<double>::infinity()) return out;
    const double sigma = std::sqrt(std::pow(10.0, -snr_db / 10.0) / 2.0);
    Rng rng(seed);
    for (auto& s : out.samples) {
        const double ni = rng.normal();
        const double nq = rng.normal();
        s += ComplexSample{sigma * ni, sigma * nq};
    }
    out.snr_db = snr_db;
    return out;
}

IQFrame apply_gain(const IQFrame& frame, double gain) {
    if (!(gain > 0.0) || !std::isfinite(gain)) throw InvalidArgument("gain must be positive and finite");
    IQFrame out = frame;
    for (auto& s : out.samples) s *= gain;
    return out;
}

IQFrame apply_fir(const IQFrame& frame, std::span<const ComplexSample> taps) {
    if (taps.empty()) throw InvalidArgument("FIR needs at least one tap");
    if (taps.size() > 64) throw InvalidArgument("FIR supports at most 64 taps");
    IQFrame out = frame;
    const auto n = static_cast<std::ptrdiff_t>(frame.samples.size());
    const auto k_len = static_cast<std::ptrdiff_t>(taps.size());
    const std::ptrdiff_t centre = (k_len - 1) / 2;
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        ComplexSample acc{0.0, 0.0};
        for (std::ptrdiff_t k = 0; k < k_len; ++k) {
            const std::ptrdiff_t src = i + centre - k;
            if (src >= 0 && src < n) acc += taps[static_cast<std::size_t>(k)] * frame.samples[static_cast<std::size_t>(src)];
        }
        out.samples[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

}  // namespace rfadex
