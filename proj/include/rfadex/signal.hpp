#pragma once

// Baseband frame synthesis for the four modulation classes, plus simple
// channel impairments (AWGN, scalar gain, LTI FIR).
//
// Constellations (Gray mapped, unit average power, bits read MSB first):
//
//   BPSK   0 -> +1            1 -> -1
//   QPSK   b0 b1 -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)         00 -> (+,+)
//   8-PSK  b0 b1 b2 -> exp(j 2 pi k / 8), gray(k) = k ^ (k >> 1) == bits
//   16-QAM b0 b1 -> I level, b2 b3 -> Q level, levels {00:-3, 01:-1, 11:+1, 10:+3} / sqrt(10)

#include <array>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace rfadex {

using ComplexSample = std::complex<double>;

inline constexpr std::size_t kFrameSamples = 1024;

enum class ModClass : std::uint8_t { bpsk = 0, qpsk = 1, psk8 = 2, qam16 = 3 };

inline constexpr std::size_t kModClassCount = 4;
inline constexpr std::array<ModClass, kModClassCount> kAllModClasses = {
    ModClass::bpsk, ModClass::qpsk, ModClass::psk8, ModClass::qam16};

constexpr int code(ModClass c) { return static_cast<int>(c); }
std::string_view name(ModClass c);
// Accepts "bpsk", "qpsk", "8psk", "16qam" (case-insensitive).
std::optional<ModClass> parse_mod_class(std::string_view text);
std::optional<ModClass> mod_class_from_code(int code);
int bits_per_symbol(ModClass c);
// Full constellation, indexed by the integer value of the symbol's bits.
std::vector<ComplexSample> constellation(ModClass c);

struct ShapingParams {
    int samples_per_symbol = 10;
    double rolloff = 0.35;
    int span_symbols = 8;

    void validate() const;
};

// Extra generation knobs; defaults give the documented workbench frames.
struct FrameOptions {
    // Max |CFO| in cycles per sample, drawn uniformly per frame. 0 disables.
    double max_cfo = 0.0;
};

struct IQFrame {
    std::vector<ComplexSample> samples;
    ModClass label = ModClass::bpsk;
    double snr_db = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
};

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

std::vector<ComplexSample> map_bits_to_symbols(std::span<const std::uint8_t> bits, ModClass scheme);

// Unit-energy root-raised-cosine taps, length span * sps + 1.
std::vector<double> rrc_taps(const ShapingParams& p);

// Upsample by sps and filter with the RRC; the filter delay is trimmed so that
// the output has symbols.size() * sps samples and symbol n peaks at n * sps.
std::vector<ComplexSample> pulse_shape(std::span<const ComplexSample> symbols, const ShapingParams& p);

// bits -> symbols -> RRC -> random phase -> unit power -> AWGN -> unit power.
// Pure function of its arguments.
IQFrame generate_frame(ModClass scheme, double snr_db, const ShapingParams& p, std::uint64_t seed,
                       const FrameOptions& options = {});

double mean_power(std::span<const ComplexSample> samples);
// Scales to unit mean power; an all-zero input is returned unchanged.
void normalize_power(std::vector<ComplexSample>& samples);

// Adds complex Gaussian noise of per-sample variance 10^(-snr_db/10).
IQFrame apply_awgn(const IQFrame& frame, double snr_db, std::uint64_t seed);
IQFrame apply_gain(const IQFrame& frame, double gain);
// Linear convolution with "same" alignment: out[n] = sum_k taps[k] x[n + (K-1)/2 - k].
IQFrame apply_fir(const IQFrame& frame, std::span<const ComplexSample> taps);

}  // namespace rfadex
