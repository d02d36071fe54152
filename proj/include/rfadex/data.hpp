#pragma once

// Real-valued network inputs, the RFAE dataset file, and stratified splits.
//
// RFAE layout (little-endian, no padding):
//   "RFAE" | u16 version = 1 | u64 record_count |
//   record_count x ( u8 label | f32 snr_db | 2048 x f32 interleaved I/Q )
//
// The provenance string is not part of the binary layout; write_dataset stores
// it in a sidecar "<path>.meta.json" and read_dataset restores it when present.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rfadex/signal.hpp"

namespace rfadex {

inline constexpr std::size_t kInputLength = 2 * kFrameSamples;
inline constexpr std::uint16_t kDatasetVersion = 1;

// Interleaves {I1, Q1, I2, Q2, ...}. `expected_samples` is the required frame
// length; callers other than tests keep the default.
std::vector<float> interleave_iq(std::span<const ComplexSample> samples,
                                 std::size_t expected_samples = kFrameSamples);
std::vector<float> interleave_iq(const IQFrame& frame);
std::vector<ComplexSample> deinterleave_iq(std::span<const float> values,
                                           std::size_t expected_samples = kFrameSamples);

struct Record {
    std::vector<float> values;  // kInputLength interleaved reals
    ModClass label = ModClass::bpsk;
    float snr_db = 0.0f;

    bool operator==(const Record&) const = default;
};

struct Dataset {
    std::vector<Record> records;
    std::string provenance;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
    // Record-wise equality; provenance is metadata and not compared.
    bool same_records(const Dataset& other) const { return records == other.records; }
};

Record to_record(const IQFrame& frame);

void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

// Encoders used by the file functions, exposed for in-memory use.
std::vector<std::uint8_t> encode_dataset(const Dataset& ds);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

// Stratified, seeded split. Within each class with n >= 2 members,
// floor(f n) records (clamped to [1, n - 1]) go to train. Both outputs keep
// input order.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, const SplitSpec& spec);

// Keeps records with snr_db >= min_snr_db.
Dataset filter_min_snr(const Dataset& ds, double min_snr_db);

// Counts per ModClass code.
std::array<std::size_t, kModClassCount> class_counts(const Dataset& ds);

}  // namespace rfadex
