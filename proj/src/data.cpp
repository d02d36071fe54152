#include "rfadex/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

#include "rfadex/error.hpp"
#include "rfadex/rng.hpp"

namespace rfadex {

namespace {

constexpr char kMagic[4] = {'R', 'F', 'A', 'E'};
constexpr std::size_t kHeaderBytes = 4 + 2 + 8;
constexpr std::size_t kRecordBytes = 1 + 4 + kInputLength * 4;

static_assert(std::endian::native == std::endian::little, "RFAE encoder assumes a little-endian host");

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T get(const std::uint8_t* p) {
    T value;
    std::memcpy(&value, p, sizeof(T));
    return value;
}

std::filesystem::path meta_path(const std::filesystem::path& path) {
    auto p = path;
    p += ".meta.json";
    return p;
}

}  // namespace

std::vector<float> interleave_iq(std::span<const ComplexSample> samples, std::size_t expected_samples) {
    if (samples.size() != expected_samples)
        throw InvalidArgument("frame has " + std::to_string(samples.size()) + " samples, expected " +
                              std::to_string(expected_samples));
    std::vector<float> out(2 * samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out[2 * i] = static_cast<float>(samples[i].real());
        out[2 * i + 1] = static_cast<float>(samples[i].imag());
    }
    return out;
}

std::vector<float> interleave_iq(const IQFrame& frame) { return interleave_iq(frame.samples); }

std::vector<ComplexSample> deinterleave_iq(std::span<const float> values, std::size_t expected_samples) {
    if (values.size() != 2 * expected_samples)
        throw InvalidArgument("vector has " + std::to_string(values.size()) + " values, expected " +
                              std::to_string(2 * expected_samples));
    std::vector<ComplexSample> out(expected_samples);
    for (std::size_t i = 0; i < expected_samples; ++i) out[i] = {values[2 * i], values[2 * i + 1]};
    return out;
}

Record to_record(const IQFrame& frame) {
    return Record{interleave_iq(frame), frame.label, static_cast<float>(frame.snr_db)};
}

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderBytes + ds.records.size() * kRecordBytes);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put<std::uint16_t>(out, kDatasetVersion);
    put<std::uint64_t>(out, ds.records.size());
    for (std::size_t r = 0; r < ds.records.size(); ++r) {
        const auto& rec = ds.records[r];
        if (rec.values.size() != kInputLength)
            throw InvalidArgument("record " + std::to_string(r) + " has " + std::to_string(rec.values.size()) +
                                  " values, expected " + std::to_string(kInputLength));
        put<std::uint8_t>(out, static_cast<std::uint8_t>(code(rec.label)));
        put<float>(out, rec.snr_db);
        const auto* p = reinterpret_cast<const std::uint8_t*>(rec.values.data());
        out.insert(out.end(), p, p + kInputLength * sizeof(float));
    }
    return out;
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError(FormatErrc::bad_magic, "not an RFAE dataset (bad magic)");
    if (bytes.size() < kHeaderBytes) throw FormatError(FormatErrc::truncated, "RFAE header truncated");
    const auto version = get<std::uint16_t>(bytes.data() + 4);
    if (version != kDatasetVersion)
        throw FormatError(FormatErrc::unsupported_version, "unsupported RFAE version " + std::to_string(version));
    const auto count = get<std::uint64_t>(bytes.data() + 6);

    Dataset ds;
    const std::size_t available = (bytes.size() - kHeaderBytes) / kRecordBytes;
    ds.records.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, available)));
    const std::uint8_t* p = bytes.data() + kHeaderBytes;
    const std::uint8_t* end = bytes.data() + bytes.size();
    for (std::uint64_t r = 0; r < count; ++r) {
        if (static_cast<std::size_t>(end - p) < kRecordBytes)
            throw FormatError(FormatErrc::truncated,
                              "RFAE file truncated in record " + std::to_string(r) + " of " + std::to_string(count), r);
        const auto label = mod_class_from_code(p[0]);
        if (!label)
            throw FormatError(FormatErrc::unknown_label,
                              "record " + std::to_string(r) + " has unknown label code " + std::to_string(p[0]), r);
        Record rec;
        rec.label = *label;
        rec.snr_db = get<float>(p + 1);
        rec.values.resize(kInputLength);
        std::memcpy(rec.values.data(), p + 5, kInputLength * sizeof(float));
        ds.records.push_back(std::move(rec));
        p += kRecordBytes;
    }
    return ds;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
    const auto bytes = encode_dataset(ds);
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError(FormatErrc::io, "cannot open " + path.string() + " for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw FormatError(FormatErrc::io, "write failed for " + path.string());
    }
    std::ofstream meta(meta_path(path), std::ios::trunc);
    if (!meta) throw FormatError(FormatErrc::io, "cannot write " + meta_path(path).string());
    meta << nlohmann::json{{"provenance", ds.provenance}, {"records", ds.records.size()}}.dump(2) << '\n';
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatErrc::io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Dataset ds = decode_dataset(bytes);
    std::ifstream meta(meta_path(path));
    if (meta) {
        const auto j = nlohmann::json::parse(meta, nullptr, false);
        if (!j.is_discarded() && j.contains("provenance") && j["provenance"].is_string())
            ds.provenance = j["provenance"].get<std::string>();
    }
    return ds;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, const SplitSpec& spec) {
    if (ds.empty()) throw InvalidArgument("cannot split an empty dataset");
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw InvalidArgument("train_fraction must lie in (0, 1)");

    std::vector<bool> to_train(ds.size(), false);
    for (auto c : kAllModClasses) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (ds.records[i].label == c) members.push_back(i);
        if (members.empty()) continue;
        Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(code(c))}));
        shuffle(std::span<std::size_t>(members), rng);
        const std::size_t n = members.size();
        auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n) + 1e-9));
        if (n >= 2)
            n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
        else
            n_train = spec.train_fraction >= 0.5 ? 1 : 0;
        for (std::size_t k = 0; k < n_train; ++k) to_train[members[k]] = true;
    }

    Dataset train, test;
    train.provenance = ds.provenance;
    test.provenance = ds.provenance;
    for (std::size_t i = 0; i < ds.size(); ++i) (to_train[i] ? train : test).records.push_back(ds.records[i]);
    return {std::move(train), std::move(test)};
}

Dataset filter_min_snr(const Dataset& ds, double min_snr_db) {
    Dataset out;
    out.provenance = ds.provenance;
    for (const auto& r : ds.records)
        if (static_cast<double>(r.snr_db) >= min_snr_db) out.records.push_back(r);
    return out;
}

std::array<std::size_t, kModClassCount> class_counts(const Dataset& ds) {
    std::array<std::size_t, kModClassCount> counts{};
    for (const auto& r : ds.records) ++counts[static_cast<std::size_t>(code(r.label))];
    return counts;
}

}  // namespace rfadex
