#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "rfadex/error.hpp"
#include "rfadex/model.hpp"

namespace rfadex {

namespace {

constexpr char kMagic[4] = {'R', 'F', 'M', 'D'};

static_assert(std::endian::native == std::endian::little, "RFMD encoder assumes a little-endian host");

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    template <typename T>
    T get(const char* what) {
        T value;
        take(&value, sizeof(T), what);
        return value;
    }

    void take(void* dst, std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n)
            throw FormatError(FormatErrc::truncated, std::string("checkpoint truncated while reading ") + what);
        std::memcpy(dst, bytes_.data() + pos_, n);
        pos_ += n;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Model& m) {
    if (m.arch.id != kDefaultCnnId) throw InvalidArgument("only the default CNN can be checkpointed");
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put<std::uint16_t>(out, kCheckpointVersion);
    put<std::uint16_t>(out, m.arch.id);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.params.size()));
    for (const auto& blob : m.params) {
        put<std::uint64_t>(out, blob.size());
        const auto* p = reinterpret_cast<const std::uint8_t*>(blob.data());
        out.insert(out.end(), p, p + blob.size() * sizeof(float));
    }
    return out;
}

Model decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError(FormatErrc::bad_magic, "not an RFMD checkpoint (bad magic)");
    Reader in(bytes.subspan(4));
    const auto version = in.get<std::uint16_t>("version");
    if (version != kCheckpointVersion)
        throw FormatError(FormatErrc::unsupported_version, "unsupported RFMD version " + std::to_string(version));
    const auto arch_id = in.get<std::uint16_t>("architecture id");
    if (arch_id != kDefaultCnnId)
        throw FormatError(FormatErrc::architecture_mismatch, "unknown architecture id " + std::to_string(arch_id));
    const auto blob_count = in.get<std::uint32_t>("blob count");

    std::vector<std::vector<float>> blobs;
    for (std::uint32_t i = 0; i < blob_count; ++i) {
        const auto len = in.get<std::uint64_t>("blob length");
        if (len > in.remaining() / sizeof(float))
            throw FormatError(FormatErrc::truncated, "checkpoint truncated in blob " + std::to_string(i), i);
        std::vector<float> blob(static_cast<std::size_t>(len));
        in.take(blob.data(), blob.size() * sizeof(float), "blob");
        blobs.push_back(std::move(blob));
    }
    if (blobs.empty()) throw FormatError(FormatErrc::architecture_mismatch, "checkpoint has no layers");

    const auto probe = default_cnn_architecture(2);
    const std::size_t per_class = probe.layers.back().in_size() + 1;
    const std::size_t last = blobs.back().size();
    if (last == 0 || last % per_class != 0 || last / per_class < 2)
        throw FormatError(FormatErrc::architecture_mismatch, "final layer size does not match the default CNN");

    Model m;
    m.arch = default_cnn_architecture(static_cast<int>(last / per_class));
    if (m.arch.layers.size() != blobs.size())
        throw FormatError(FormatErrc::architecture_mismatch, "layer count does not match the default CNN");
    for (std::size_t i = 0; i < blobs.size(); ++i)
        if (blobs[i].size() != m.arch.layers[i].param_count())
            throw FormatError(FormatErrc::architecture_mismatch,
                              "blob " + std::to_string(i) + " has " + std::to_string(blobs[i].size()) +
                                  " values, expected " + std::to_string(m.arch.layers[i].param_count()));
    m.params = std::move(blobs);
    return m;
}

void write_checkpoint(const Model& m, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatErrc::io, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError(FormatErrc::io, "write failed for " + path.string());
}

Model read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatErrc::io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace rfadex
