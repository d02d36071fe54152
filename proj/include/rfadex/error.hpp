#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace rfadex {

// Rejected caller input (bad lengths, out-of-range parameters).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class FormatErrc {
    io,
    bad_magic,
    unsupported_version,
    truncated,
    unknown_label,
    architecture_mismatch,
};

const char* to_string(FormatErrc code);

// Failure while decoding a dataset or checkpoint file.
class FormatError : public std::runtime_error {
public:
    FormatError(FormatErrc code, const std::string& what,
                std::optional<std::uint64_t> record = std::nullopt)
        : std::runtime_error(what), code_(code), record_(record) {}

    FormatErrc code() const noexcept { return code_; }
    // Index of the record being decoded when the error hit, if any.
    std::optional<std::uint64_t> record_index() const noexcept { return record_; }

private:
    FormatErrc code_;
    std::optional<std::uint64_t> record_;
};

// Model and data disagree (class count, input length), or a statistic is undefined.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rfadex
