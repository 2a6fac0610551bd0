// wavecnn/error.hpp
//
// Exception types shared by every module. Contract violations (bad shapes,
// out-of-range labels, inconsistent configs) raise StructuralError; I/O and
// training failures have their own types so callers can map them to exit
// codes.

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace wavecnn {

class StructuralError : public std::invalid_argument {
public:
    explicit StructuralError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when training diverges (non-finite log-likelihood).
class TrainingError : public std::runtime_error {
public:
    TrainingError(const std::string& what, int epoch, std::size_t example)
        : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ", example " +
                             std::to_string(example) + ")"),
          epoch_(epoch), example_(example) {}

    int epoch() const noexcept { return epoch_; }
    std::size_t example() const noexcept { return example_; }

private:
    int epoch_;
    std::size_t example_;
};

/// Corrupt or truncated binary file. Carries the byte offset at which
/// decoding failed.
class ReadError : public std::runtime_error {
public:
    ReadError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

class VersionError : public std::runtime_error {
public:
    VersionError(std::uint32_t found, std::uint32_t expected)
        : std::runtime_error("unsupported file version " + std::to_string(found) + " (expected " +
                             std::to_string(expected) + ")"),
          found_(found) {}

    std::uint32_t found() const noexcept { return found_; }

private:
    std::uint32_t found_;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw StructuralError(msg);
}

}  // namespace detail
}  // namespace wavecnn
