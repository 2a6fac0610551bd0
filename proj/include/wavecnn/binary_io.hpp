// wavecnn/binary_io.hpp
//
// Little-endian fixed-width encoding for the dataset, tensor and checkpoint
// containers. The reader tracks its byte offset so truncation and corruption
// errors can say where decoding stopped.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "wavecnn/error.hpp"
#include "wavecnn/tensor.hpp"

namespace wavecnn::io {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

class Writer {
public:
    template <typename T>
        requires std::is_arithmetic_v<T>
    void put(T value) {
        char raw[sizeof(T)];
        std::memcpy(raw, &value, sizeof(T));
        buf_.insert(buf_.end(), raw, raw + sizeof(T));
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    void put_array(std::span<const T> values) {
        const auto* raw = reinterpret_cast<const char*>(values.data());
        buf_.insert(buf_.end(), raw, raw + values.size_bytes());
    }

    void put_bytes(std::string_view bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

    /// u32 length prefix followed by the bytes.
    void put_string(std::string_view s) {
        put(static_cast<std::uint32_t>(s.size()));
        put_bytes(s);
    }

    const std::vector<char>& buffer() const noexcept { return buf_; }

    void write_file(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + path + " for writing");
        out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        if (!out) throw std::runtime_error("write failed for " + path);
    }

private:
    std::vector<char> buf_;
};

class Reader {
public:
    explicit Reader(std::vector<char> bytes) : buf_(std::move(bytes)) {}

    static Reader from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open " + path);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return Reader(std::move(bytes));
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    T get() {
        need(sizeof(T));
        T value;
        std::memcpy(&value, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    std::vector<T> get_array(std::uint64_t count) {
        if (count > remaining() / sizeof(T)) truncated(count * sizeof(T));
        std::vector<T> values(count);
        std::memcpy(values.data(), buf_.data() + pos_, count * sizeof(T));
        pos_ += count * sizeof(T);
        return values;
    }

    std::string get_bytes(std::uint64_t count) {
        if (count > remaining()) truncated(count);
        std::string s(buf_.data() + pos_, count);
        pos_ += count;
        return s;
    }

    std::string get_string() { return get_bytes(get<std::uint32_t>()); }

    std::uint64_t offset() const noexcept { return pos_; }
    std::uint64_t remaining() const noexcept { return buf_.size() - pos_; }
    bool at_end() const noexcept { return pos_ == buf_.size(); }

    [[noreturn]] void fail(const std::string& what) const { throw ReadError(what, pos_); }

private:
    void need(std::uint64_t n) const {
        if (n > remaining()) truncated(n);
    }
    [[noreturn]] void truncated(std::uint64_t wanted) const {
        throw ReadError("truncated input: wanted " + std::to_string(wanted) + " bytes, " +
                            std::to_string(remaining()) + " left",
                        pos_);
    }

    std::vector<char> buf_;
    std::uint64_t pos_ = 0;
};

/// Tensor2 record: u64 frames, u64 channels, frames*channels f64 row-major.
inline void put_tensor(Writer& w, const Tensor2& t) {
    w.put(static_cast<std::uint64_t>(t.frames()));
    w.put(static_cast<std::uint64_t>(t.channels()));
    w.put_array(t.values());
}

inline Tensor2 get_tensor(Reader& r) {
    const auto frames = r.get<std::uint64_t>();
    const auto channels = r.get<std::uint64_t>();
    if (channels != 0 && frames > r.remaining() / sizeof(double) / channels)
        r.fail("tensor shape " + std::to_string(frames) + "x" + std::to_string(channels) +
               " exceeds remaining input");
    auto values = r.get_array<double>(frames * channels);
    return Tensor2(frames, channels, std::move(values));
}

/// Named sequence of tensors: magic, version, u64 count, then per entry an
/// id string and a Tensor2 record. Used for posterior and feature files.
struct TensorEntry {
    std::string id;
    Tensor2 tensor;
    bool operator==(const TensorEntry&) const = default;
};

inline constexpr std::string_view kTensorArchiveMagic = "WCNNTENS";
inline constexpr std::uint32_t kTensorArchiveVersion = 1;

inline void save_tensor_archive(const std::string& path, std::span<const TensorEntry> entries) {
    Writer w;
    w.put_bytes(kTensorArchiveMagic);
    w.put(kTensorArchiveVersion);
    w.put(static_cast<std::uint64_t>(entries.size()));
    for (const auto& e : entries) {
        w.put_string(e.id);
        put_tensor(w, e.tensor);
    }
    w.write_file(path);
}

inline std::vector<TensorEntry> load_tensor_archive(const std::string& path) {
    auto r = Reader::from_file(path);
    if (r.remaining() < kTensorArchiveMagic.size() ||
        r.get_bytes(kTensorArchiveMagic.size()) != kTensorArchiveMagic)
        throw ReadError("bad magic in tensor archive " + path, 0);
    if (auto v = r.get<std::uint32_t>(); v != kTensorArchiveVersion)
        throw VersionError(v, kTensorArchiveVersion);
    const auto count = r.get<std::uint64_t>();
    std::vector<TensorEntry> entries;
    for (std::uint64_t i = 0; i < count; ++i) {
        TensorEntry e;
        e.id = r.get_string();
        e.tensor = get_tensor(r);
        entries.push_back(std::move(e));
    }
    if (!r.at_end()) r.fail("trailing bytes after tensor archive");
    return entries;
}

}  // namespace wavecnn::io
