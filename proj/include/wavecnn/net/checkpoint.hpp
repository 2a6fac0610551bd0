// wavecnn/net/checkpoint.hpp
//
// Parameter checkpoint container:
//
//   "WCNNCKPT" | u32 version | u64 architecture hash | u32 layer count |
//   per layer: u64 rows | u64 cols | rows*cols f64 weights | rows f64 bias
//
// Layers are the conv stages in order, then the classifier layers.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "wavecnn/binary_io.hpp"
#include "wavecnn/error.hpp"
#include "wavecnn/net/config.hpp"
#include "wavecnn/net/network.hpp"

namespace wavecnn::net {

inline constexpr std::string_view kCheckpointMagic = "WCNNCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline io::Writer encode_checkpoint(const NetworkConfig& cfg, const Parameters& params) {
    io::Writer w;
    w.put_bytes(kCheckpointMagic);
    w.put(kCheckpointVersion);
    w.put(config_hash(cfg));
    w.put(static_cast<std::uint32_t>(params.conv.size() + params.classifier.size()));
    params.for_each_layer([&w](const Dense& d) {
        w.put(static_cast<std::uint64_t>(d.rows));
        w.put(static_cast<std::uint64_t>(d.cols));
        w.put_array<double>(d.weights);
        w.put_array<double>(d.bias);
    });
    return w;
}

inline void save_checkpoint(const std::string& path, const NetworkConfig& cfg, const Parameters& params) {
    encode_checkpoint(cfg, params).write_file(path);
}

/// Decodes a checkpoint for `cfg`. Throws ReadError on a hash or shape
/// mismatch, truncation, or trailing bytes.
inline Parameters decode_checkpoint(io::Reader& r, const NetworkConfig& cfg) {
    if (r.remaining() < kCheckpointMagic.size() || r.get_bytes(kCheckpointMagic.size()) != kCheckpointMagic)
        throw ReadError("bad checkpoint magic", 0);
    if (auto v = r.get<std::uint32_t>(); v != kCheckpointVersion) throw VersionError(v, kCheckpointVersion);
    if (auto h = r.get<std::uint64_t>(); h != config_hash(cfg))
        r.fail("checkpoint was written for a different architecture (hash mismatch)");
    Parameters params = make_parameters(cfg);
    const auto layers = r.get<std::uint32_t>();
    if (layers != params.conv.size() + params.classifier.size())
        r.fail("checkpoint has " + std::to_string(layers) + " layers, config implies " +
               std::to_string(params.conv.size() + params.classifier.size()));
    params.for_each_layer([&r](Dense& d) {
        const auto rows = r.get<std::uint64_t>();
        const auto cols = r.get<std::uint64_t>();
        if (rows != d.rows || cols != d.cols)
            r.fail("layer shape " + std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                   std::to_string(d.rows) + "x" + std::to_string(d.cols));
        d.weights = r.get_array<double>(rows * cols);
        d.bias = r.get_array<double>(rows);
    });
    if (!r.at_end()) r.fail("trailing bytes after checkpoint");
    return params;
}

inline Parameters load_checkpoint(const std::string& path, const NetworkConfig& cfg) {
    auto r = io::Reader::from_file(path);
    return decode_checkpoint(r, cfg);
}

}  // namespace wavecnn::net
