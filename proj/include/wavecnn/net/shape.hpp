// wavecnn/net/shape.hpp
//
// Static shape and capacity arithmetic for a NetworkConfig.

#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "wavecnn/error.hpp"
#include "wavecnn/net/config.hpp"
#include "wavecnn/net/layers.hpp"

namespace wavecnn::net {

struct StageShape {
    std::size_t conv_frames = 0;
    std::size_t pool_frames = 0;
    std::size_t channels = 0;
};

struct ShapeTrace {
    std::size_t input_frames = 0;
    std::size_t input_channels = 0;
    std::vector<StageShape> stages;
    std::size_t classifier_input = 0;
};

/// Walks the filter stages with T' = floor((T - kW)/dW) + 1 per convolution
/// and per pooling. Throws naming the first stage whose input is too short.
inline ShapeTrace output_shape(const NetworkConfig& cfg) {
    validate(cfg);
    ShapeTrace trace;
    trace.input_frames = cfg.input_frames();
    trace.input_channels = cfg.input_channels();
    std::size_t frames = trace.input_frames;
    std::size_t channels = trace.input_channels;
    for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
        const auto& s = cfg.stages[i];
        StageShape st;
        st.conv_frames = windowed_frames(frames, static_cast<std::size_t>(s.kW),
                                         static_cast<std::size_t>(s.dW));
        detail::require(st.conv_frames > 0,
                        "stage " + std::to_string(i + 1) + ": convolution kW=" +
                            std::to_string(s.kW) + " exceeds its " + std::to_string(frames) +
                            "-frame input");
        st.pool_frames = windowed_frames(st.conv_frames, static_cast<std::size_t>(s.pool_kW),
                                         static_cast<std::size_t>(s.pool_stride));
        detail::require(st.pool_frames > 0,
                        "stage " + std::to_string(i + 1) + ": pooling kW=" +
                            std::to_string(s.pool_kW) + " exceeds its " +
                            std::to_string(st.conv_frames) + "-frame input");
        st.channels = static_cast<std::size_t>(s.d_out);
        frames = st.pool_frames;
        channels = st.channels;
        trace.stages.push_back(st);
    }
    trace.classifier_input = frames * channels;
    return trace;
}

struct ParamCount {
    std::size_t conv = 0;
    std::size_t classifier = 0;
    std::size_t total() const noexcept { return conv + classifier; }
    bool operator==(const ParamCount&) const = default;
};

struct ParamReport {
    ParamCount weights_only;
    ParamCount with_biases;
};

inline ParamReport param_count(const NetworkConfig& cfg) {
    const ShapeTrace shape = output_shape(cfg);
    ParamReport r;
    std::size_t d_in = shape.input_channels;
    for (const auto& s : cfg.stages) {
        const auto d_out = static_cast<std::size_t>(s.d_out);
        const std::size_t w = d_out * d_in * static_cast<std::size_t>(s.kW);
        r.weights_only.conv += w;
        r.with_biases.conv += w + d_out;
        d_in = d_out;
    }
    const auto k = static_cast<std::size_t>(cfg.classifier.num_classes);
    const std::size_t in = shape.classifier_input;
    if (cfg.classifier.kind == ClassifierKind::slp) {
        r.weights_only.classifier = in * k;
        r.with_biases.classifier = in * k + k;
    } else {
        const auto h = static_cast<std::size_t>(cfg.classifier.hidden_units);
        r.weights_only.classifier = in * h + h * k;
        r.with_biases.classifier = in * h + h + h * k + k;
    }
    return r;
}

/// Stride assignments tried by find_stride_assignments: the first
/// convolution's dW, a shared dW for later convolutions, and a shared pooling
/// stride.
struct StrideRanges {
    int first_dW_max = 50;
    int later_dW_max = 3;
    bool pool_stride_free = true;  ///< false pins pool_stride = pool_kW
};

/// Every (first dW, later dW, pool stride) assignment under `ranges` for which
/// the classifier input dimension of `base` equals `target_dim`. Each result
/// is `base` with the strides filled in.
inline std::vector<NetworkConfig> find_stride_assignments(const NetworkConfig& base,
                                                          std::size_t target_dim,
                                                          const StrideRanges& ranges = {}) {
    std::vector<NetworkConfig> hits;
    if (base.stages.empty()) return hits;
    int pool_max = 0;
    for (const auto& s : base.stages) pool_max = std::max(pool_max, s.pool_kW);
    const int later_max = base.stages.size() > 1 ? ranges.later_dW_max : 1;
    for (int d1 = 1; d1 <= ranges.first_dW_max; ++d1) {
        for (int dn = 1; dn <= later_max; ++dn) {
            for (int ps = 1; ps <= (ranges.pool_stride_free ? pool_max : 1); ++ps) {
                NetworkConfig cfg = base;
                bool ok = true;
                for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
                    auto& s = cfg.stages[i];
                    s.dW = i == 0 ? d1 : dn;
                    s.pool_stride = ranges.pool_stride_free ? ps : s.pool_kW;
                    if (s.pool_stride > s.pool_kW) ok = false;
                }
                if (!ok) continue;
                try {
                    if (output_shape(cfg).classifier_input == target_dim) hits.push_back(cfg);
                } catch (const StructuralError&) {
                }
            }
        }
    }
    return hits;
}

}  // namespace wavecnn::net
