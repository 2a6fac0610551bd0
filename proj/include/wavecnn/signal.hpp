// wavecnn/signal.hpp
//
// Raw-input preparation: cut one window of w_in milliseconds around every
// 10 ms frame of an utterance and normalize it to zero mean, unit variance.
// Frames near the utterance edges get their missing context by replicating
// the first/last sample, so there is exactly one window per labeled frame.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "wavecnn/error.hpp"

namespace wavecnn::signal {

using Millis = std::chrono::milliseconds;

inline constexpr int kCanonicalRate = 16000;

struct SampleStream {
    std::vector<float> samples;
    int rate = kCanonicalRate;

    void validate() const {
        detail::require(rate > 0, "SampleStream: rate must be positive");
        detail::require(!samples.empty(), "SampleStream: no samples");
    }
    bool operator==(const SampleStream&) const = default;
};

struct FrameLabeling {
    std::vector<int> labels;
    int num_classes = 0;

    void validate() const {
        detail::require(num_classes > 0, "FrameLabeling: num_classes must be positive");
        for (std::size_t t = 0; t < labels.size(); ++t)
            detail::require(labels[t] >= 0 && labels[t] < num_classes,
                            "FrameLabeling: label " + std::to_string(labels[t]) + " at frame " +
                                std::to_string(t) + " outside [0, " +
                                std::to_string(num_classes) + ")");
    }
    bool operator==(const FrameLabeling&) const = default;
};

struct RawWindow {
    std::vector<double> samples;
    int label = 0;
    std::size_t center_time = 0;  ///< sample index of the window center
};

/// Number of samples spanned by `span` at `rate`; throws if fractional.
inline std::size_t samples_in(Millis span, int rate) {
    const long long scaled = static_cast<long long>(span.count()) * rate;
    detail::require(span.count() > 0, "duration must be positive");
    detail::require(scaled % 1000 == 0, std::to_string(span.count()) + " ms at " +
                                            std::to_string(rate) +
                                            " Hz is not an integer number of samples");
    return static_cast<std::size_t>(scaled / 1000);
}

/// Frames in a stream: complete shift-length blocks; a trailing partial block
/// is dropped.
inline std::size_t frame_count(const SampleStream& stream, Millis shift) {
    return stream.samples.size() / samples_in(shift, stream.rate);
}

/// Copy `length` samples starting at `start` (may be negative or run past the
/// end) with edge replication.
inline std::vector<double> extract_padded(const std::vector<float>& samples, long long start,
                                          std::size_t length) {
    std::vector<double> out(length);
    const long long last = static_cast<long long>(samples.size()) - 1;
    for (std::size_t i = 0; i < length; ++i) {
        const long long idx = std::clamp(start + static_cast<long long>(i), 0LL, last);
        out[i] = samples[static_cast<std::size_t>(idx)];
    }
    return out;
}

/// Mean/variance normalization with the population (1/N) standard deviation.
/// Windows whose standard deviation is below 1e-8 become all zeros.
inline RawWindow normalize_window(RawWindow window) {
    auto& x = window.samples;
    if (x.empty()) return window;
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);
    if (sd < 1e-8) {
        std::fill(x.begin(), x.end(), 0.0);
        return window;
    }
    for (double& v : x) v = (v - mean) / sd;
    return window;
}

/// One window per frame, centred on the frame centre, not yet normalized.
inline std::vector<RawWindow> frame_stream(const SampleStream& stream,
                                           const FrameLabeling& labeling, Millis w_in,
                                           Millis shift) {
    stream.validate();
    labeling.validate();
    detail::require(w_in >= shift, "frame_stream: w_in (" + std::to_string(w_in.count()) +
                                       " ms) shorter than shift (" +
                                       std::to_string(shift.count()) + " ms)");
    const std::size_t win = samples_in(w_in, stream.rate);
    const std::size_t hop = samples_in(shift, stream.rate);
    const std::size_t frames = stream.samples.size() / hop;
    detail::require(frames >= 1, "frame_stream: stream shorter than one frame");
    detail::require(labeling.labels.size() == frames,
                    "frame_stream: labeling has " + std::to_string(labeling.labels.size()) +
                        " frames, stream has " + std::to_string(frames));

    std::vector<RawWindow> windows;
    windows.reserve(frames);
    for (std::size_t t = 0; t < frames; ++t) {
        const std::size_t center = t * hop + hop / 2;
        const long long start = static_cast<long long>(center) - static_cast<long long>(win / 2);
        windows.push_back({extract_padded(stream.samples, start, win), labeling.labels[t], center});
    }
    return windows;
}

}  // namespace wavecnn::signal
