// wavecnn/tensor.hpp
//
// Tensor2 is the frames x channels buffer that flows between layers.
// Storage is row-major, so the rows [t, t + k) of a tensor form one
// contiguous span of k * channels values. Convolution relies on this: the
// concatenation of kW consecutive input frames is a plain subspan.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wavecnn/error.hpp"

namespace wavecnn {

class Tensor2 {
public:
    Tensor2() = default;
    Tensor2(std::size_t frames, std::size_t channels, double fill = 0.0)
        : frames_(frames), channels_(channels), values_(frames * channels, fill) {}
    Tensor2(std::size_t frames, std::size_t channels, std::vector<double> values)
        : frames_(frames), channels_(channels), values_(std::move(values)) {
        detail::require(values_.size() == frames_ * channels_,
                        "Tensor2: value count " + std::to_string(values_.size()) +
                            " does not match shape " + std::to_string(frames_) + "x" +
                            std::to_string(channels_));
    }

    std::size_t frames() const noexcept { return frames_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& operator()(std::size_t t, std::size_t c) { return values_[t * channels_ + c]; }
    double operator()(std::size_t t, std::size_t c) const { return values_[t * channels_ + c]; }

    std::span<double> row(std::size_t t) { return {values_.data() + t * channels_, channels_}; }
    std::span<const double> row(std::size_t t) const {
        return {values_.data() + t * channels_, channels_};
    }
    /// Rows [t, t + count) as one contiguous span (frame-major concatenation).
    std::span<const double> rows(std::size_t t, std::size_t count) const {
        return {values_.data() + t * channels_, count * channels_};
    }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    std::vector<double>& storage() noexcept { return values_; }
    const std::vector<double>& storage() const noexcept { return values_; }

    /// Reshape in place, reusing capacity. Contents are zeroed.
    void reset(std::size_t frames, std::size_t channels) {
        frames_ = frames;
        channels_ = channels;
        values_.assign(frames * channels, 0.0);
    }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

    bool operator==(const Tensor2&) const = default;

private:
    std::size_t frames_ = 0;
    std::size_t channels_ = 0;
    std::vector<double> values_;
};

/// Affine map y = W x + b with W stored row-major (rows x cols).
struct Dense {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    Dense() = default;
    Dense(std::size_t r, std::size_t c) : rows(r), cols(c), weights(r * c, 0.0), bias(r, 0.0) {}

    std::span<const double> row(std::size_t r) const { return {weights.data() + r * cols, cols}; }
    std::span<double> row(std::size_t r) { return {weights.data() + r * cols, cols}; }
    double& at(std::size_t r, std::size_t c) { return weights[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return weights[r * cols + c]; }

    void zero() {
        std::fill(weights.begin(), weights.end(), 0.0);
        std::fill(bias.begin(), bias.end(), 0.0);
    }

    bool operator==(const Dense&) const = default;
};

}  // namespace wavecnn
