// wavecnn/net/layers.hpp
//
// Layer kernels: temporal convolution, temporal max-pooling, tanh, affine
// classifier layers, and the softmax / log-likelihood head. Each kernel has
// an in-place form writing into caller-owned buffers (used by the training
// loop, which reuses them across examples) and a value-returning form.
//
// Gradient conventions: backward functions ACCUMULATE into weight gradients
// and OVERWRITE input gradients.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "wavecnn/error.hpp"
#include "wavecnn/tensor.hpp"

namespace wavecnn::net {

/// Output frame count of a sliding window of `width` frames taken every
/// `stride` frames, or 0 if the input is shorter than one window.
constexpr std::size_t windowed_frames(std::size_t frames, std::size_t width, std::size_t stride) {
    return frames < width ? 0 : (frames - width) / stride + 1;
}

// ---------------------------------------------------------------- convolution

/// out(t, o) = sum_j W(o, j) * concat(in rows t*dW .. t*dW+kW-1)[j] + b(o).
/// W has d_out rows and kW * d_in columns, columns ordered frame-major.
inline void conv_forward(const Tensor2& in, const Dense& weights, std::size_t kW, std::size_t dW,
                         Tensor2& out) {
    detail::require(kW >= 1 && dW >= 1, "conv_forward: kW and dW must be >= 1");
    detail::require(in.frames() >= kW, "conv_forward: input has " + std::to_string(in.frames()) +
                                           " frames, kernel needs " + std::to_string(kW));
    detail::require(weights.cols == kW * in.channels(),
                    "conv_forward: weight matrix has " + std::to_string(weights.cols) +
                        " columns, expected kW*d_in = " + std::to_string(kW * in.channels()));
    const std::size_t frames = windowed_frames(in.frames(), kW, dW);
    out.reset(frames, weights.rows);
    for (std::size_t t = 0; t < frames; ++t) {
        const auto window = in.rows(t * dW, kW);
        auto dst = out.row(t);
        for (std::size_t o = 0; o < weights.rows; ++o) {
            const auto w = weights.row(o);
            dst[o] = std::inner_product(w.begin(), w.end(), window.begin(), 0.0) + weights.bias[o];
        }
    }
}

inline Tensor2 conv_forward(const Tensor2& in, const Dense& weights, std::size_t kW, std::size_t dW) {
    Tensor2 out;
    conv_forward(in, weights, kW, dW, out);
    return out;
}

/// Adjoint of conv_forward. grad_weights must already have W's shape; it is
/// accumulated into. grad_in is overwritten unless null.
inline void conv_backward(const Tensor2& in, const Dense& weights, std::size_t kW, std::size_t dW,
                          const Tensor2& grad_out, Tensor2* grad_in, Dense& grad_weights) {
    const std::size_t frames = windowed_frames(in.frames(), kW, dW);
    detail::require(weights.cols == kW * in.channels() && grad_out.frames() == frames &&
                        grad_out.channels() == weights.rows,
                    "conv_backward: gradient shape " + std::to_string(grad_out.frames()) + "x" +
                        std::to_string(grad_out.channels()) + " inconsistent with forward (" +
                        std::to_string(frames) + "x" + std::to_string(weights.rows) + ")");
    detail::require(grad_weights.rows == weights.rows && grad_weights.cols == weights.cols,
                    "conv_backward: weight gradient shape mismatch");
    const std::size_t span = weights.cols;
    if (grad_in) grad_in->reset(in.frames(), in.channels());
    for (std::size_t t = 0; t < frames; ++t) {
        const auto window = in.rows(t * dW, kW);
        const auto g = grad_out.row(t);
        double* gin = grad_in ? grad_in->storage().data() + t * dW * in.channels() : nullptr;
        for (std::size_t o = 0; o < weights.rows; ++o) {
            const double go = g[o];
            if (go == 0.0) continue;
            grad_weights.bias[o] += go;
            double* gw = grad_weights.weights.data() + o * span;
            for (std::size_t j = 0; j < span; ++j) gw[j] += go * window[j];
            if (gin) {
                const double* w = weights.weights.data() + o * span;
                for (std::size_t j = 0; j < span; ++j) gin[j] += go * w[j];
            }
        }
    }
}

struct ConvGradients {
    Tensor2 input;
    Dense weights;
};

inline ConvGradients conv_backward(const Tensor2& in, const Dense& weights, std::size_t kW,
                                   std::size_t dW, const Tensor2& grad_out) {
    ConvGradients g{Tensor2{}, Dense(weights.rows, weights.cols)};
    conv_backward(in, weights, kW, dW, grad_out, &g.input, g.weights);
    return g;
}

// ---------------------------------------------------------------- max-pooling

/// Per channel, max over input frames [t*stride, t*stride + kW). argmax
/// receives the winning input frame for each (t, channel), ties resolved to
/// the earliest frame.
inline void maxpool_forward(const Tensor2& in, std::size_t kW, std::size_t stride, Tensor2& out,
                            std::vector<std::size_t>& argmax) {
    detail::require(kW >= 1 && stride >= 1, "maxpool_forward: kW and stride must be >= 1");
    detail::require(in.frames() >= kW, "maxpool_forward: input has " +
                                           std::to_string(in.frames()) +
                                           " frames, pooling width is " + std::to_string(kW));
    const std::size_t frames = windowed_frames(in.frames(), kW, stride);
    const std::size_t d = in.channels();
    out.reset(frames, d);
    argmax.assign(frames * d, 0);
    for (std::size_t t = 0; t < frames; ++t) {
        const std::size_t first = t * stride;
        auto dst = out.row(t);
        std::copy(in.row(first).begin(), in.row(first).end(), dst.begin());
        std::fill_n(argmax.begin() + static_cast<long>(t * d), d, first);
        for (std::size_t s = first + 1; s < first + kW; ++s) {
            const auto src = in.row(s);
            for (std::size_t c = 0; c < d; ++c) {
                if (src[c] > dst[c]) {
                    dst[c] = src[c];
                    argmax[t * d + c] = s;
                }
            }
        }
    }
}

struct PoolResult {
    Tensor2 output;
    std::vector<std::size_t> argmax;
};

inline PoolResult maxpool_forward(const Tensor2& in, std::size_t kW, std::size_t stride) {
    PoolResult r;
    maxpool_forward(in, kW, stride, r.output, r.argmax);
    return r;
}

/// Routes each output gradient to its recorded argmax frame, summing where
/// overlapping windows share a winner.
inline void maxpool_backward(std::span<const std::size_t> argmax, const Tensor2& grad_out,
                             std::size_t input_frames, Tensor2& grad_in) {
    const std::size_t d = grad_out.channels();
    detail::require(argmax.size() == grad_out.size(),
                    "maxpool_backward: argmax has " + std::to_string(argmax.size()) +
                        " entries, gradient has " + std::to_string(grad_out.size()));
    grad_in.reset(input_frames, d);
    for (std::size_t t = 0; t < grad_out.frames(); ++t) {
        for (std::size_t c = 0; c < d; ++c) {
            const std::size_t src = argmax[t * d + c];
            detail::require(src < input_frames, "maxpool_backward: argmax frame " +
                                                    std::to_string(src) + " outside input of " +
                                                    std::to_string(input_frames) + " frames");
            grad_in(src, c) += grad_out(t, c);
        }
    }
}

inline Tensor2 maxpool_backward(std::span<const std::size_t> argmax, const Tensor2& grad_out,
                                std::size_t input_frames) {
    Tensor2 g;
    maxpool_backward(argmax, grad_out, input_frames, g);
    return g;
}

// ----------------------------------------------------------------------- tanh

inline void tanh_forward(std::span<double> x) {
    for (double& v : x) v = std::tanh(v);
}

/// grad *= 1 - y^2, where y is the forward output.
inline void tanh_backward(std::span<const double> output, std::span<double> grad) {
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= 1.0 - output[i] * output[i];
}

// --------------------------------------------------------------------- linear

inline void linear_forward(std::span<const double> x, const Dense& layer, std::span<double> scores) {
    detail::require(x.size() == layer.cols, "linear_layer: input dim " + std::to_string(x.size()) +
                                                " does not match weight columns " +
                                                std::to_string(layer.cols));
    detail::require(scores.size() == layer.rows, "linear_layer: output buffer size mismatch");
    for (std::size_t r = 0; r < layer.rows; ++r) {
        const auto w = layer.row(r);
        scores[r] = std::inner_product(w.begin(), w.end(), x.begin(), 0.0) + layer.bias[r];
    }
}

inline std::vector<double> linear_forward(std::span<const double> x, const Dense& layer) {
    std::vector<double> scores(layer.rows);
    linear_forward(x, layer, scores);
    return scores;
}

/// grad_layer += g x^T (and g for the bias); grad_x = W^T g when non-empty.
inline void linear_backward(std::span<const double> x, const Dense& layer,
                            std::span<const double> grad_scores, std::span<double> grad_x,
                            Dense& grad_layer) {
    detail::require(x.size() == layer.cols && grad_scores.size() == layer.rows,
                    "linear_backward: shape mismatch");
    detail::require(grad_x.empty() || grad_x.size() == layer.cols,
                    "linear_backward: input gradient buffer size mismatch");
    std::fill(grad_x.begin(), grad_x.end(), 0.0);
    for (std::size_t r = 0; r < layer.rows; ++r) {
        const double g = grad_scores[r];
        if (g == 0.0) continue;
        grad_layer.bias[r] += g;
        double* gw = grad_layer.weights.data() + r * layer.cols;
        for (std::size_t c = 0; c < layer.cols; ++c) gw[c] += g * x[c];
        if (!grad_x.empty()) {
            const double* w = layer.weights.data() + r * layer.cols;
            for (std::size_t c = 0; c < layer.cols; ++c) grad_x[c] += g * w[c];
        }
    }
}

// ------------------------------------------------------- softmax / likelihood

/// log sum_i exp(z_i), shifted by max(z) so it stays finite for large |z|.
inline double logsumexp(std::span<const double> z) {
    detail::require(!z.empty(), "logsumexp: empty score vector");
    const double m = *std::max_element(z.begin(), z.end());
    if (!std::isfinite(m)) return m;
    double acc = 0.0;
    for (double v : z) acc += std::exp(v - m);
    return m + std::log(acc);
}

inline void softmax(std::span<const double> scores, std::span<double> probs) {
    detail::require(!scores.empty(), "softmax: empty score vector");
    const double m = *std::max_element(scores.begin(), scores.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) acc += probs[i] = std::exp(scores[i] - m);
    for (double& p : probs) p /= acc;
}

inline std::vector<double> softmax(std::span<const double> scores) {
    std::vector<double> p(scores.size());
    softmax(scores, p);
    return p;
}

/// Log-likelihood of `label` and its gradient w.r.t. the scores, in the
/// ascent direction: onehot(label) - softmax(scores).
inline double nll_value_and_grad(std::span<const double> scores, int label, std::span<double> grad) {
    detail::require(label >= 0 && static_cast<std::size_t>(label) < scores.size(),
                    "nll_value_and_grad: label " + std::to_string(label) + " outside [0, " +
                        std::to_string(scores.size()) + ")");
    const double lse = logsumexp(scores);
    for (std::size_t i = 0; i < scores.size(); ++i) grad[i] = -std::exp(scores[i] - lse);
    grad[static_cast<std::size_t>(label)] += 1.0;
    return scores[static_cast<std::size_t>(label)] - lse;
}

struct LikelihoodGrad {
    double value;
    std::vector<double> grad;
};

inline LikelihoodGrad nll_value_and_grad(std::span<const double> scores, int label) {
    LikelihoodGrad r{0.0, std::vector<double>(scores.size())};
    r.value = nll_value_and_grad(scores, label, r.grad);
    return r;
}

/// Index of the largest entry; ties go to the smallest index.
inline std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace wavecnn::net
