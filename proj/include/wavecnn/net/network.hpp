// wavecnn/net/network.hpp
//
// Network assembly: filter stages (conv -> max-pool -> tanh) followed by an
// SLP (one affine layer) or MLP (affine -> tanh -> affine) classifier. The
// final stage output is flattened frame-major into the classifier input.

#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wavecnn/error.hpp"
#include "wavecnn/net/config.hpp"
#include "wavecnn/net/layers.hpp"
#include "wavecnn/net/shape.hpp"
#include "wavecnn/random.hpp"
#include "wavecnn/tensor.hpp"

namespace wavecnn::net {

/// Trainable state. conv[i] is stage i's d_out x (kW * d_in) filter matrix;
/// classifier holds one layer (SLP) or hidden then output (MLP).
struct Parameters {
    std::vector<Dense> conv;
    std::vector<Dense> classifier;

    template <typename F>
    void for_each_layer(F&& f) {
        for (auto& d : conv) f(d);
        for (auto& d : classifier) f(d);
    }
    template <typename F>
    void for_each_layer(F&& f) const {
        for (const auto& d : conv) f(d);
        for (const auto& d : classifier) f(d);
    }

    void zero() {
        for_each_layer([](Dense& d) { d.zero(); });
    }

    /// this += scale * other (same shapes).
    void add_scaled(const Parameters& other, double scale) {
        auto axpy = [scale](Dense& dst, const Dense& src) {
            for (std::size_t i = 0; i < dst.weights.size(); ++i) dst.weights[i] += scale * src.weights[i];
            for (std::size_t i = 0; i < dst.bias.size(); ++i) dst.bias[i] += scale * src.bias[i];
        };
        for (std::size_t i = 0; i < conv.size(); ++i) axpy(conv[i], other.conv[i]);
        for (std::size_t i = 0; i < classifier.size(); ++i) axpy(classifier[i], other.classifier[i]);
    }

    bool all_finite() const {
        bool ok = true;
        for_each_layer([&ok](const Dense& d) {
            for (double v : d.weights) ok = ok && std::isfinite(v);
            for (double v : d.bias) ok = ok && std::isfinite(v);
        });
        return ok;
    }

    bool operator==(const Parameters&) const = default;
};

/// Zero-valued parameters with the shapes implied by cfg.
inline Parameters make_parameters(const NetworkConfig& cfg) {
    const ShapeTrace shape = output_shape(cfg);
    Parameters p;
    std::size_t d_in = shape.input_channels;
    for (const auto& s : cfg.stages) {
        p.conv.emplace_back(static_cast<std::size_t>(s.d_out), static_cast<std::size_t>(s.kW) * d_in);
        d_in = static_cast<std::size_t>(s.d_out);
    }
    const auto k = static_cast<std::size_t>(cfg.classifier.num_classes);
    if (cfg.classifier.kind == ClassifierKind::slp) {
        p.classifier.emplace_back(k, shape.classifier_input);
    } else {
        const auto h = static_cast<std::size_t>(cfg.classifier.hidden_units);
        p.classifier.emplace_back(h, shape.classifier_input);
        p.classifier.emplace_back(k, h);
    }
    return p;
}

/// Uniform in +-1/sqrt(fan_in) for weights and biases.
inline Parameters init_parameters(const NetworkConfig& cfg, std::uint64_t seed) {
    Parameters p = make_parameters(cfg);
    Rng rng(seed);
    p.for_each_layer([&rng](Dense& d) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(d.cols));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (double& w : d.weights) w = u(rng);
        for (double& b : d.bias) b = u(rng);
    });
    return p;
}

/// Intermediate activations of one forward pass, kept for the backward pass.
/// Reusing one trace across examples avoids reallocation.
struct ForwardTrace {
    Tensor2 input;
    std::vector<Tensor2> conv_out;
    std::vector<Tensor2> stage_out;  ///< pooled then tanh'd
    std::vector<std::vector<std::size_t>> argmax;
    std::vector<double> hidden;  ///< MLP hidden activations (post tanh)
    std::vector<double> scores;

    std::span<const double> classifier_input() const {
        return stage_out.empty() ? input.values() : stage_out.back().values();
    }
};

namespace network_detail {

inline void check_input(const NetworkConfig& cfg, std::size_t frames, std::size_t channels) {
    detail::require(frames == cfg.input_frames() && channels == cfg.input_channels(),
                    "network_forward: input shape " + std::to_string(frames) + "x" +
                        std::to_string(channels) + " does not match config (" +
                        std::to_string(cfg.input_frames()) + "x" +
                        std::to_string(cfg.input_channels()) + ")");
}

}  // namespace network_detail

/// Runs the network on `input` (already copied into trace.input) and fills
/// the trace. Returns the class scores f_i(x).
inline std::span<const double> network_forward(const NetworkConfig& cfg, const Parameters& params,
                                               ForwardTrace& trace) {
    network_detail::check_input(cfg, trace.input.frames(), trace.input.channels());
    detail::require(params.conv.size() == cfg.stages.size(),
                    "network_forward: parameters have " + std::to_string(params.conv.size()) +
                        " conv layers, config has " + std::to_string(cfg.stages.size()));
    const std::size_t n = cfg.stages.size();
    trace.conv_out.resize(n);
    trace.stage_out.resize(n);
    trace.argmax.resize(n);
    const Tensor2* x = &trace.input;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = cfg.stages[i];
        try {
            conv_forward(*x, params.conv[i], static_cast<std::size_t>(s.kW),
                         static_cast<std::size_t>(s.dW), trace.conv_out[i]);
            maxpool_forward(trace.conv_out[i], static_cast<std::size_t>(s.pool_kW),
                            static_cast<std::size_t>(s.pool_stride), trace.stage_out[i],
                            trace.argmax[i]);
        } catch (const StructuralError& e) {
            throw StructuralError("stage " + std::to_string(i + 1) + ": " + e.what());
        }
        tanh_forward(trace.stage_out[i].values());
        x = &trace.stage_out[i];
    }

    const auto flat = trace.classifier_input();
    const Dense& out_layer = params.classifier.back();
    trace.scores.resize(out_layer.rows);
    if (cfg.classifier.kind == ClassifierKind::slp) {
        detail::require(params.classifier.size() == 1, "network_forward: SLP expects one layer");
        linear_forward(flat, out_layer, trace.scores);
    } else {
        detail::require(params.classifier.size() == 2, "network_forward: MLP expects two layers");
        trace.hidden.resize(params.classifier[0].rows);
        linear_forward(flat, params.classifier[0], trace.hidden);
        tanh_forward(trace.hidden);
        linear_forward(trace.hidden, out_layer, trace.scores);
    }
    return trace.scores;
}

/// Convenience form: scores for one input window of shape input_frames x
/// input_channels (row-major).
inline std::vector<double> network_forward(const NetworkConfig& cfg, const Parameters& params,
                                           std::span<const double> input) {
    ForwardTrace trace;
    trace.input = Tensor2(cfg.input_frames(), cfg.input_channels(),
                          std::vector<double>(input.begin(), input.end()));
    const auto scores = network_forward(cfg, params, trace);
    return {scores.begin(), scores.end()};
}

/// Scratch buffers for the backward pass.
struct BackwardScratch {
    std::vector<double> grad_hidden;
    std::vector<double> grad_flat;
    Tensor2 grad_stage;
    Tensor2 grad_conv;
    Tensor2 grad_prev;
};

/// Accumulates d(objective)/d(params) into `grads` given d(objective)/d(scores).
inline void network_backward(const NetworkConfig& cfg, const Parameters& params,
                             const ForwardTrace& trace, std::span<const double> grad_scores,
                             Parameters& grads, BackwardScratch& scratch) {
    const std::size_t n = cfg.stages.size();
    const auto flat = trace.classifier_input();
    // Input gradient of the classifier is only needed when stages precede it.
    scratch.grad_flat.assign(n > 0 ? flat.size() : 0, 0.0);
    if (cfg.classifier.kind == ClassifierKind::slp) {
        linear_backward(flat, params.classifier[0], grad_scores, scratch.grad_flat, grads.classifier[0]);
    } else {
        scratch.grad_hidden.assign(trace.hidden.size(), 0.0);
        linear_backward(trace.hidden, params.classifier[1], grad_scores, scratch.grad_hidden,
                        grads.classifier[1]);
        tanh_backward(trace.hidden, scratch.grad_hidden);
        linear_backward(flat, params.classifier[0], scratch.grad_hidden, scratch.grad_flat,
                        grads.classifier[0]);
    }
    if (n == 0) return;

    const Tensor2& last = trace.stage_out.back();
    scratch.grad_stage.reset(last.frames(), last.channels());
    std::copy(scratch.grad_flat.begin(), scratch.grad_flat.end(), scratch.grad_stage.values().begin());
    for (std::size_t i = n; i-- > 0;) {
        const auto& s = cfg.stages[i];
        tanh_backward(trace.stage_out[i].values(), scratch.grad_stage.values());
        maxpool_backward(trace.argmax[i], scratch.grad_stage, trace.conv_out[i].frames(), scratch.grad_conv);
        const Tensor2& in = i == 0 ? trace.input : trace.stage_out[i - 1];
        conv_backward(in, params.conv[i], static_cast<std::size_t>(s.kW), static_cast<std::size_t>(s.dW),
                      scratch.grad_conv, i == 0 ? nullptr : &scratch.grad_prev, grads.conv[i]);
        if (i > 0) std::swap(scratch.grad_stage, scratch.grad_prev);
    }
}

/// Softmax of the scores for each row of `inputs` (frames x input size).
inline Tensor2 posteriors(const NetworkConfig& cfg, const Parameters& params,
                          std::span<const std::vector<double>> inputs) {
    const auto k = static_cast<std::size_t>(cfg.classifier.num_classes);
    Tensor2 out(inputs.size(), k);
    ForwardTrace trace;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        trace.input = Tensor2(cfg.input_frames(), cfg.input_channels(), inputs[t]);
        softmax(network_forward(cfg, params, trace), out.row(t));
    }
    return out;
}

}  // namespace wavecnn::net
