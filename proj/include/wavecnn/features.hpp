// wavecnn/features.hpp
//
// Cepstral baseline front end: Hamming-windowed power spectrum, triangular
// mel filterbank, floored log, orthonormal DCT-II, regression deltas and
// context stacking. Analysis frames share the 10 ms frame grid used by
// signal::frame_stream (one feature vector per labeled frame, centred on the
// frame centre, edge-replicated), so features and labels line up one to one.

#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "wavecnn/error.hpp"
#include "wavecnn/signal.hpp"
#include "wavecnn/tensor.hpp"

namespace wavecnn::features {

using signal::Millis;

struct CepstralConfig {
    Millis window{25};
    Millis shift{10};
    int num_coeffs = 13;
    int num_mel_filters = 26;
    int fft_size = 512;
    int delta_context = 2;
    int stack_context = 9;
    double low_freq = 0.0;
    double high_freq = 0.0;  ///< 0 means Nyquist
    double log_floor = 1e-10;

    void validate(int rate) const {
        detail::require(num_coeffs >= 1, "CepstralConfig: num_coeffs must be >= 1");
        detail::require(num_coeffs <= num_mel_filters,
                        "CepstralConfig: num_coeffs exceeds num_mel_filters");
        const std::size_t win = signal::samples_in(window, rate);
        detail::require(fft_size > 0 && static_cast<std::size_t>(fft_size) >= win,
                        "CepstralConfig: fft_size " + std::to_string(fft_size) +
                            " shorter than the " + std::to_string(win) + "-sample window");
        detail::require(delta_context >= 1, "CepstralConfig: delta_context must be >= 1");
        detail::require(stack_context >= 1 && stack_context % 2 == 1,
                        "CepstralConfig: stack_context must be odd");
        const double top = upper_edge(rate);
        detail::require(low_freq >= 0.0 && low_freq < top && top <= rate / 2.0,
                        "CepstralConfig: bad filterbank frequency range");
    }

    double upper_edge(int rate) const { return high_freq > 0.0 ? high_freq : rate / 2.0; }

    /// Per-frame dimensionality after deltas and stacking (351 for the defaults).
    int output_dim() const { return num_coeffs * 3 * stack_context; }
};

/// frames x dim, all values finite.
struct FeatureSequence {
    Tensor2 frames;
    std::size_t dim() const noexcept { return frames.channels(); }
    std::size_t size() const noexcept { return frames.frames(); }
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

inline std::vector<double> hamming(std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (n < 2) return w;
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                      static_cast<double>(n - 1));
    return w;
}

/// Triangular unit-peak filters, equally spaced on the mel scale. Row m holds
/// the weight of each FFT bin 0..fft_size/2 for filter m.
class MelFilterbank {
public:
    MelFilterbank(const CepstralConfig& cfg, int rate)
        : num_filters_(static_cast<std::size_t>(cfg.num_mel_filters)),
          num_bins_(static_cast<std::size_t>(cfg.fft_size / 2 + 1)),
          weights_(num_filters_ * num_bins_, 0.0) {
        const double mel_lo = hz_to_mel(cfg.low_freq);
        const double mel_hi = hz_to_mel(cfg.upper_edge(rate));
        const double step = (mel_hi - mel_lo) / static_cast<double>(num_filters_ + 1);
        centers_.resize(num_filters_);
        for (std::size_t m = 0; m < num_filters_; ++m) {
            const double left = mel_lo + step * static_cast<double>(m);
            const double center = left + step;
            const double right = center + step;
            centers_[m] = mel_to_hz(center);
            for (std::size_t k = 0; k < num_bins_; ++k) {
                const double mel = hz_to_mel(static_cast<double>(k) * rate / cfg.fft_size);
                double w = 0.0;
                if (mel > left && mel <= center)
                    w = (mel - left) / (center - left);
                else if (mel > center && mel < right)
                    w = (right - mel) / (right - center);
                weights_[m * num_bins_ + k] = w;
            }
        }
    }

    std::size_t size() const noexcept { return num_filters_; }
    const std::vector<double>& center_frequencies() const noexcept { return centers_; }

    void apply(const std::vector<double>& power, std::vector<double>& energies) const {
        energies.assign(num_filters_, 0.0);
        for (std::size_t m = 0; m < num_filters_; ++m) {
            const double* w = weights_.data() + m * num_bins_;
            double acc = 0.0;
            for (std::size_t k = 0; k < num_bins_; ++k) acc += w[k] * power[k];
            energies[m] = acc;
        }
    }

private:
    std::size_t num_filters_;
    std::size_t num_bins_;
    std::vector<double> weights_;
    std::vector<double> centers_;
};

/// Orthonormal DCT-II of x, truncated to the first `num_out` coefficients.
inline std::vector<double> dct2(const std::vector<double>& x, std::size_t num_out) {
    const std::size_t n = x.size();
    std::vector<double> out(num_out, 0.0);
    const double s0 = std::sqrt(1.0 / static_cast<double>(n));
    const double sk = std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t k = 0; k < num_out; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += x[i] * std::cos(std::numbers::pi * static_cast<double>(k) *
                                   (static_cast<double>(i) + 0.5) / static_cast<double>(n));
        out[k] = acc * (k == 0 ? s0 : sk);
    }
    return out;
}

namespace fft {

// FFTW planning is not thread-safe; execution with a private plan is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

class RealFft {
public:
    explicit RealFft(std::size_t n)
        : n_(n),
          in_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
          out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
        std::lock_guard lock(fftw_planner_mutex());
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
    }
    ~RealFft() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(in_);
        fftw_free(out_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    /// |X_k|^2 for k = 0..n/2 of the zero-padded input.
    void power(const std::vector<double>& frame, std::vector<double>& out) {
        std::fill(in_, in_ + n_, 0.0);
        std::copy(frame.begin(), frame.end(), in_);
        fftw_execute(plan_);
        out.resize(n_ / 2 + 1);
        for (std::size_t k = 0; k <= n_ / 2; ++k)
            out[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    }

private:
    std::size_t n_;
    double* in_;
    fftw_complex* out_;
    fftw_plan plan_;
};

}  // namespace fft

/// Log mel filterbank energies per frame (frames x num_mel_filters). Exposed
/// separately so callers can inspect the filterbank stage.
inline Tensor2 log_mel_energies(const signal::SampleStream& stream, const CepstralConfig& cfg) {
    stream.validate();
    cfg.validate(stream.rate);
    const std::size_t win = signal::samples_in(cfg.window, stream.rate);
    const std::size_t hop = signal::samples_in(cfg.shift, stream.rate);
    wavecnn::detail::require(stream.samples.size() >= win,
                             "compute_static_cepstra: stream of " +
                                 std::to_string(stream.samples.size()) +
                                 " samples shorter than one " + std::to_string(win) +
                                 "-sample analysis window");
    const std::size_t frames = stream.samples.size() / hop;
    const auto window = hamming(win);
    const MelFilterbank bank(cfg, stream.rate);
    fft::RealFft fft(static_cast<std::size_t>(cfg.fft_size));

    Tensor2 out(frames, bank.size());
    std::vector<double> power, energies;
    for (std::size_t t = 0; t < frames; ++t) {
        const long long center = static_cast<long long>(t * hop + hop / 2);
        auto frame = signal::extract_padded(stream.samples, center - static_cast<long long>(win / 2), win);
        for (std::size_t i = 0; i < win; ++i) frame[i] *= window[i];
        fft.power(frame, power);
        bank.apply(power, energies);
        for (std::size_t m = 0; m < bank.size(); ++m)
            out(t, m) = std::log(std::max(energies[m], cfg.log_floor));
    }
    return out;
}

inline FeatureSequence compute_static_cepstra(const signal::SampleStream& stream,
                                              const CepstralConfig& cfg) {
    const Tensor2 logmel = log_mel_energies(stream, cfg);
    const auto coeffs = static_cast<std::size_t>(cfg.num_coeffs);
    Tensor2 out(logmel.frames(), coeffs);
    std::vector<double> row(logmel.channels());
    for (std::size_t t = 0; t < logmel.frames(); ++t) {
        std::copy(logmel.row(t).begin(), logmel.row(t).end(), row.begin());
        const auto c = dct2(row, coeffs);
        std::copy(c.begin(), c.end(), out.row(t).begin());
    }
    return {std::move(out)};
}

/// Regression deltas over +-context frames with edge replication:
/// d_t = sum_n n (c_{t+n} - c_{t-n}) / (2 sum_n n^2).
inline Tensor2 regression_deltas(const Tensor2& in, int context) {
    const long long last = static_cast<long long>(in.frames()) - 1;
    double denom = 0.0;
    for (int n = 1; n <= context; ++n) denom += 2.0 * n * n;
    Tensor2 out(in.frames(), in.channels());
    for (long long t = 0; t <= last; ++t) {
        for (int n = 1; n <= context; ++n) {
            const auto fwd = static_cast<std::size_t>(std::min(t + n, last));
            const auto back = static_cast<std::size_t>(std::max(t - n, 0LL));
            for (std::size_t c = 0; c < in.channels(); ++c)
                out(static_cast<std::size_t>(t), c) += n * (in(fwd, c) - in(back, c));
        }
        for (std::size_t c = 0; c < in.channels(); ++c) out(static_cast<std::size_t>(t), c) /= denom;
    }
    return out;
}

/// [static | delta | delta-delta], dim 3 * num_coeffs.
inline FeatureSequence append_deltas(const FeatureSequence& statics, const CepstralConfig& cfg) {
    wavecnn::detail::require(statics.dim() == static_cast<std::size_t>(cfg.num_coeffs),
                             "append_deltas: static dim " + std::to_string(statics.dim()) +
                                 " != num_coeffs " + std::to_string(cfg.num_coeffs));
    const Tensor2 d1 = regression_deltas(statics.frames, cfg.delta_context);
    const Tensor2 d2 = regression_deltas(d1, cfg.delta_context);
    const std::size_t n = statics.dim();
    Tensor2 out(statics.size(), 3 * n);
    for (std::size_t t = 0; t < statics.size(); ++t) {
        auto row = out.row(t);
        std::copy(statics.frames.row(t).begin(), statics.frames.row(t).end(), row.begin());
        std::copy(d1.row(t).begin(), d1.row(t).end(), row.begin() + static_cast<long>(n));
        std::copy(d2.row(t).begin(), d2.row(t).end(), row.begin() + static_cast<long>(2 * n));
    }
    return {std::move(out)};
}

/// Frame t becomes frames t-(c-1)/2 .. t+(c-1)/2 concatenated (edge replication).
inline FeatureSequence stack_context(const FeatureSequence& feats, int context) {
    wavecnn::detail::require(context >= 1 && context % 2 == 1,
                             "stack_context: context " + std::to_string(context) + " is not odd");
    const long long half = context / 2;
    const long long last = static_cast<long long>(feats.size()) - 1;
    const std::size_t dim = feats.dim();
    Tensor2 out(feats.size(), dim * static_cast<std::size_t>(context));
    for (long long t = 0; t <= last; ++t) {
        auto dst = out.row(static_cast<std::size_t>(t)).begin();
        for (long long o = -half; o <= half; ++o) {
            const auto src = feats.frames.row(static_cast<std::size_t>(std::clamp(t + o, 0LL, last)));
            dst = std::copy(src.begin(), src.end(), dst);
        }
    }
    return {std::move(out)};
}

/// Full baseline front end: statics, deltas, stacking.
inline FeatureSequence cepstral_features(const signal::SampleStream& stream,
                                         const CepstralConfig& cfg) {
    return stack_context(append_deltas(compute_static_cepstra(stream, cfg), cfg),
                         cfg.stack_context);
}

}  // namespace wavecnn::features
