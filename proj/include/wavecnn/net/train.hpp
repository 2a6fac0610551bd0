// wavecnn/net/train.hpp
//
// Stochastic gradient ascent on the frame log-likelihood, one example per
// step, fixed learning rate, with early stopping on validation frame
// accuracy. The returned parameters are those of the best validation epoch.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "wavecnn/error.hpp"
#include "wavecnn/net/config.hpp"
#include "wavecnn/net/layers.hpp"
#include "wavecnn/net/network.hpp"
#include "wavecnn/random.hpp"

namespace wavecnn::net {

/// Fixed-shape examples stored contiguously: example i occupies
/// data[i*example_size, (i+1)*example_size).
struct ExampleSet {
    std::size_t frames = 0;
    std::size_t channels = 0;
    std::vector<double> data;
    std::vector<int> labels;

    std::size_t example_size() const noexcept { return frames * channels; }
    std::size_t size() const noexcept { return labels.size(); }
    bool empty() const noexcept { return labels.empty(); }

    std::span<const double> input(std::size_t i) const {
        return {data.data() + i * example_size(), example_size()};
    }
    void add(std::span<const double> x, int label) {
        detail::require(x.size() == example_size(),
                        "ExampleSet: example of size " + std::to_string(x.size()) +
                            ", expected " + std::to_string(example_size()));
        data.insert(data.end(), x.begin(), x.end());
        labels.push_back(label);
    }
};

struct EpochRecord {
    int epoch = 0;
    double mean_train_likelihood = 0.0;
    double valid_accuracy = 0.0;
    bool operator==(const EpochRecord&) const = default;
};

/// "epoch <n> train_L <mean L> valid_acc <accuracy>"
inline std::string format_epoch(const EpochRecord& r) {
    std::ostringstream os;
    os.precision(10);
    os << "epoch " << r.epoch << " train_L " << r.mean_train_likelihood << " valid_acc "
       << r.valid_accuracy;
    return os.str();
}

struct TrainResult {
    Parameters params;
    std::vector<EpochRecord> log;
    int best_epoch = 0;
    double best_valid_accuracy = 0.0;
};

struct TrainOptions {
    /// Called after every epoch (e.g. to stream the log).
    std::function<void(const EpochRecord&)> on_epoch;
    /// Starting point; default-initialised from the config seed when empty.
    const Parameters* initial = nullptr;
};

namespace train_detail {

inline void load_input(ForwardTrace& trace, const ExampleSet& set, std::size_t i) {
    if (trace.input.frames() != set.frames || trace.input.channels() != set.channels)
        trace.input.reset(set.frames, set.channels);
    const auto x = set.input(i);
    std::copy(x.begin(), x.end(), trace.input.values().begin());
}

}  // namespace train_detail

/// argmax class for every example.
inline std::vector<int> predict(const NetworkConfig& cfg, const Parameters& params, const ExampleSet& set) {
    std::vector<int> out(set.size());
    ForwardTrace trace;
    for (std::size_t i = 0; i < set.size(); ++i) {
        train_detail::load_input(trace, set, i);
        out[i] = static_cast<int>(argmax(network_forward(cfg, params, trace)));
    }
    return out;
}

inline double frame_accuracy_on(const NetworkConfig& cfg, const Parameters& params, const ExampleSet& set) {
    if (set.empty()) return 0.0;
    const auto pred = predict(cfg, params, set);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < set.size(); ++i) hits += pred[i] == set.labels[i];
    return static_cast<double>(hits) / static_cast<double>(set.size());
}

/// One ascent step on a single example: params += lr * dL/dparams. Returns L.
class SgdStepper {
public:
    explicit SgdStepper(const NetworkConfig& cfg) : cfg_(cfg), grads_(make_parameters(cfg)) {}

    double step(Parameters& params, const ExampleSet& set, std::size_t i) {
        train_detail::load_input(trace_, set, i);
        const auto scores = network_forward(cfg_, params, trace_);
        grad_scores_.resize(scores.size());
        const double L = nll_value_and_grad(scores, set.labels[i], grad_scores_);
        if (!std::isfinite(L)) return L;
        grads_.zero();
        network_backward(cfg_, params, trace_, grad_scores_, grads_, scratch_);
        params.add_scaled(grads_, cfg_.learning_rate);
        return L;
    }

private:
    const NetworkConfig& cfg_;
    Parameters grads_;
    ForwardTrace trace_;
    BackwardScratch scratch_;
    std::vector<double> grad_scores_;
};

inline TrainResult sgd_train(const NetworkConfig& cfg, const ExampleSet& train, const ExampleSet& valid,
                             const TrainOptions& options = {}) {
    detail::require(!train.empty(), "sgd_train: empty training set");
    detail::require(!valid.empty(), "sgd_train: empty validation set");
    for (const ExampleSet* set : {&train, &valid})
        detail::require(set->frames == cfg.input_frames() && set->channels == cfg.input_channels(),
                        "sgd_train: examples are " + std::to_string(set->frames) + "x" +
                            std::to_string(set->channels) + ", network expects " +
                            std::to_string(cfg.input_frames()) + "x" +
                            std::to_string(cfg.input_channels()));
    for (int label : train.labels)
        detail::require(label >= 0 && label < cfg.classifier.num_classes,
                        "sgd_train: training label " + std::to_string(label) + " out of range");

    Parameters params = options.initial ? *options.initial
                                        : init_parameters(cfg, derive_seed(cfg.seed, "init"));
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
    SgdStepper stepper(cfg);
    std::vector<std::size_t> order(train.size());

    TrainResult result;
    result.best_valid_accuracy = -1.0;
    int since_best = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double total = 0.0;
        for (std::size_t k = 0; k < order.size(); ++k) {
            const double L = stepper.step(params, train, order[k]);
            if (!std::isfinite(L) || !std::isfinite(total + L))
                throw TrainingError("training diverged: non-finite log-likelihood", epoch, order[k]);
            total += L;
        }
        EpochRecord rec{epoch, total / static_cast<double>(train.size()),
                        frame_accuracy_on(cfg, params, valid)};
        result.log.push_back(rec);
        if (options.on_epoch) options.on_epoch(rec);
        if (rec.valid_accuracy > result.best_valid_accuracy) {
            result.best_valid_accuracy = rec.valid_accuracy;
            result.best_epoch = epoch;
            result.params = params;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return result;
}

}  // namespace wavecnn::net
