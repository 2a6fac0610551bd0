// wavecnn/experiment.hpp
//
// Pipeline glue: turns corpus utterances into network examples for a given
// config (normalized raw windows or stacked cepstra), runs trained networks
// over utterances, and decodes/scores the result.

#pragma once

#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "wavecnn/corpus.hpp"
#include "wavecnn/decoder.hpp"
#include "wavecnn/eval.hpp"
#include "wavecnn/features.hpp"
#include "wavecnn/net/config.hpp"
#include "wavecnn/net/network.hpp"
#include "wavecnn/net/shape.hpp"
#include "wavecnn/net/train.hpp"
#include "wavecnn/signal.hpp"

namespace wavecnn::experiment {

enum class FeatureMode { raw, cepstral };

/// A RAW experiment needs at least one filter stage; a CEPSTRAL one is
/// classifier-only.
inline void check_experiment(FeatureMode mode, const net::NetworkConfig& cfg) {
    if (mode == FeatureMode::raw) {
        detail::require(cfg.input == net::InputKind::raw, "RAW experiment needs input = raw");
        detail::require(!cfg.stages.empty() && cfg.stages.size() <= net::kMaxStages,
                        "RAW experiment needs 1 to 5 filter stages");
    } else {
        detail::require(cfg.input == net::InputKind::cepstral, "CEPSTRAL experiment needs input = cepstral");
        detail::require(cfg.stages.empty(), "CEPSTRAL experiment is classifier-only (stages = 0)");
    }
}

inline constexpr signal::Millis kFrameShift{10};

/// Per-frame network inputs for one utterance, each of size
/// input_frames * input_channels.
inline std::vector<std::vector<double>> utterance_inputs(const net::NetworkConfig& cfg,
                                                         const corpus::Utterance& utt,
                                                         const features::CepstralConfig& cep = {}) {
    std::vector<std::vector<double>> out;
    if (cfg.input == net::InputKind::raw) {
        detail::require(utt.stream.rate == cfg.sample_rate,
                        "utterance " + utt.id + " sampled at " + std::to_string(utt.stream.rate) +
                            " Hz, network expects " + std::to_string(cfg.sample_rate));
        for (auto& w : signal::frame_stream(utt.stream, utt.labeling, signal::Millis(cfg.w_in_ms), kFrameShift))
            out.push_back(signal::normalize_window(std::move(w)).samples);
    } else {
        const auto feats = features::cepstral_features(utt.stream, cep);
        detail::require(feats.dim() == cfg.input_channels(),
                        "cepstral features have dim " + std::to_string(feats.dim()) + ", network expects " +
                            std::to_string(cfg.input_channels()));
        detail::require(feats.size() == utt.labeling.labels.size(),
                        "utterance " + utt.id + ": feature frames do not match labels");
        for (std::size_t t = 0; t < feats.size(); ++t) {
            const auto row = feats.frames.row(t);
            out.emplace_back(row.begin(), row.end());
        }
    }
    return out;
}

inline net::ExampleSet make_examples(const net::NetworkConfig& cfg,
                                     const std::vector<const corpus::Utterance*>& utts,
                                     const features::CepstralConfig& cep = {}) {
    net::ExampleSet set;
    set.frames = cfg.input_frames();
    set.channels = cfg.input_channels();
    for (const auto* u : utts) {
        const auto inputs = utterance_inputs(cfg, *u, cep);
        for (std::size_t t = 0; t < inputs.size(); ++t) set.add(inputs[t], u->labeling.labels[t]);
    }
    return set;
}

/// Posteriors -> scaled likelihoods -> Viterbi, for one posterior matrix.
inline decoder::DecodeResult decode_posteriors(const Tensor2& posteriors, const decoder::ClassPriors& priors,
                                               int states_per_phone = 3) {
    const decoder::HmmTopology topo{static_cast<int>(posteriors.channels()), states_per_phone};
    return decoder::viterbi_decode(decoder::scale_likelihoods(posteriors, priors), topo);
}

inline std::vector<int> argmax_frames(const Tensor2& posteriors) {
    std::vector<int> out(posteriors.frames());
    for (std::size_t t = 0; t < posteriors.frames(); ++t)
        out[t] = static_cast<int>(net::argmax(posteriors.row(t)));
    return out;
}

/// Symbol used for class k in decoded output files.
inline std::string phone_symbol(int k) { return "p" + std::to_string(k); }

/// "<id> <phones...> | <boundaries...>"
inline std::string format_decoded_line(const std::string& id, const decoder::PhoneSequence& seq) {
    std::string line = id;
    for (int p : seq.phones) line += " " + phone_symbol(p);
    line += " |";
    for (std::size_t b : seq.boundaries) line += " " + std::to_string(b);
    return line;
}

struct DecodedLine {
    std::string id;
    decoder::PhoneSequence sequence;
};

inline DecodedLine parse_decoded_line(const std::string& line) {
    std::istringstream in(line);
    DecodedLine d;
    detail::require(static_cast<bool>(in >> d.id), "decoded line: missing utterance id");
    std::string tok;
    bool in_bounds = false;
    while (in >> tok) {
        if (tok == "|") {
            in_bounds = true;
            continue;
        }
        if (!in_bounds) {
            detail::require(tok.size() > 1 && tok[0] == 'p', "decoded line: bad phone symbol '" + tok + "'");
            d.sequence.phones.push_back(net::config_detail::parse_number<int>("phone", tok.substr(1)));
        } else {
            d.sequence.boundaries.push_back(net::config_detail::parse_number<std::size_t>("boundary", tok));
        }
    }
    detail::require(in_bounds && d.sequence.phones.size() == d.sequence.boundaries.size(),
                    "decoded line for " + d.id + ": phone and boundary counts differ");
    return d;
}

/// Trains cfg on the corpus train split, early-stopping on the valid split.
inline net::TrainResult train_on_corpus(const net::NetworkConfig& cfg, const corpus::Corpus& c,
                                        const net::TrainOptions& options = {},
                                        const features::CepstralConfig& cep = {}) {
    check_experiment(cfg.input == net::InputKind::raw ? FeatureMode::raw : FeatureMode::cepstral, cfg);
    detail::require(cfg.classifier.num_classes == c.num_classes,
                    "config has " + std::to_string(cfg.classifier.num_classes) + " classes, corpus has " +
                        std::to_string(c.num_classes));
    return net::sgd_train(cfg, make_examples(cfg, c.split("train"), cep), make_examples(cfg, c.split("valid"), cep),
                          options);
}

inline decoder::ClassPriors train_priors(const corpus::Corpus& c) {
    std::vector<signal::FrameLabeling> labels;
    for (const auto* u : c.split("train")) labels.push_back(u->labeling);
    return decoder::estimate_priors(labels, c.num_classes);
}

struct DecodedUtterance {
    std::string id;
    Tensor2 posteriors;
    decoder::DecodeResult decode;
};

inline std::vector<DecodedUtterance> decode_utterances(const net::NetworkConfig& cfg, const net::Parameters& params,
                                                       const decoder::ClassPriors& priors,
                                                       const std::vector<const corpus::Utterance*>& utts,
                                                       int states_per_phone = 3,
                                                       const features::CepstralConfig& cep = {}) {
    std::vector<DecodedUtterance> out;
    for (const auto* u : utts) {
        DecodedUtterance d{u->id, net::posteriors(cfg, params, utterance_inputs(cfg, *u, cep)), {}};
        d.decode = decode_posteriors(d.posteriors, priors, states_per_phone);
        out.push_back(std::move(d));
    }
    return out;
}

/// Scores decoded sequences and argmax frame predictions against references.
inline eval::CorpusScorer score_utterances(const std::vector<const corpus::Utterance*>& refs,
                                           const std::vector<decoder::PhoneSequence>& hyps,
                                           const std::vector<std::vector<int>>& frame_predictions) {
    detail::require(refs.size() == hyps.size() && refs.size() == frame_predictions.size(),
                    "score: " + std::to_string(hyps.size()) + " hypotheses for " + std::to_string(refs.size()) +
                        " reference utterances");
    eval::CorpusScorer scorer;
    for (std::size_t i = 0; i < refs.size(); ++i)
        scorer.add_utterance(hyps[i].phones, refs[i]->reference.phones, frame_predictions[i],
                             refs[i]->labeling.labels);
    return scorer;
}

inline eval::ScoreReport make_report(const net::NetworkConfig& cfg, const eval::CorpusScorer& scorer) {
    eval::ScoreReport r;
    r.features = cfg.input == net::InputKind::raw ? "RAW" : "MFCC";
    r.conv_layers = cfg.stages.size();
    r.classifier = cfg.classifier.kind == net::ClassifierKind::slp ? "SLP" : "MLP";
    r.params = net::param_count(cfg).weights_only;
    r.frame_accuracy = scorer.frame_accuracy();
    r.per = scorer.per();
    r.edits = scorer.edits();
    return r;
}

}  // namespace wavecnn::experiment
