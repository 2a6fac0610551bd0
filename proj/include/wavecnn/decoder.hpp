// wavecnn/decoder.hpp
//
// Hybrid HMM/ANN phone decoding. Posteriors are turned into scaled
// likelihoods by dividing by class priors (in the log domain), and the best
// phone sequence is found by Viterbi search over a minimum-duration topology:
// each phone is a chain of `states_per_phone` states that all emit the
// phone's per-frame score, the first states advance unconditionally, the last
// state may loop, and from the last state any phone (itself included) may be
// entered. All transition scores are zero, so the search is a pure max over
// segmentations whose segments are at least states_per_phone frames long.
//
// Ties between equal-scoring state paths are broken toward the
// lexicographically smallest path, comparing frame by frame on the key
// (phone index ascending, then position inside the phone descending). The
// second component means that continuing a segment beats re-entering the
// same phone, so an unbroken run is never split into repeats on a tie.
// Scores within a relative 1e-9 of each other count as tied, so rounding of
// a constant per-frame offset (uniform priors) cannot flip a tie.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "wavecnn/error.hpp"
#include "wavecnn/signal.hpp"
#include "wavecnn/tensor.hpp"

namespace wavecnn::decoder {

struct ClassPriors {
    std::vector<double> priors;
};

struct HmmTopology {
    int num_phones = 0;
    int states_per_phone = 3;

    void validate() const {
        detail::require(num_phones >= 1, "HmmTopology: num_phones must be >= 1");
        detail::require(states_per_phone >= 1, "HmmTopology: states_per_phone must be >= 1");
    }
    std::size_t num_states() const noexcept {
        return static_cast<std::size_t>(num_phones) * static_cast<std::size_t>(states_per_phone);
    }
};

struct PhoneSequence {
    std::vector<int> phones;
    std::vector<std::size_t> boundaries;  ///< start frame of each segment

    bool operator==(const PhoneSequence&) const = default;
};

/// Run-length collapse of a frame labeling into segments.
inline PhoneSequence collapse_labels(const std::vector<int>& labels) {
    PhoneSequence seq;
    for (std::size_t t = 0; t < labels.size(); ++t) {
        if (t == 0 || labels[t] != labels[t - 1]) {
            seq.phones.push_back(labels[t]);
            seq.boundaries.push_back(t);
        }
    }
    return seq;
}

/// Add-one smoothed relative frequencies: (count_i + 1) / (N + K).
inline ClassPriors estimate_priors(const std::vector<signal::FrameLabeling>& labelings, int num_classes) {
    detail::require(num_classes >= 1, "estimate_priors: num_classes must be >= 1");
    std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
    double total = 0.0;
    for (const auto& l : labelings) {
        for (int c : l.labels) {
            detail::require(c >= 0 && c < num_classes,
                            "estimate_priors: label " + std::to_string(c) + " out of range");
            counts[static_cast<std::size_t>(c)] += 1.0;
            total += 1.0;
        }
    }
    ClassPriors p;
    p.priors.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        p.priors[i] = (counts[i] + 1.0) / (total + static_cast<double>(num_classes));
    return p;
}

inline ClassPriors uniform_priors(int num_classes) {
    return {std::vector<double>(static_cast<std::size_t>(num_classes), 1.0 / num_classes)};
}

/// out(t, i) = log p(i | x_t) - log prior_i.
inline Tensor2 scale_likelihoods(const Tensor2& posteriors, const ClassPriors& priors) {
    detail::require(posteriors.channels() == priors.priors.size(),
                    "scale_likelihoods: posteriors have " + std::to_string(posteriors.channels()) +
                        " classes, priors have " + std::to_string(priors.priors.size()));
    Tensor2 out(posteriors.frames(), posteriors.channels());
    for (std::size_t i = 0; i < priors.priors.size(); ++i)
        detail::require(priors.priors[i] > 0.0, "scale_likelihoods: zero prior for class " + std::to_string(i));
    for (std::size_t t = 0; t < posteriors.frames(); ++t)
        for (std::size_t i = 0; i < posteriors.channels(); ++i)
            out(t, i) = std::log(posteriors(t, i)) - std::log(priors.priors[i]);
    return out;
}

struct DecodeResult {
    PhoneSequence sequence;
    double score = 0.0;
    std::vector<int> frame_phones;  ///< phone per frame along the best path
};

/// Viterbi search; see the file comment for topology and tie-breaking.
inline DecodeResult viterbi_decode(const Tensor2& log_likes, const HmmTopology& topo) {
    topo.validate();
    const std::size_t frames = log_likes.frames();
    const auto S = static_cast<std::size_t>(topo.states_per_phone);
    const auto P = static_cast<std::size_t>(topo.num_phones);
    detail::require(log_likes.channels() == P,
                    "viterbi_decode: scores have " + std::to_string(log_likes.channels()) +
                        " classes, topology has " + std::to_string(P) + " phones");
    detail::require(frames >= S, "viterbi_decode: " + std::to_string(frames) +
                                     " frames, fewer than the " + std::to_string(S) +
                                     "-state minimum duration");

    const std::size_t N = P * S;
    constexpr double kNone = -std::numeric_limits<double>::infinity();
    constexpr std::size_t kNoPred = std::numeric_limits<std::size_t>::max();
    // -1: a below b, 0: tied, 1: a above b.
    auto compare = [](double a, double b) {
        const double tol = 1e-9 * (1.0 + std::max(std::abs(a), std::abs(b)));
        return a > b + tol ? 1 : (b > a + tol ? -1 : 0);
    };
    auto phone_of = [S](std::size_t state) { return state / S; };
    auto pos_of = [S](std::size_t state) { return state % S; };
    // Per-frame ordering key of a state: phone ascending, position descending.
    auto key_less = [&](std::size_t a, std::size_t b) {
        if (phone_of(a) != phone_of(b)) return phone_of(a) < phone_of(b);
        return pos_of(a) > pos_of(b);
    };

    std::vector<double> score(N, kNone), next(N, kNone);
    // rank[s]: position of the best prefix ending in s among all states at
    // the current frame, under lexicographic path order.
    std::vector<std::size_t> rank(N, 0), next_rank(N, 0);
    std::vector<std::size_t> back(frames * N, kNoPred);

    for (std::size_t p = 0; p < P; ++p) score[p * S] = log_likes(0, p);
    auto rerank = [&](const std::vector<double>& sc, const std::vector<std::size_t>& pred_rank,
                      const std::vector<std::size_t>* pred_of, std::vector<std::size_t>& out) {
        std::vector<std::size_t> order(N);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const bool ra = sc[a] != kNone, rb = sc[b] != kNone;
            if (ra != rb) return ra;
            if (pred_of) {
                const std::size_t pa = (*pred_of)[a], pb = (*pred_of)[b];
                if (ra && pred_rank[pa] != pred_rank[pb]) return pred_rank[pa] < pred_rank[pb];
            }
            return key_less(a, b);
        });
        for (std::size_t i = 0; i < N; ++i) out[order[i]] = i;
    };
    rerank(score, rank, nullptr, rank);

    std::vector<std::size_t> pred(N);
    for (std::size_t t = 1; t < frames; ++t) {
        std::fill(next.begin(), next.end(), kNone);
        std::fill(pred.begin(), pred.end(), kNoPred);
        auto offer = [&](std::size_t to, std::size_t from) {
            if (score[from] == kNone) return;
            if (pred[to] == kNoPred) {
                pred[to] = from;
                return;
            }
            const int c = compare(score[from], score[pred[to]]);
            if (c > 0 || (c == 0 && rank[from] < rank[pred[to]])) pred[to] = from;
        };
        for (std::size_t p = 0; p < P; ++p) {
            for (std::size_t s = 0; s < S; ++s) {
                const std::size_t to = p * S + s;
                if (s == 0) {
                    for (std::size_t q = 0; q < P; ++q) offer(to, q * S + (S - 1));
                } else {
                    offer(to, to - 1);
                }
                if (s == S - 1 && S > 1) offer(to, to);
                if (pred[to] != kNoPred) {
                    next[to] = score[pred[to]] + log_likes(t, p);
                    back[t * N + to] = pred[to];
                }
            }
        }
        rerank(next, rank, &pred, next_rank);
        std::swap(score, next);
        std::swap(rank, next_rank);
    }

    std::size_t best = kNoPred;
    for (std::size_t p = 0; p < P; ++p) {
        const std::size_t s = p * S + (S - 1);
        if (score[s] == kNone) continue;
        if (best == kNoPred) {
            best = s;
            continue;
        }
        const int c = compare(score[s], score[best]);
        if (c > 0 || (c == 0 && rank[s] < rank[best])) best = s;
    }
    detail::require(best != kNoPred, "viterbi_decode: no complete path");

    DecodeResult result;
    result.score = score[best];
    std::vector<std::size_t> path(frames);
    path[frames - 1] = best;
    for (std::size_t t = frames - 1; t > 0; --t) path[t - 1] = back[t * N + path[t]];
    result.frame_phones.resize(frames);
    for (std::size_t t = 0; t < frames; ++t) result.frame_phones[t] = static_cast<int>(phone_of(path[t]));
    if (S == 1) {
        // One state per phone cannot tell a self-loop from a re-entry.
        result.sequence = collapse_labels(result.frame_phones);
        return result;
    }
    for (std::size_t t = 0; t < frames; ++t) {
        if (pos_of(path[t]) == 0) {
            result.sequence.phones.push_back(result.frame_phones[t]);
            result.sequence.boundaries.push_back(t);
        }
    }
    return result;
}

}  // namespace wavecnn::decoder
