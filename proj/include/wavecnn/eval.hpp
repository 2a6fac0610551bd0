// wavecnn/eval.hpp
//
// Frame accuracy, phone error rate and the experiment score report.

#pragma once

#include <algorithm>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "wavecnn/error.hpp"
#include "wavecnn/net/shape.hpp"

namespace wavecnn::eval {

inline double frame_accuracy(const std::vector<int>& predicted, const std::vector<int>& reference) {
    detail::require(predicted.size() == reference.size(),
                    "frame_accuracy: " + std::to_string(predicted.size()) + " predictions for " +
                        std::to_string(reference.size()) + " reference frames");
    if (reference.empty()) return 1.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < reference.size(); ++i) hits += predicted[i] == reference[i];
    return static_cast<double>(hits) / static_cast<double>(reference.size());
}

struct EditCounts {
    std::size_t substitutions = 0;
    std::size_t deletions = 0;
    std::size_t insertions = 0;
    std::size_t reference_length = 0;

    std::size_t errors() const noexcept { return substitutions + deletions + insertions; }
    double per() const {
        detail::require(reference_length > 0, "phone error rate: empty reference");
        return static_cast<double>(errors()) / static_cast<double>(reference_length);
    }
    EditCounts& operator+=(const EditCounts& o) {
        substitutions += o.substitutions;
        deletions += o.deletions;
        insertions += o.insertions;
        reference_length += o.reference_length;
        return *this;
    }
};

/// Unit-cost Levenshtein alignment of hyp against ref. Among minimum-cost
/// alignments the backtrace takes the diagonal first, so a substitution is
/// preferred over an insertion+deletion pair.
inline EditCounts align(const std::vector<int>& hyp, const std::vector<int>& ref) {
    const std::size_t n = ref.size(), m = hyp.size();
    std::vector<std::size_t> cost((n + 1) * (m + 1));
    auto at = [m, &cost](std::size_t i, std::size_t j) -> std::size_t& { return cost[i * (m + 1) + j]; };
    for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
    for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j)
            at(i, j) = std::min({at(i - 1, j - 1) + (ref[i - 1] != hyp[j - 1]), at(i - 1, j) + 1, at(i, j - 1) + 1});

    EditCounts c;
    c.reference_length = n;
    std::size_t i = n, j = m;
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + (ref[i - 1] != hyp[j - 1])) {
            c.substitutions += ref[i - 1] != hyp[j - 1];
            --i;
            --j;
        } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
            ++c.deletions;
            --i;
        } else {
            ++c.insertions;
            --j;
        }
    }
    return c;
}

struct PhoneErrorRate {
    double per = 0.0;
    EditCounts counts;
};

inline PhoneErrorRate phone_error_rate(const std::vector<int>& hyp, const std::vector<int>& ref) {
    detail::require(!ref.empty(), "phone_error_rate: empty reference");
    const EditCounts c = align(hyp, ref);
    return {c.per(), c};
}

/// Corpus-level accumulation: total errors over total reference length.
class CorpusScorer {
public:
    void add_utterance(const std::vector<int>& hyp_phones, const std::vector<int>& ref_phones,
                       const std::vector<int>& predicted_frames, const std::vector<int>& reference_frames) {
        detail::require(!ref_phones.empty(), "phone_error_rate: empty reference");
        edits_ += align(hyp_phones, ref_phones);
        detail::require(predicted_frames.size() == reference_frames.size(),
                        "frame_accuracy: length mismatch");
        for (std::size_t i = 0; i < reference_frames.size(); ++i)
            frame_hits_ += predicted_frames[i] == reference_frames[i];
        frames_ += reference_frames.size();
    }

    const EditCounts& edits() const noexcept { return edits_; }
    double per() const { return edits_.per(); }
    double frame_accuracy() const {
        return frames_ == 0 ? 0.0 : static_cast<double>(frame_hits_) / static_cast<double>(frames_);
    }

private:
    EditCounts edits_;
    std::size_t frame_hits_ = 0;
    std::size_t frames_ = 0;
};

struct ScoreReport {
    std::string features;    ///< RAW or MFCC
    std::size_t conv_layers = 0;
    std::string classifier;  ///< SLP or MLP
    net::ParamCount params;  ///< weights-only
    double frame_accuracy = 0.0;
    double per = 0.0;
    EditCounts edits;
};

inline std::string format_text(const ScoreReport& r) {
    std::ostringstream os;
    os.precision(6);
    os << "features            " << r.features << "\n"
       << "conv layers         " << (r.conv_layers == 0 ? std::string("na") : std::to_string(r.conv_layers)) << "\n"
       << "conv params         " << (r.conv_layers == 0 ? std::string("na") : std::to_string(r.params.conv)) << "\n"
       << "classifier          " << r.classifier << "\n"
       << "classifier params   " << r.params.classifier << "\n"
       << "frame accuracy      " << r.frame_accuracy * 100.0 << " %\n"
       << "PER                 " << r.per * 100.0 << " %  (S=" << r.edits.substitutions
       << " D=" << r.edits.deletions << " I=" << r.edits.insertions << " N=" << r.edits.reference_length << ")\n";
    return os.str();
}

/// Machine-readable twin of format_text; keys mirror the results table.
inline std::string format_key_values(const ScoreReport& r) {
    std::ostringstream os;
    os.precision(10);
    os << "features = " << r.features << "\n"
       << "conv_layers = " << r.conv_layers << "\n"
       << "conv_params = " << r.params.conv << "\n"
       << "classifier = " << r.classifier << "\n"
       << "classifier_params = " << r.params.classifier << "\n"
       << "frame_accuracy = " << r.frame_accuracy << "\n"
       << "per = " << r.per << "\n"
       << "substitutions = " << r.edits.substitutions << "\n"
       << "deletions = " << r.edits.deletions << "\n"
       << "insertions = " << r.edits.insertions << "\n"
       << "reference_length = " << r.edits.reference_length << "\n";
    return os.str();
}

}  // namespace wavecnn::eval
