// wavecnn/corpus.hpp
//
// Synthetic frame-labeled corpus. Each phone class is a recipe of sinusoidal
// partials plus white noise; an utterance is a random phone sequence (no
// immediate repeats) with per-class uniform segment durations, rendered
// segment by segment with a fresh random phase and gain per segment.
//
// Dataset file layout (little-endian):
//
//   "WCNNDATA" | u32 version | u64 record count | u32 num_classes |
//   per record: u32 id length | id bytes | u32 rate | u64 sample count |
//               f32 samples | u64 frame count | u16 labels |
//               u64 segment count | per segment: u16 phone | u64 start frame

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wavecnn/binary_io.hpp"
#include "wavecnn/decoder.hpp"
#include "wavecnn/error.hpp"
#include "wavecnn/random.hpp"
#include "wavecnn/signal.hpp"

namespace wavecnn::corpus {

struct Partial {
    double frequency = 0.0;  ///< Hz
    double amplitude = 1.0;
};

struct SyntheticPhoneModel {
    std::vector<Partial> partials;
    double noise = 0.0;           ///< white-noise standard deviation
    double freq_jitter = 0.0;     ///< relative per-segment frequency jitter
    int min_frames = 3;
    int max_frames = 8;
};

struct Utterance {
    std::string id;
    signal::SampleStream stream;
    signal::FrameLabeling labeling;
    decoder::PhoneSequence reference;

    bool operator==(const Utterance&) const = default;
};

struct SplitManifest {
    std::vector<std::string> train;
    std::vector<std::string> valid;
    std::vector<std::string> test;

    bool operator==(const SplitManifest&) const = default;
};

struct Corpus {
    int num_classes = 0;
    std::vector<Utterance> utterances;
    SplitManifest splits;

    /// Utterances of one split, in manifest order.
    std::vector<const Utterance*> split(std::string_view name) const {
        const auto& ids = name == "train" ? splits.train : name == "valid" ? splits.valid : splits.test;
        detail::require(name == "train" || name == "valid" || name == "test",
                        "unknown split '" + std::string(name) + "'");
        std::vector<const Utterance*> out;
        for (const auto& id : ids) {
            auto it = std::find_if(utterances.begin(), utterances.end(),
                                   [&id](const Utterance& u) { return u.id == id; });
            detail::require(it != utterances.end(), "split lists unknown utterance '" + id + "'");
            out.push_back(&*it);
        }
        return out;
    }
};

struct GenerationSpec {
    int num_utts = 200;
    int min_utt_frames = 30;
    int max_utt_frames = 60;
    int rate = signal::kCanonicalRate;
    int frame_ms = 10;
    std::uint64_t seed = 1;
};

/// Deterministic per-class recipes: class k gets a fundamental on an evenly
/// spaced grid in [0.05, 0.35] * rate plus two weaker partials, all below
/// Nyquist and distinct across classes.
inline std::vector<SyntheticPhoneModel> default_phone_models(int num_classes, int rate, double noise,
                                                             int min_frames = 3, int max_frames = 8) {
    detail::require(num_classes >= 1, "default_phone_models: need at least one class");
    std::vector<SyntheticPhoneModel> models;
    const double lo = 0.05 * rate, hi = 0.35 * rate;
    for (int k = 0; k < num_classes; ++k) {
        const double f0 = num_classes == 1 ? lo : lo + (hi - lo) * k / (num_classes - 1);
        SyntheticPhoneModel m;
        // Overtones above 0.45 * rate are reflected back below it.
        const double cap = 0.45 * rate;
        auto fold = [cap](double f) { return f <= cap ? f : 2.0 * cap - f; };
        m.partials = {{f0, 1.0}, {fold(f0 * 1.5), 0.5}, {fold(f0 * 2.0), 0.25}};
        m.noise = noise;
        m.min_frames = min_frames;
        m.max_frames = max_frames;
        models.push_back(m);
    }
    return models;
}

/// Classes told apart only by temporal structure: class k is two equal
/// partials at 0.25 * rate and 0.25 * rate + 20 (k + 1) Hz, which beat at
/// 20 (k + 1) Hz. Short first-stage kernels cannot resolve the pair, so the
/// beat rate has to be read off the envelope by later stages.
inline std::vector<SyntheticPhoneModel> beat_phone_models(int num_classes, int rate, double noise,
                                                          int min_frames = 3, int max_frames = 8) {
    detail::require(num_classes >= 1, "beat_phone_models: need at least one class");
    std::vector<SyntheticPhoneModel> models;
    const double carrier = 0.25 * rate;
    for (int k = 0; k < num_classes; ++k) {
        SyntheticPhoneModel m;
        m.partials = {{carrier, 1.0}, {carrier + 20.0 * (k + 1), 1.0}};
        m.noise = noise;
        m.min_frames = min_frames;
        m.max_frames = max_frames;
        models.push_back(m);
    }
    return models;
}

namespace corpus_detail {

inline void validate_models(const std::vector<SyntheticPhoneModel>& models, int rate) {
    detail::require(!models.empty(), "generate_corpus: no phone models");
    for (std::size_t k = 0; k < models.size(); ++k) {
        const auto& m = models[k];
        const std::string who = "generate_corpus: class " + std::to_string(k);
        detail::require(m.min_frames >= 3, who + ": min duration below the 3-frame decodable minimum");
        detail::require(m.min_frames <= m.max_frames, who + ": min duration exceeds max duration");
        detail::require(m.noise >= 0.0 && m.freq_jitter >= 0.0, who + ": negative noise or jitter");
        for (const auto& p : m.partials)
            detail::require(p.frequency > 0.0 && p.frequency * (1.0 + m.freq_jitter) < rate / 2.0,
                            who + ": partial at " + std::to_string(p.frequency) + " Hz not below Nyquist");
    }
}

inline std::string utterance_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "utt%05zu", index);
    return buf;
}

inline Utterance render_utterance(const std::vector<SyntheticPhoneModel>& models, const GenerationSpec& spec,
                                  std::size_t index, std::uint64_t seed) {
    Rng rng(seed);
    const int K = static_cast<int>(models.size());
    std::uniform_int_distribution<int> target_dist(spec.min_utt_frames, spec.max_utt_frames);
    const int target = target_dist(rng);

    // Phone sequence and durations.
    std::vector<std::pair<int, int>> segments;  // (phone, frames)
    int total = 0;
    int prev = -1;
    while (total < target) {
        int phone;
        if (prev < 0 || K == 1) {
            phone = std::uniform_int_distribution<int>(0, K - 1)(rng);
        } else {
            phone = std::uniform_int_distribution<int>(0, K - 2)(rng);
            if (phone >= prev) ++phone;
        }
        const auto& m = models[static_cast<std::size_t>(phone)];
        const int frames = std::uniform_int_distribution<int>(m.min_frames, m.max_frames)(rng);
        if (!segments.empty() && segments.back().first == phone)
            segments.back().second += frames;  // only reachable with one class
        else
            segments.emplace_back(phone, frames);
        total += frames;
        prev = phone;
    }

    const std::size_t hop = signal::samples_in(signal::Millis(spec.frame_ms), spec.rate);
    Utterance u;
    u.id = utterance_id(index);
    u.stream.rate = spec.rate;
    u.stream.samples.reserve(static_cast<std::size_t>(total) * hop);
    u.labeling.num_classes = K;
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> gain_dist(0.5, 1.5);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (const auto& [phone, frames] : segments) {
        const auto& m = models[static_cast<std::size_t>(phone)];
        u.reference.phones.push_back(phone);
        u.reference.boundaries.push_back(u.labeling.labels.size());
        std::vector<double> freq, amp, phase;
        const double gain = gain_dist(rng);
        for (const auto& p : m.partials) {
            freq.push_back(p.frequency * (1.0 + m.freq_jitter * unit(rng)));
            amp.push_back(p.amplitude * gain);
            phase.push_back(phase_dist(rng));
        }
        const std::size_t n = static_cast<std::size_t>(frames) * hop;
        for (std::size_t i = 0; i < n; ++i) {
            double v = 0.0;
            for (std::size_t j = 0; j < freq.size(); ++j)
                v += amp[j] * std::sin(2.0 * std::numbers::pi * freq[j] * static_cast<double>(i) / spec.rate + phase[j]);
            if (m.noise > 0.0) v += m.noise * gauss(rng);
            u.stream.samples.push_back(static_cast<float>(v));
        }
        u.labeling.labels.insert(u.labeling.labels.end(), static_cast<std::size_t>(frames), phone);
    }
    return u;
}

}  // namespace corpus_detail

/// 80/10/10 split by utterance index (at least one validation utterance).
inline SplitManifest split_ids(const std::vector<Utterance>& utts) {
    const std::size_t n = utts.size();
    const std::size_t n_valid = std::max<std::size_t>(1, n / 10);
    const std::size_t n_test = n / 10;
    detail::require(n >= n_valid + n_test + 1, "generate_corpus: need at least 2 utterances");
    const std::size_t n_train = n - n_valid - n_test;
    SplitManifest s;
    for (std::size_t i = 0; i < n; ++i)
        (i < n_train ? s.train : i < n_train + n_valid ? s.valid : s.test).push_back(utts[i].id);
    return s;
}

inline Corpus generate_corpus(const std::vector<SyntheticPhoneModel>& models, const GenerationSpec& spec) {
    corpus_detail::validate_models(models, spec.rate);
    detail::require(spec.num_utts >= 2, "generate_corpus: need at least 2 utterances");
    detail::require(spec.min_utt_frames >= 3 && spec.min_utt_frames <= spec.max_utt_frames,
                    "generate_corpus: utterance length range [" + std::to_string(spec.min_utt_frames) + ", " +
                        std::to_string(spec.max_utt_frames) + "] is unsatisfiable");
    Corpus c;
    c.num_classes = static_cast<int>(models.size());
    for (int i = 0; i < spec.num_utts; ++i)
        c.utterances.push_back(corpus_detail::render_utterance(
            models, spec, static_cast<std::size_t>(i), derive_seed(spec.seed, static_cast<std::uint64_t>(i))));
    c.splits = split_ids(c.utterances);
    return c;
}

/// Expected share of frames per class under the sequence sampler: phones
/// are visited uniformly in the long run, so frame share is proportional to
/// mean segment duration.
inline std::vector<double> stationary_frame_distribution(const std::vector<SyntheticPhoneModel>& models) {
    std::vector<double> share;
    double total = 0.0;
    for (const auto& m : models) {
        share.push_back(0.5 * (m.min_frames + m.max_frames));
        total += share.back();
    }
    for (double& s : share) s /= total;
    return share;
}

// ------------------------------------------------------------------ persistence

inline constexpr std::string_view kDatasetMagic = "WCNNDATA";
inline constexpr std::uint32_t kDatasetVersion = 1;

struct Dataset {
    int num_classes = 0;
    std::vector<Utterance> utterances;
    bool operator==(const Dataset&) const = default;
};

inline io::Writer encode_dataset(const Dataset& ds) {
    io::Writer w;
    w.put_bytes(kDatasetMagic);
    w.put(kDatasetVersion);
    w.put(static_cast<std::uint64_t>(ds.utterances.size()));
    w.put(static_cast<std::uint32_t>(ds.num_classes));
    for (const auto& u : ds.utterances) {
        w.put_string(u.id);
        w.put(static_cast<std::uint32_t>(u.stream.rate));
        w.put(static_cast<std::uint64_t>(u.stream.samples.size()));
        w.put_array<float>(u.stream.samples);
        w.put(static_cast<std::uint64_t>(u.labeling.labels.size()));
        for (int l : u.labeling.labels) w.put(static_cast<std::uint16_t>(l));
        w.put(static_cast<std::uint64_t>(u.reference.phones.size()));
        for (std::size_t i = 0; i < u.reference.phones.size(); ++i) {
            w.put(static_cast<std::uint16_t>(u.reference.phones[i]));
            w.put(static_cast<std::uint64_t>(u.reference.boundaries[i]));
        }
    }
    return w;
}

inline Dataset decode_dataset(io::Reader& r) {
    if (r.remaining() < kDatasetMagic.size() || r.get_bytes(kDatasetMagic.size()) != kDatasetMagic)
        throw ReadError("bad dataset magic", 0);
    if (auto v = r.get<std::uint32_t>(); v != kDatasetVersion) throw VersionError(v, kDatasetVersion);
    const auto count = r.get<std::uint64_t>();
    Dataset ds;
    ds.num_classes = static_cast<int>(r.get<std::uint32_t>());
    for (std::uint64_t i = 0; i < count; ++i) {
        Utterance u;
        u.id = r.get_string();
        u.stream.rate = static_cast<int>(r.get<std::uint32_t>());
        u.stream.samples = r.get_array<float>(r.get<std::uint64_t>());
        const auto frames = r.get<std::uint64_t>();
        if (frames > r.remaining() / sizeof(std::uint16_t)) r.fail("label count exceeds remaining input");
        u.labeling.num_classes = ds.num_classes;
        u.labeling.labels.reserve(frames);
        for (std::uint64_t t = 0; t < frames; ++t) {
            const auto l = r.get<std::uint16_t>();
            if (l >= ds.num_classes) r.fail("label " + std::to_string(l) + " out of range");
            u.labeling.labels.push_back(l);
        }
        const auto segs = r.get<std::uint64_t>();
        if (segs > r.remaining() / 10) r.fail("segment count exceeds remaining input");
        for (std::uint64_t s = 0; s < segs; ++s) {
            u.reference.phones.push_back(r.get<std::uint16_t>());
            u.reference.boundaries.push_back(r.get<std::uint64_t>());
        }
        ds.utterances.push_back(std::move(u));
    }
    if (!r.at_end()) r.fail("trailing bytes after dataset");
    return ds;
}

inline void save_dataset(const std::string& path, const Dataset& ds) { encode_dataset(ds).write_file(path); }

inline Dataset load_dataset(const std::string& path) {
    auto r = io::Reader::from_file(path);
    return decode_dataset(r);
}

/// Text manifest: three lines `train = id ...`, `valid = ...`, `test = ...`.
inline std::string format_manifest(const SplitManifest& m) {
    std::ostringstream os;
    auto line = [&os](const char* name, const std::vector<std::string>& ids) {
        os << name << " =";
        for (const auto& id : ids) os << ' ' << id;
        os << '\n';
    };
    line("train", m.train);
    line("valid", m.valid);
    line("test", m.test);
    return os.str();
}

inline SplitManifest parse_manifest(std::istream& in) {
    SplitManifest m;
    std::string line;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string name, eq, id;
        if (!(ls >> name)) continue;
        ls >> eq;
        detail::require(eq == "=" && (name == "train" || name == "valid" || name == "test"),
                        "manifest: malformed line '" + line + "'");
        auto& dst = name == "train" ? m.train : name == "valid" ? m.valid : m.test;
        while (ls >> id) {
            detail::require(seen.insert(id).second, "manifest: utterance '" + id + "' listed twice");
            dst.push_back(id);
        }
    }
    detail::require(!m.train.empty() && !m.valid.empty(), "manifest: train and valid splits must be non-empty");
    return m;
}

inline constexpr const char* kCorpusFile = "corpus.bin";
inline constexpr const char* kManifestFile = "splits.txt";

/// Writes `dir/corpus.bin` and `dir/splits.txt`.
inline void save_corpus(const std::string& dir, const Corpus& c) {
    save_dataset(dir + "/" + kCorpusFile, Dataset{c.num_classes, c.utterances});
    std::ofstream out(dir + "/" + kManifestFile, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + dir + "/" + kManifestFile);
    out << format_manifest(c.splits);
}

inline Corpus load_corpus(const std::string& dir) {
    Dataset ds = load_dataset(dir + "/" + kCorpusFile);
    std::ifstream in(dir + "/" + kManifestFile);
    if (!in) throw std::runtime_error("cannot open " + dir + "/" + kManifestFile);
    Corpus c{ds.num_classes, std::move(ds.utterances), parse_manifest(in)};
    (void)c.split("train");
    (void)c.split("valid");
    (void)c.split("test");
    return c;
}

}  // namespace wavecnn::corpus
