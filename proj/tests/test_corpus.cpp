#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>

#include "wavecnn/corpus.hpp"

using namespace wavecnn;
using namespace wavecnn::corpus;

namespace {

GenerationSpec small_spec(int utts, std::uint64_t seed = 3) {
    GenerationSpec s;
    s.num_utts = utts;
    s.rate = 4000;
    s.seed = seed;
    return s;
}

std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("wavecnn_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

/// Unit-norm magnitude spectrum of one frame by direct DFT.
std::vector<double> frame_spectrum(const std::vector<float>& x, std::size_t start, std::size_t n) {
    std::vector<double> mag(n / 2 + 1);
    double norm = 0.0;
    for (std::size_t k = 0; k < mag.size(); ++k) {
        std::complex<double> acc;
        for (std::size_t i = 0; i < n; ++i)
            acc += static_cast<double>(x[start + i]) * std::polar(1.0, -2.0 * std::numbers::pi * k * i / n);
        mag[k] = std::abs(acc);
        norm += mag[k] * mag[k];
    }
    for (double& m : mag) m /= std::sqrt(norm) + 1e-12;
    return mag;
}

/// Frame accuracy of a nearest-centroid classifier trained on the train
/// split and scored on the rest.
double nearest_centroid_accuracy(const Corpus& c) {
    const std::size_t hop = static_cast<std::size_t>(c.utterances[0].stream.rate / 100);
    std::vector<std::vector<double>> centroid(static_cast<std::size_t>(c.num_classes));
    std::vector<double> count(centroid.size(), 0.0);
    for (const auto* u : c.split("train")) {
        for (std::size_t t = 0; t < u->labeling.labels.size(); ++t) {
            const auto f = frame_spectrum(u->stream.samples, t * hop, hop);
            auto& cen = centroid[static_cast<std::size_t>(u->labeling.labels[t])];
            cen.resize(f.size(), 0.0);
            for (std::size_t i = 0; i < f.size(); ++i) cen[i] += f[i];
            count[static_cast<std::size_t>(u->labeling.labels[t])] += 1.0;
        }
    }
    for (std::size_t k = 0; k < centroid.size(); ++k)
        for (double& v : centroid[k]) v /= count[k];
    std::size_t hits = 0, total = 0;
    for (const char* split : {"valid", "test"}) {
        for (const auto* u : c.split(split)) {
            for (std::size_t t = 0; t < u->labeling.labels.size(); ++t) {
                const auto f = frame_spectrum(u->stream.samples, t * hop, hop);
                std::size_t best = 0;
                double best_d = 1e300;
                for (std::size_t k = 0; k < centroid.size(); ++k) {
                    double d = 0.0;
                    for (std::size_t i = 0; i < f.size(); ++i) d += (f[i] - centroid[k][i]) * (f[i] - centroid[k][i]);
                    if (d < best_d) best_d = d, best = k;
                }
                hits += static_cast<int>(best) == u->labeling.labels[t];
                ++total;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

TEST(Generate, SingleNoiselessClassIsAPureTone) {
    SyntheticPhoneModel tone;
    tone.partials = {{500.0, 1.0}};
    const auto c = generate_corpus({tone}, small_spec(4));
    for (const auto& u : c.utterances) {
        for (int l : u.labeling.labels) EXPECT_EQ(l, 0);
        EXPECT_EQ(u.reference.phones, std::vector<int>{0});
        ASSERT_EQ(u.stream.samples.size(), u.labeling.labels.size() * 40);
        // A single sinusoid satisfies x[n+1] + x[n-1] = 2 cos(w) x[n].
        const double c2 = 2.0 * std::cos(2.0 * std::numbers::pi * 500.0 / 4000.0);
        for (std::size_t n = 1; n + 1 < u.stream.samples.size(); ++n)
            EXPECT_NEAR(u.stream.samples[n + 1] + u.stream.samples[n - 1], c2 * u.stream.samples[n], 1e-5);
    }
}

TEST(Generate, SameSeedIsBitIdentical) {
    const auto models = default_phone_models(5, 4000, 0.3);
    const auto a = generate_corpus(models, small_spec(20, 9));
    const auto b = generate_corpus(models, small_spec(20, 9));
    EXPECT_EQ(a.utterances, b.utterances);
    EXPECT_EQ(a.splits, b.splits);
    EXPECT_NE(generate_corpus(models, small_spec(20, 10)).utterances, a.utterances);
}

TEST(Generate, ClassPriorsNearStationaryDistribution) {
    std::vector<SyntheticPhoneModel> models = default_phone_models(5, 4000, 0.1);
    for (std::size_t k = 0; k < models.size(); ++k) {
        models[k].min_frames = 3 + static_cast<int>(k);
        models[k].max_frames = 6 + 2 * static_cast<int>(k);
    }
    const auto c = generate_corpus(models, small_spec(200));
    std::vector<double> freq(5, 0.0);
    double total = 0.0;
    for (const auto& u : c.utterances)
        for (int l : u.labeling.labels) freq[static_cast<std::size_t>(l)] += 1.0, total += 1.0;
    // Independent stationary share: phones visited uniformly, so the frame
    // share of class k is proportional to its mean duration.
    double mean_sum = 0.0;
    for (const auto& m : models) mean_sum += 0.5 * (m.min_frames + m.max_frames);
    for (std::size_t k = 0; k < 5; ++k) {
        const double expected = 0.5 * (models[k].min_frames + models[k].max_frames) / mean_sum;
        EXPECT_NEAR(freq[k] / total, expected, 0.2 * expected) << "class " << k;
        EXPECT_NEAR(stationary_frame_distribution(models)[k], expected, 1e-12);
    }
}

TEST(Generate, LabelsCollapseToReferenceAndNoImmediateRepeats) {
    const auto c = generate_corpus(default_phone_models(4, 4000, 0.2), small_spec(30));
    for (const auto& u : c.utterances) {
        EXPECT_EQ(decoder::collapse_labels(u.labeling.labels), u.reference);
        EXPECT_EQ(u.stream.samples.size(), u.labeling.labels.size() * 40);
        EXPECT_GE(u.labeling.labels.size(), 30u);
    }
}

TEST(Generate, SplitIsEightyTenTen) {
    const auto c = generate_corpus(default_phone_models(3, 4000, 0.0), small_spec(50));
    EXPECT_EQ(c.splits.train.size(), 40u);
    EXPECT_EQ(c.splits.valid.size(), 5u);
    EXPECT_EQ(c.splits.test.size(), 5u);
}

TEST(Generate, UnsatisfiableConstraintsAreStructuralErrors) {
    auto models = default_phone_models(3, 4000, 0.0);
    models[1].min_frames = 2;
    EXPECT_THROW(generate_corpus(models, small_spec(10)), StructuralError);
    models = default_phone_models(3, 4000, 0.0);
    models[2].min_frames = 9;
    models[2].max_frames = 4;
    EXPECT_THROW(generate_corpus(models, small_spec(10)), StructuralError);
    models = default_phone_models(3, 4000, 0.0);
    models[0].partials[0].frequency = 2500.0;
    EXPECT_THROW(generate_corpus(models, small_spec(10)), StructuralError);
    auto spec = small_spec(10);
    spec.min_utt_frames = 50;
    spec.max_utt_frames = 40;
    EXPECT_THROW(generate_corpus(default_phone_models(3, 4000, 0.0), spec), StructuralError);
}

TEST(Generate, NoiseMonotonicallyReducesNearestCentroidAccuracy) {
    double prev = 2.0;
    for (double noise : {0.0, 1.0, 3.0}) {
        const double acc = nearest_centroid_accuracy(generate_corpus(default_phone_models(5, 4000, noise), small_spec(40)));
        if (noise == 0.0) {
            EXPECT_GT(acc, 0.95);
        }
        EXPECT_LT(acc, prev) << "noise " << noise;
        prev = acc;
    }
}

TEST(Dataset, RoundTripIsBitExact) {
    const auto c = generate_corpus(default_phone_models(5, 4000, 0.5), small_spec(12));
    const Dataset ds{c.num_classes, c.utterances};
    io::Reader r(encode_dataset(ds).buffer());
    EXPECT_EQ(decode_dataset(r), ds);
}

TEST(Dataset, EmptyDatasetRoundTrips) {
    const Dataset empty{7, {}};
    io::Reader r(encode_dataset(empty).buffer());
    EXPECT_EQ(decode_dataset(r), empty);
}

TEST(Dataset, TruncationIsReadErrorAtEveryCut) {
    const auto c = generate_corpus(default_phone_models(2, 4000, 0.0), small_spec(2));
    const auto bytes = encode_dataset(Dataset{c.num_classes, c.utterances}).buffer();
    for (std::size_t cut = 0; cut < bytes.size(); cut += 97) {
        io::Reader r(std::vector<char>(bytes.begin(), bytes.begin() + static_cast<long>(cut)));
        EXPECT_THROW(decode_dataset(r), ReadError) << "cut at " << cut;
    }
}

TEST(Dataset, VersionMismatchIsVersionError) {
    auto bytes = encode_dataset(Dataset{2, {}}).buffer();
    bytes[8] = 2;
    io::Reader r(bytes);
    EXPECT_THROW(decode_dataset(r), VersionError);
}

TEST(CorpusDir, SaveAndLoad) {
    const auto dir = temp_dir("corpus");
    const auto c = generate_corpus(default_phone_models(3, 4000, 0.1), small_spec(10));
    save_corpus(dir.string(), c);
    const auto back = load_corpus(dir.string());
    EXPECT_EQ(back.utterances, c.utterances);
    EXPECT_EQ(back.splits, c.splits);
    EXPECT_EQ(back.split("valid").front()->id, c.splits.valid.front());
    std::filesystem::remove_all(dir);
}

TEST(Manifest, RejectsDuplicatesAndEmptySplits) {
    std::istringstream dup("train = a b\nvalid = a\n");
    EXPECT_THROW(parse_manifest(dup), StructuralError);
    std::istringstream no_valid("train = a b\nvalid =\n");
    EXPECT_THROW(parse_manifest(no_valid), StructuralError);
}

TEST(BeatModels, PairsBeatAtDistinctRatesBelowNyquist) {
    const auto models = beat_phone_models(5, 4000, 0.5);
    ASSERT_EQ(models.size(), 5u);
    for (std::size_t k = 0; k < models.size(); ++k) {
        ASSERT_EQ(models[k].partials.size(), 2u);
        EXPECT_EQ(models[k].partials[0].frequency, 1000.0);
        EXPECT_EQ(models[k].partials[1].frequency - models[k].partials[0].frequency, 20.0 * (k + 1));
        EXPECT_EQ(models[k].noise, 0.5);
    }
    EXPECT_NO_THROW(generate_corpus(models, small_spec(4)));
}
