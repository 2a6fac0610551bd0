#include <gtest/gtest.h>

#include <random>

#include "wavecnn/net/train.hpp"

using namespace wavecnn;
using namespace wavecnn::net;

namespace {

NetworkConfig tiny_cnn() {
    NetworkConfig cfg;
    cfg.sample_rate = 1000;
    cfg.w_in_ms = 40;
    cfg.stages = {{5, 2, 4, 2, 2}, {3, 1, 3, 2, 1}};
    cfg.classifier = {ClassifierKind::slp, 0, 3};
    cfg.learning_rate = 0.01;
    cfg.max_epochs = 6;
    cfg.patience = 3;
    return cfg;
}

NetworkConfig vector_slp(int dim, int classes) {
    NetworkConfig cfg;
    cfg.input = InputKind::cepstral;
    cfg.cepstral_dim = dim;
    cfg.classifier = {ClassifierKind::slp, 0, classes};
    cfg.learning_rate = 0.05;
    cfg.max_epochs = 30;
    cfg.patience = 30;
    return cfg;
}

ExampleSet random_set(const NetworkConfig& cfg, std::size_t n, std::mt19937_64& rng) {
    ExampleSet s{cfg.input_frames(), cfg.input_channels(), {}, {}};
    std::normal_distribution<double> g;
    std::vector<double> x(s.example_size());
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : x) v = g(rng);
        s.add(x, static_cast<int>(i % static_cast<std::size_t>(cfg.classifier.num_classes)));
    }
    return s;
}

/// Two Gaussian blobs at +-3 along a fixed direction, unit noise elsewhere
/// scaled down so the classes never overlap.
ExampleSet separable(std::size_t n, int dim, std::mt19937_64& rng) {
    ExampleSet s{1, static_cast<std::size_t>(dim), {}, {}};
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        for (auto& v : x) v = u(rng);
        x[0] += label == 0 ? 3.0 : -3.0;
        s.add(x, label);
    }
    return s;
}

}  // namespace

TEST(Sgd, ZeroLearningRateLeavesParametersUnchanged) {
    auto cfg = tiny_cnn();
    cfg.learning_rate = 0.0;
    std::mt19937_64 rng(1);
    const auto train = random_set(cfg, 20, rng), valid = random_set(cfg, 9, rng);
    const auto r = sgd_train(cfg, train, valid);
    EXPECT_EQ(r.params, init_parameters(cfg, derive_seed(cfg.seed, "init")));
    ASSERT_EQ(r.log.size(), static_cast<std::size_t>(cfg.patience + 1));
    for (const auto& e : r.log) EXPECT_EQ(e.valid_accuracy, r.log.front().valid_accuracy);
    EXPECT_EQ(r.best_epoch, 1);
}

TEST(Sgd, SingleExampleLikelihoodRisesMonotonically) {
    const auto cfg = tiny_cnn();
    std::mt19937_64 rng(2);
    const auto set = random_set(cfg, 1, rng);
    Parameters p = init_parameters(cfg, 3);
    SgdStepper stepper(cfg);
    double prev = stepper.step(p, set, 0);
    for (int i = 1; i < 100; ++i) {
        const double L = stepper.step(p, set, 0);
        EXPECT_GE(L, prev) << "step " << i;
        prev = L;
    }
    EXPECT_GT(prev, std::log(1.0 / 3.0));
}

TEST(Sgd, SeparableTwoClassReachesFullAccuracy) {
    const auto cfg = vector_slp(10, 2);
    std::mt19937_64 rng(3);
    const auto train = separable(200, 10, rng), valid = separable(50, 10, rng);
    const auto r = sgd_train(cfg, train, valid);
    EXPECT_EQ(r.best_valid_accuracy, 1.0);
    EXPECT_EQ(frame_accuracy_on(cfg, r.params, valid), 1.0);
}

TEST(Sgd, DeterministicGivenSeed) {
    const auto cfg = tiny_cnn();
    std::mt19937_64 rng(4);
    const auto train = random_set(cfg, 30, rng), valid = random_set(cfg, 9, rng);
    const auto a = sgd_train(cfg, train, valid), b = sgd_train(cfg, train, valid);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.log, b.log);
    auto other = cfg;
    other.seed = 2;
    EXPECT_NE(sgd_train(other, train, valid).params, a.params);
}

TEST(Sgd, ReturnsBestEpochParametersAndStopsOnPatience) {
    auto cfg = vector_slp(10, 2);
    cfg.max_epochs = 40;
    cfg.patience = 2;
    std::mt19937_64 rng(5);
    const auto train = separable(40, 10, rng), valid = separable(20, 10, rng);
    const auto r = sgd_train(cfg, train, valid);
    ASSERT_FALSE(r.log.empty());
    EXPECT_LE(r.log.size(), static_cast<std::size_t>(r.best_epoch + cfg.patience));
    EXPECT_EQ(frame_accuracy_on(cfg, r.params, valid), r.best_valid_accuracy);
    for (const auto& e : r.log) EXPECT_LE(e.valid_accuracy, r.best_valid_accuracy);
}

TEST(Sgd, DivergenceReportsEpochAndExample) {
    auto cfg = vector_slp(4, 2);
    cfg.learning_rate = 1e300;
    std::mt19937_64 rng(6);
    ExampleSet train{1, 4, {}, {}};
    for (int i = 0; i < 10; ++i) train.add(std::vector<double>{1e10, -1e10, 1e10, 5.0}, i % 2);
    try {
        sgd_train(cfg, train, train);
        FAIL() << "expected TrainingError";
    } catch (const TrainingError& e) {
        EXPECT_EQ(e.epoch(), 1);
        EXPECT_LT(e.example(), 10u);
    }
}

TEST(Sgd, RejectsEmptyAndMismatchedSets) {
    const auto cfg = tiny_cnn();
    std::mt19937_64 rng(7);
    const auto good = random_set(cfg, 5, rng);
    ExampleSet empty{cfg.input_frames(), 1, {}, {}};
    EXPECT_THROW(sgd_train(cfg, empty, good), StructuralError);
    EXPECT_THROW(sgd_train(cfg, good, empty), StructuralError);
    ExampleSet wrong{3, 1, {}, {}};
    wrong.add(std::vector<double>{1, 2, 3}, 0);
    EXPECT_THROW(sgd_train(cfg, good, wrong), StructuralError);
}

TEST(Sgd, EpochLogFormat) {
    EXPECT_EQ(format_epoch({3, -0.5, 0.75}), "epoch 3 train_L -0.5 valid_acc 0.75");
}
