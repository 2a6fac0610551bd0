#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "wavecnn/signal.hpp"

using namespace wavecnn;
using namespace wavecnn::signal;

namespace {

SampleStream ramp(std::size_t n, int rate = 16000) {
    SampleStream s;
    s.rate = rate;
    s.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.samples[i] = static_cast<float>(i);
    return s;
}

FrameLabeling labels(std::size_t n, int k = 3) {
    FrameLabeling l;
    l.num_classes = k;
    for (std::size_t i = 0; i < n; ++i) l.labels.push_back(static_cast<int>(i % static_cast<std::size_t>(k)));
    return l;
}

std::pair<double, double> mean_std(const std::vector<double>& x) {
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double v = 0.0;
    for (double e : x) v += (e - m) * (e - m);
    return {m, std::sqrt(v / static_cast<double>(x.size()))};
}

}  // namespace

TEST(FrameStream, OneSecondAt16kHzWith310msWindows) {
    const auto windows = frame_stream(ramp(16000), labels(100), Millis(310), Millis(10));
    ASSERT_EQ(windows.size(), 100u);
    for (const auto& w : windows) EXPECT_EQ(w.samples.size(), 4960u);
}

TEST(FrameStream, WindowEqualToFrameGivesDisjointWindows) {
    const auto windows = frame_stream(ramp(320), labels(2), Millis(10), Millis(10));
    ASSERT_EQ(windows.size(), 2u);
    for (std::size_t t = 0; t < 2; ++t) {
        ASSERT_EQ(windows[t].samples.size(), 160u);
        for (std::size_t i = 0; i < 160; ++i) EXPECT_EQ(windows[t].samples[i], static_cast<double>(t * 160 + i));
        EXPECT_EQ(windows[t].label, static_cast<int>(t));
        EXPECT_EQ(windows[t].center_time, t * 160 + 80);
    }
}

TEST(FrameStream, LabelingLengthMismatchIsStructuralError) {
    EXPECT_THROW(frame_stream(ramp(1600), labels(9), Millis(30), Millis(10)), StructuralError);
    EXPECT_THROW(frame_stream(ramp(1600), labels(11), Millis(30), Millis(10)), StructuralError);
}

TEST(FrameStream, FractionalWindowIsStructuralError) {
    // 10 ms at 4410 Hz is 44.1 samples.
    auto s = ramp(4410, 4410);
    EXPECT_THROW(frame_stream(s, labels(1), Millis(10), Millis(10)), StructuralError);
}

TEST(FrameStream, WindowShorterThanShiftRejected) {
    EXPECT_THROW(frame_stream(ramp(1600), labels(10), Millis(5), Millis(10)), StructuralError);
}

TEST(FrameStream, EdgeFramesReplicateBoundarySamples) {
    const auto windows = frame_stream(ramp(480), labels(3), Millis(50), Millis(10));
    ASSERT_EQ(windows.size(), 3u);
    // First window: center 80, starts at 80 - 400 = -320.
    for (std::size_t i = 0; i < 320; ++i) EXPECT_EQ(windows[0].samples[i], 0.0);
    EXPECT_EQ(windows[0].samples[320], 0.0);
    EXPECT_EQ(windows[0].samples[321], 1.0);
    EXPECT_EQ(windows[2].samples.back(), 479.0);
}

TEST(FrameStream, ShiftEquivariance) {
    std::mt19937 rng(3);
    std::normal_distribution<float> g;
    SampleStream s;
    s.rate = 8000;
    for (int i = 0; i < 80 * 30; ++i) s.samples.push_back(g(rng));
    auto l = labels(30, 4);

    SampleStream delayed = s;
    delayed.samples.insert(delayed.samples.begin(), 80, 0.0f);
    FrameLabeling dl = l;
    dl.labels.insert(dl.labels.begin(), 1);

    const auto a = frame_stream(s, l, Millis(70), Millis(10));
    const auto b = frame_stream(delayed, dl, Millis(70), Millis(10));
    ASSERT_EQ(b.size(), a.size() + 1);
    // Interior frames: full context inside the stream in both cases.
    for (std::size_t t = 4; t + 4 < a.size(); ++t) {
        EXPECT_EQ(b[t + 1].center_time, a[t].center_time + 80);
        EXPECT_EQ(b[t + 1].samples, a[t].samples);
        EXPECT_EQ(b[t + 1].label, a[t].label);
    }
}

TEST(FrameStream, WindowCountEqualsLabelCount) {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t frames = 1 + rng() % 40;
        const int w_in = 10 * static_cast<int>(1 + rng() % 30);
        const auto windows = frame_stream(ramp(frames * 80 + rng() % 80, 8000), labels(frames), Millis(w_in), Millis(10));
        EXPECT_EQ(windows.size(), frames);
    }
}

TEST(NormalizeWindow, AlreadyNormalized) {
    const auto w = normalize_window({{1.0, -1.0}, 0, 0});
    EXPECT_DOUBLE_EQ(w.samples[0], 1.0);
    EXPECT_DOUBLE_EQ(w.samples[1], -1.0);
}

TEST(NormalizeWindow, ConstantWindowBecomesZeros) {
    const auto w = normalize_window({{5.0, 5.0, 5.0, 5.0}, 0, 0});
    for (double v : w.samples) EXPECT_EQ(v, 0.0);
}

TEST(NormalizeWindow, PopulationStdConvention) {
    const auto w = normalize_window({{0.0, 2.0}, 0, 0});
    EXPECT_DOUBLE_EQ(w.samples[0], -1.0);
    EXPECT_DOUBLE_EQ(w.samples[1], 1.0);
}

TEST(NormalizeWindow, ZeroMeanUnitVarianceProperty) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    for (int trial = 0; trial < 200; ++trial) {
        RawWindow w;
        const double offset = u(rng), scale = std::abs(u(rng)) + 1e-3;
        for (std::size_t i = 0; i < 2 + rng() % 500; ++i) w.samples.push_back(offset + scale * u(rng));
        const auto [m, sd] = mean_std(normalize_window(w).samples);
        EXPECT_LT(std::abs(m), 1e-6);
        EXPECT_LT(std::abs(sd - 1.0), 1e-6);
    }
}
