#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "wavecnn/net/checkpoint.hpp"
#include "wavecnn/net/config.hpp"
#include "wavecnn/net/network.hpp"
#include "wavecnn/net/shape.hpp"

using namespace wavecnn;
using namespace wavecnn::net;

namespace {

NetworkConfig timit(int stages) {
    NetworkConfig cfg;
    cfg.w_in_ms = 310;
    cfg.stages.push_back({30, 10, 80, 3, 3});
    for (int i = 1; i < stages; ++i) cfg.stages.push_back({7, 1, 60, 3, 3});
    return cfg;
}

NetworkConfig mfcc(ClassifierKind kind) {
    NetworkConfig cfg;
    cfg.input = InputKind::cepstral;
    cfg.classifier.kind = kind;
    return cfg;
}

NetworkConfig tiny_mlp() {
    NetworkConfig cfg;
    cfg.sample_rate = 1000;
    cfg.w_in_ms = 40;
    cfg.stages = {{5, 2, 4, 2, 2}, {3, 1, 3, 2, 1}};
    cfg.classifier = {ClassifierKind::mlp, 6, 3};
    return cfg;
}

std::vector<double> random_input(const NetworkConfig& cfg, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    std::vector<double> x(cfg.input_frames() * cfg.input_channels());
    for (auto& v : x) v = g(rng);
    return x;
}

}  // namespace

TEST(ParamCount, TimitConvCounts) {
    EXPECT_EQ(param_count(timit(2)).weights_only.conv, 36000u);
    EXPECT_EQ(param_count(timit(3)).weights_only.conv, 61200u);
}

TEST(ParamCount, FourStageConvCountIs86400NotThe85kReported) {
    EXPECT_EQ(param_count(timit(4)).weights_only.conv, 86400u);
}

TEST(ParamCount, CepstralClassifierCounts) {
    EXPECT_EQ(param_count(mfcc(ClassifierKind::slp)).weights_only.classifier, 14040u);
    EXPECT_EQ(param_count(mfcc(ClassifierKind::mlp)).weights_only.classifier, 195500u);
}

TEST(ParamCount, WithBiasesAddsOnePerUnit) {
    const auto r = param_count(timit(2));
    EXPECT_EQ(r.with_biases.conv, 36000u + 80u + 60u);
    EXPECT_EQ(r.with_biases.classifier, r.weights_only.classifier + 40u);
    const auto m = param_count(mfcc(ClassifierKind::mlp));
    EXPECT_EQ(m.with_biases.classifier, 195500u + 500u + 40u);
}

TEST(ParamCount, ChosenStridesGiveClassifierSizes) {
    // With dW1 = 10 and pool stride = pool width, the SLP sizes come out at
    // 124,800 / 36,000 / 7,200 and the 3-stage MLP at 470,000.
    EXPECT_EQ(param_count(timit(2)).weights_only.classifier, 124800u);
    EXPECT_EQ(param_count(timit(3)).weights_only.classifier, 36000u);
    EXPECT_EQ(param_count(timit(4)).weights_only.classifier, 7200u);
    auto mlp = timit(3);
    mlp.classifier.kind = ClassifierKind::mlp;
    EXPECT_EQ(param_count(mlp).weights_only.classifier, 470000u);
}

TEST(ParamCount, MatchesAllocatedParameters) {
    for (const auto& cfg : {timit(2), timit(4), mfcc(ClassifierKind::mlp), tiny_mlp()}) {
        std::size_t n = 0;
        make_parameters(cfg).for_each_layer([&n](const Dense& d) { n += d.weights.size() + d.bias.size(); });
        EXPECT_EQ(n, param_count(cfg).with_biases.total());
    }
}

TEST(OutputShape, IdentityStagesLeaveDimsUnchanged) {
    NetworkConfig cfg;
    cfg.sample_rate = 1000;
    cfg.w_in_ms = 25;
    cfg.stages = {{1, 1, 1, 1, 1}};
    const auto s = output_shape(cfg);
    EXPECT_EQ(s.stages[0].conv_frames, 25u);
    EXPECT_EQ(s.stages[0].pool_frames, 25u);
    EXPECT_EQ(s.classifier_input, 25u);
}

TEST(OutputShape, InfeasibleStageIsNamed) {
    NetworkConfig cfg = timit(3);
    cfg.stages[2].kW = 100;
    try {
        output_shape(cfg);
        FAIL() << "expected StructuralError";
    } catch (const StructuralError& e) {
        EXPECT_NE(std::string(e.what()).find("stage 3"), std::string::npos) << e.what();
    }
}

TEST(OutputShape, MatchesForwardPassOnRandomConfigs) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const NetworkConfig cfg = gradcheck::draw_config(rng);
        const auto shape = output_shape(cfg);
        const Parameters p = init_parameters(cfg, 5);
        ForwardTrace trace;
        trace.input = Tensor2(cfg.input_frames(), 1, random_input(cfg, rng));
        const auto scores = network_forward(cfg, p, trace);
        EXPECT_EQ(scores.size(), 40u);
        for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
            EXPECT_EQ(trace.conv_out[i].frames(), shape.stages[i].conv_frames);
            EXPECT_EQ(trace.stage_out[i].frames(), shape.stages[i].pool_frames);
            EXPECT_EQ(trace.stage_out[i].channels(), shape.stages[i].channels);
        }
        EXPECT_EQ(trace.classifier_input().size(), shape.classifier_input);
    }
}

struct FixedOutputRow {
    int w_in_ms;
    std::vector<int> kW;
    int pool_kW;
};

TEST(StrideSearch, EveryFixedOutputRowAdmitsAnAssignmentReaching351) {
    const std::vector<FixedOutputRow> rows = {
        {310, {3}, 50}, {310, {3, 7}, 7}, {430, {3, 5, 5}, 4}, {510, {3, 5, 3, 3}, 3}, {310, {3, 5, 7, 7, 7}, 2}};
    for (const auto& row : rows) {
        NetworkConfig base;
        base.w_in_ms = row.w_in_ms;
        for (int k : row.kW) base.stages.push_back({k, 1, 39, row.pool_kW, row.pool_kW});
        const auto hits = find_stride_assignments(base, 351);
        EXPECT_FALSE(hits.empty()) << row.kW.size() << "-stage row";
        for (const auto& h : hits) EXPECT_EQ(output_shape(h).classifier_input, 351u);
    }
}

TEST(Network, CollapseCaseIsTanhOfLinearMap) {
    NetworkConfig cfg;
    cfg.sample_rate = 1000;
    cfg.w_in_ms = 8;
    cfg.stages = {{8, 1, 2, 1, 1}};
    cfg.classifier = {ClassifierKind::slp, 0, 2};
    std::mt19937_64 rng(12);
    const Parameters p = init_parameters(cfg, 3);
    const auto x = random_input(cfg, rng);
    const auto scores = network_forward(cfg, p, x);
    const Dense& M = p.conv[0];
    const Dense& C = p.classifier[0];
    for (std::size_t k = 0; k < 2; ++k) {
        double s = C.bias[k];
        for (std::size_t o = 0; o < 2; ++o) {
            double h = M.bias[o];
            for (std::size_t j = 0; j < 8; ++j) h += M.at(o, j) * x[j];
            s += C.at(k, o) * std::tanh(h);
        }
        EXPECT_NEAR(scores[k], s, 1e-12);
    }
}

TEST(Network, ScoresLengthIsNumClasses) {
    std::mt19937_64 rng(13);
    for (const auto& cfg : {tiny_mlp(), mfcc(ClassifierKind::slp), mfcc(ClassifierKind::mlp)}) {
        EXPECT_EQ(network_forward(cfg, init_parameters(cfg, 1), random_input(cfg, rng)).size(),
                  static_cast<std::size_t>(cfg.classifier.num_classes));
    }
}

TEST(Network, WrongInputShapeIsStructuralError) {
    const auto cfg = tiny_mlp();
    EXPECT_THROW(network_forward(cfg, init_parameters(cfg, 1), std::vector<double>(39)), StructuralError);
}

TEST(Network, PosteriorRowsSumToOne) {
    std::mt19937_64 rng(14);
    const auto cfg = tiny_mlp();
    std::vector<std::vector<double>> inputs;
    for (int i = 0; i < 10; ++i) inputs.push_back(random_input(cfg, rng));
    const Tensor2 post = posteriors(cfg, init_parameters(cfg, 2), inputs);
    for (std::size_t t = 0; t < 10; ++t) {
        double sum = 0.0;
        for (double p : post.row(t)) {
            EXPECT_GT(p, 0.0);
            EXPECT_LT(p, 1.0);
            sum += p;
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }
}

TEST(Network, BackwardMatchesFiniteDifferencesOfLikelihood) {
    for (auto kind : {ClassifierKind::slp, ClassifierKind::mlp}) {
        NetworkConfig cfg = tiny_mlp();
        cfg.classifier.kind = kind;
        std::mt19937_64 rng(15);
        Parameters p = init_parameters(cfg, 4);
        ForwardTrace trace;
        trace.input = Tensor2(cfg.input_frames(), 1, random_input(cfg, rng));
        const int label = 1;
        const auto lg = nll_value_and_grad(network_forward(cfg, p, trace), label);
        const auto base_argmax = trace.argmax;
        Parameters grads = make_parameters(cfg);
        BackwardScratch scratch;
        network_backward(cfg, p, trace, lg.grad, grads, scratch);

        std::vector<double*> values, analytic;
        p.for_each_layer([&values](Dense& d) {
            for (auto& w : d.weights) values.push_back(&w);
            for (auto& b : d.bias) values.push_back(&b);
        });
        grads.for_each_layer([&analytic](Dense& d) {
            for (auto& w : d.weights) analytic.push_back(&w);
            for (auto& b : d.bias) analytic.push_back(&b);
        });
        ASSERT_EQ(values.size(), analytic.size());
        std::size_t checked = 0;
        double worst = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double v0 = *values[i];
            ForwardTrace tp = trace, tm = trace;
            *values[i] = v0 + gradcheck::kStep;
            const double fp = nll_value_and_grad(network_forward(cfg, p, tp), label).value;
            *values[i] = v0 - gradcheck::kStep;
            const double fm = nll_value_and_grad(network_forward(cfg, p, tm), label).value;
            *values[i] = v0;
            if (tp.argmax != base_argmax || tm.argmax != base_argmax) continue;
            worst = std::max(worst, oracle::relative_error(*analytic[i], (fp - fm) / (2.0 * gradcheck::kStep)));
            ++checked;
        }
        EXPECT_LT(worst, 1e-4);
        EXPECT_GT(checked, values.size() * 9 / 10);
    }
}

TEST(Config, RoundTripThroughText) {
    NetworkConfig cfg = tiny_mlp();
    cfg.learning_rate = 0.0123;
    cfg.seed = 987654321987ull;
    cfg.max_epochs = 17;
    cfg.patience = 2;
    EXPECT_EQ(parse_config(serialize_config(cfg)), cfg);
    for (const auto& c : {timit(4), mfcc(ClassifierKind::mlp)}) EXPECT_EQ(parse_config(serialize_config(c)), c);
}

TEST(Config, DefaultsForStrides) {
    const auto cfg = parse_config(std::string("stages = 1\nstage.1.kW = 5\nstage.1.d_out = 2\nstage.1.pool_kW = 3\n"));
    EXPECT_EQ(cfg.stages[0].dW, 1);
    EXPECT_EQ(cfg.stages[0].pool_stride, 3);
}

TEST(Config, Errors) {
    EXPECT_THROW(parse_config(std::string("bogus = 1\n")), StructuralError);
    EXPECT_THROW(parse_config(std::string("stages = 1\nstage.1.kW = 5\n")), StructuralError);
    EXPECT_THROW(parse_config(std::string("w_in_ms = abc\n")), StructuralError);
    EXPECT_THROW(parse_config(std::string("stages = 6\n")), StructuralError);
    EXPECT_THROW(parse_config(std::string("no equals sign\n")), StructuralError);
}

TEST(Config, HashCoversArchitectureOnly) {
    NetworkConfig a = timit(3), b = timit(3);
    b.learning_rate = 0.5;
    b.seed = 99;
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.stages[1].d_out = 61;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Checkpoint, RoundTripIsExact) {
    const auto cfg = tiny_mlp();
    const Parameters p = init_parameters(cfg, 77);
    io::Reader r(encode_checkpoint(cfg, p).buffer());
    EXPECT_EQ(decode_checkpoint(r, cfg), p);
}

TEST(Checkpoint, HashMismatchIsReadError) {
    const auto cfg = tiny_mlp();
    auto other = cfg;
    other.classifier.hidden_units = 7;
    io::Reader r(encode_checkpoint(cfg, init_parameters(cfg, 1)).buffer());
    EXPECT_THROW(decode_checkpoint(r, other), ReadError);
}

TEST(Checkpoint, TruncationReportsOffset) {
    const auto cfg = tiny_mlp();
    auto bytes = encode_checkpoint(cfg, init_parameters(cfg, 1)).buffer();
    bytes.resize(bytes.size() - 5);
    io::Reader r(bytes);
    try {
        decode_checkpoint(r, cfg);
        FAIL() << "expected ReadError";
    } catch (const ReadError& e) {
        EXPECT_GT(e.offset(), 0u);
        EXPECT_LE(e.offset(), bytes.size());
    }
}

TEST(Checkpoint, VersionMismatchIsVersionError) {
    const auto cfg = tiny_mlp();
    auto bytes = encode_checkpoint(cfg, init_parameters(cfg, 1)).buffer();
    bytes[8] = 9;  // version field follows the 8-byte magic
    io::Reader r(bytes);
    EXPECT_THROW(decode_checkpoint(r, cfg), VersionError);
}

TEST(Init, DeterministicAndBounded) {
    const auto cfg = tiny_mlp();
    EXPECT_EQ(init_parameters(cfg, 5), init_parameters(cfg, 5));
    EXPECT_NE(init_parameters(cfg, 5), init_parameters(cfg, 6));
    init_parameters(cfg, 5).for_each_layer([](const Dense& d) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(d.cols));
        for (double w : d.weights) EXPECT_LE(std::abs(w), bound);
        for (double b : d.bias) EXPECT_LE(std::abs(b), bound);
    });
}
