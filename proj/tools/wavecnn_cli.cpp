// wavecnn command-line driver.
//
// Exit status: 0 success, 1 runtime failure, 2 usage error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "wavecnn/wavecnn.hpp"

namespace fs = std::filesystem;
using namespace wavecnn;

namespace {

struct Common {
    std::uint64_t seed = 1;
    bool seed_given = false;
    std::string config;
    std::string data;
    std::string out;
    bool quiet = false;
};

class Log {
public:
    explicit Log(const Common& c) : quiet_(c.quiet) {}
    template <typename... Args>
    void operator()(const Args&... args) const {
        if (quiet_) return;
        (std::cerr << ... << args) << '\n';
    }

private:
    bool quiet_;
};

void need(const std::string& value, const char* flag) {
    if (value.empty()) throw CLI::RequiredError(flag);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

fs::path output_dir(const std::string& out) {
    need(out, "--out");
    fs::create_directories(out);
    return out;
}

net::NetworkConfig load_config(const Common& c) {
    need(c.config, "--config");
    auto cfg = net::load_config(c.config);
    if (c.seed_given) cfg.seed = c.seed;
    return cfg;
}

corpus::Corpus load_data(const Common& c) {
    need(c.data, "--data");
    return corpus::load_corpus(c.data);
}

// ------------------------------------------------------------------ commands

struct GenDataArgs {
    std::string recipe = "tones";
    int classes = 5;
    int utts = 200;
    int rate = 16000;
    double noise = 0.3;
    double jitter = 0.0;
    int min_dur = 3;
    int max_dur = 8;
    int min_utt = 30;
    int max_utt = 60;
};

int gen_data(const Common& c, const GenDataArgs& a) {
    const Log log(c);
    auto models = a.recipe == "beats" ? corpus::beat_phone_models(a.classes, a.rate, a.noise, a.min_dur, a.max_dur)
                                      : corpus::default_phone_models(a.classes, a.rate, a.noise, a.min_dur, a.max_dur);
    for (auto& m : models) m.freq_jitter = a.jitter;
    corpus::GenerationSpec spec;
    spec.num_utts = a.utts;
    spec.min_utt_frames = a.min_utt;
    spec.max_utt_frames = a.max_utt;
    spec.rate = a.rate;
    spec.seed = derive_seed(c.seed, "data");
    const auto dir = output_dir(c.out);
    const auto corp = corpus::generate_corpus(models, spec);
    corpus::save_corpus(dir.string(), corp);
    log("wrote ", corp.utterances.size(), " utterances (", corp.splits.train.size(), " train, ",
        corp.splits.valid.size(), " valid, ", corp.splits.test.size(), " test) to ", dir.string());
    return 0;
}

int extract_features(const Common& c, const std::string& split) {
    const Log log(c);
    need(c.out, "--out");
    const auto corp = load_data(c);
    std::vector<io::TensorEntry> entries;
    auto add = [&](const char* name) {
        for (const auto* u : corp.split(name))
            entries.push_back({u->id, features::cepstral_features(u->stream, features::CepstralConfig{}).frames});
    };
    if (split == "all") {
        for (const char* name : {"train", "valid", "test"}) add(name);
    } else {
        add(split.c_str());
    }
    if (auto parent = fs::path(c.out).parent_path(); !parent.empty()) fs::create_directories(parent);
    io::save_tensor_archive(c.out, entries);
    log("wrote cepstral features for ", entries.size(), " utterances to ", c.out);
    return 0;
}

int train(const Common& c) {
    const Log log(c);
    const auto cfg = load_config(c);
    const auto corp = load_data(c);
    const auto dir = output_dir(c.out);
    std::ofstream epoch_log(dir / "train.log", std::ios::trunc);
    net::TrainOptions opts;
    opts.on_epoch = [&](const net::EpochRecord& r) {
        epoch_log << net::format_epoch(r) << '\n';
        epoch_log.flush();
        log(net::format_epoch(r));
    };
    const auto start = std::chrono::steady_clock::now();
    const auto result = experiment::train_on_corpus(cfg, corp, opts);
    net::save_checkpoint((dir / "model.ckpt").string(), cfg, result.params);
    write_text(dir / "config.cfg", net::serialize_config(cfg));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log("best epoch ", result.best_epoch, " valid_acc ", result.best_valid_accuracy, " (", secs, " s)");
    return 0;
}

struct DecodeArgs {
    std::string model;
    std::string split = "test";
    std::string priors = "train";
    int min_duration = 3;
};

int decode(const Common& c, const DecodeArgs& a) {
    const Log log(c);
    const auto cfg = load_config(c);
    const auto corp = load_data(c);
    need(a.model, "--model");
    const auto params = net::load_checkpoint(a.model, cfg);
    const auto priors = a.priors == "uniform" ? decoder::uniform_priors(corp.num_classes) : experiment::train_priors(corp);
    const auto decoded = experiment::decode_utterances(cfg, params, priors, corp.split(a.split), a.min_duration);
    const auto dir = output_dir(c.out);
    std::vector<io::TensorEntry> post;
    std::string text;
    for (const auto& d : decoded) {
        post.push_back({d.id, d.posteriors});
        text += experiment::format_decoded_line(d.id, d.decode.sequence) + "\n";
    }
    io::save_tensor_archive((dir / "posteriors.bin").string(), post);
    write_text(dir / "decoded.txt", text);
    log("decoded ", decoded.size(), " utterances of split '", a.split, "' to ", dir.string());
    return 0;
}

int evaluate(const Common& c, const std::string& decoded_dir) {
    const Log log(c);
    const auto cfg = load_config(c);
    const auto corp = load_data(c);
    need(decoded_dir, "--decoded");
    std::map<std::string, const corpus::Utterance*> by_id;
    for (const auto& u : corp.utterances) by_id[u.id] = &u;

    std::ifstream in(fs::path(decoded_dir) / "decoded.txt");
    if (!in) throw std::runtime_error("cannot open " + (fs::path(decoded_dir) / "decoded.txt").string());
    std::map<std::string, Tensor2> post;
    for (auto& e : io::load_tensor_archive((fs::path(decoded_dir) / "posteriors.bin").string()))
        post.emplace(e.id, std::move(e.tensor));

    std::vector<const corpus::Utterance*> refs;
    std::vector<decoder::PhoneSequence> hyps;
    std::vector<std::vector<int>> frames;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto d = experiment::parse_decoded_line(line);
        auto it = by_id.find(d.id);
        if (it == by_id.end()) throw std::runtime_error("decoded utterance '" + d.id + "' is not in the dataset");
        auto p = post.find(d.id);
        if (p == post.end()) throw std::runtime_error("no posteriors for utterance '" + d.id + "'");
        refs.push_back(it->second);
        hyps.push_back(std::move(d.sequence));
        frames.push_back(experiment::argmax_frames(p->second));
    }
    const auto report = experiment::make_report(cfg, experiment::score_utterances(refs, hyps, frames));
    const auto dir = output_dir(c.out);
    write_text(dir / "report.txt", eval::format_text(report));
    write_text(dir / "report.kv", eval::format_key_values(report));
    if (!c.quiet) std::cout << eval::format_text(report);
    return 0;
}

int grid(const Common& c, const std::string& grid_path) {
    const Log log(c);
    const auto base = load_config(c);
    const auto corp = load_data(c);
    need(grid_path, "--grid");
    std::ifstream gin(grid_path);
    if (!gin) throw std::runtime_error("cannot open grid " + grid_path);
    const auto candidates = net::expand_grid(net::parse_grid(gin), base);
    const auto dir = output_dir(c.out);
    auto make_data = [&corp](const net::NetworkConfig& cfg) {
        experiment::check_experiment(
            cfg.input == net::InputKind::raw ? experiment::FeatureMode::raw : experiment::FeatureMode::cepstral, cfg);
        return std::pair{experiment::make_examples(cfg, corp.split("train")),
                         experiment::make_examples(cfg, corp.split("valid"))};
    };
    std::size_t n = 0;
    const auto report = net::grid_search(candidates, make_data, [&](const net::GridCandidate& g) {
        ++n;
        if (g.feasible)
            log("candidate ", n, "/", candidates.size(), " valid_acc ", g.valid_accuracy);
        else
            log("candidate ", n, "/", candidates.size(), " infeasible: ", g.note);
    });
    write_text(dir / "grid_report.txt", net::format_grid_report(report));
    write_text(dir / "best.cfg", net::serialize_config(report.best_config()));
    net::save_checkpoint((dir / "model.ckpt").string(), report.best_config(), report.best_params);
    if (!c.quiet) std::cout << net::format_grid_report(report);
    return 0;
}

int count_params(const Common& c) {
    const auto cfg = load_config(c);
    const auto r = net::param_count(cfg);
    std::cout << "conv_params = " << r.weights_only.conv << "\n"
              << "classifier_params = " << r.weights_only.classifier << "\n"
              << "total_params = " << r.weights_only.total() << "\n"
              << "conv_params_with_biases = " << r.with_biases.conv << "\n"
              << "classifier_params_with_biases = " << r.with_biases.classifier << "\n"
              << "total_params_with_biases = " << r.with_biases.total() << "\n";
    return 0;
}

int shape(const Common& c) {
    const auto cfg = load_config(c);
    const auto s = net::output_shape(cfg);
    std::cout << "input " << s.input_frames << " x " << s.input_channels << "\n";
    for (std::size_t i = 0; i < s.stages.size(); ++i)
        std::cout << "stage " << i + 1 << " conv " << s.stages[i].conv_frames << " x " << s.stages[i].channels
                  << " pool " << s.stages[i].pool_frames << " x " << s.stages[i].channels << "\n";
    std::cout << "classifier_input " << s.classifier_input << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Raw-waveform CNN phone recognizer: data generation, training, decoding, scoring"};
    app.require_subcommand(1);
    app.fallthrough();

    Common common;
    app.add_option("--seed", common.seed, "Master seed (data, init and shuffle seeds derive from it)")
        ->each([&common](const std::string&) { common.seed_given = true; });
    app.add_option("--config", common.config, "Network config file");
    app.add_option("--data", common.data, "Corpus directory (corpus.bin + splits.txt)");
    app.add_option("--out", common.out, "Output file or directory");
    app.add_flag("--quiet", common.quiet, "Suppress progress output");

    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic frame-labeled corpus");
    gen_cmd->add_option("--recipe", gen.recipe, "Class recipe: tones (distinct partials) or beats (beat rates)")
        ->check(CLI::IsMember({"tones", "beats"}));
    gen_cmd->add_option("--classes", gen.classes, "Number of phone classes")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--utts", gen.utts, "Number of utterances")->check(CLI::Range(2, 1000000));
    gen_cmd->add_option("--rate", gen.rate, "Sample rate in Hz")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--noise", gen.noise, "White-noise standard deviation")->check(CLI::NonNegativeNumber);
    gen_cmd->add_option("--jitter", gen.jitter, "Relative per-segment frequency jitter")->check(CLI::NonNegativeNumber);
    gen_cmd->add_option("--min-dur", gen.min_dur, "Minimum segment length in frames");
    gen_cmd->add_option("--max-dur", gen.max_dur, "Maximum segment length in frames");
    gen_cmd->add_option("--min-utt", gen.min_utt, "Minimum utterance length in frames");
    gen_cmd->add_option("--max-utt", gen.max_utt, "Maximum utterance length in frames");

    std::string feat_split = "all";
    auto* feat_cmd = app.add_subcommand("extract-features", "Write stacked cepstral features per utterance");
    feat_cmd->add_option("--split", feat_split, "train, valid, test or all")
        ->check(CLI::IsMember({"train", "valid", "test", "all"}));

    auto* train_cmd = app.add_subcommand("train", "Train a network with SGD and early stopping");

    DecodeArgs dec;
    auto* dec_cmd = app.add_subcommand("decode", "Compute posteriors and Viterbi-decode a split");
    dec_cmd->add_option("--model", dec.model, "Checkpoint written by train")->required();
    dec_cmd->add_option("--split", dec.split, "Split to decode")->check(CLI::IsMember({"train", "valid", "test"}));
    dec_cmd->add_option("--priors", dec.priors, "Class priors for likelihood scaling")
        ->check(CLI::IsMember({"train", "uniform"}));
    dec_cmd->add_option("--min-duration", dec.min_duration, "HMM states per phone (minimum segment length)")
        ->check(CLI::PositiveNumber);

    std::string decoded_dir;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score decoded output: frame accuracy and PER");
    eval_cmd->add_option("--decoded", decoded_dir, "Directory written by decode")->required();

    std::string grid_path;
    auto* grid_cmd = app.add_subcommand("grid-search", "Train every grid candidate, keep the best");
    grid_cmd->add_option("--grid", grid_path, "Grid file (key = v1, v2, ...)")->required();

    auto* count_cmd = app.add_subcommand("count-params", "Print parameter counts for a config");
    auto* shape_cmd = app.add_subcommand("shape", "Print per-stage frame counts for a config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*gen_cmd) return gen_data(common, gen);
        if (*feat_cmd) return extract_features(common, feat_split);
        if (*train_cmd) return train(common);
        if (*dec_cmd) return decode(common, dec);
        if (*eval_cmd) return evaluate(common, decoded_dir);
        if (*grid_cmd) return grid(common, grid_path);
        if (*count_cmd) return count_params(common);
        if (*shape_cmd) return shape(common);
    } catch (const CLI::RequiredError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
