// wavecnn/net/config.hpp
//
// Network architecture and training hyper-parameters, with a plain
// `key = value` text format:
//
//   input = raw                # raw | cepstral
//   sample_rate = 16000
//   w_in_ms = 310
//   cepstral_dim = 351         # cepstral input only
//   stages = 2
//   stage.1.kW = 30
//   stage.1.dW = 10
//   stage.1.d_out = 80
//   stage.1.pool_kW = 3
//   stage.1.pool_stride = 3    # optional, defaults to pool_kW
//   ...
//   classifier = slp           # slp | mlp
//   hidden_units = 500
//   num_classes = 40
//   learning_rate = 0.0001
//   seed = 1
//   max_epochs = 50
//   patience = 5
//
// Blank lines and `#` comments are ignored.

#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wavecnn/error.hpp"
#include "wavecnn/random.hpp"

namespace wavecnn::net {

inline constexpr std::size_t kMaxStages = 5;

struct ConvStageSpec {
    int kW = 1;
    int dW = 1;
    int d_out = 1;
    int pool_kW = 1;
    int pool_stride = 1;

    auto operator<=>(const ConvStageSpec&) const = default;
};

enum class ClassifierKind { slp, mlp };
enum class InputKind { raw, cepstral };

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::slp;
    int hidden_units = 500;  ///< MLP only
    int num_classes = 40;

    auto operator<=>(const ClassifierSpec&) const = default;
};

struct NetworkConfig {
    InputKind input = InputKind::raw;
    int sample_rate = 16000;
    int w_in_ms = 310;
    int cepstral_dim = 351;
    std::vector<ConvStageSpec> stages;
    ClassifierSpec classifier;
    double learning_rate = 1e-4;
    std::uint64_t seed = 1;
    int max_epochs = 50;
    int patience = 5;

    auto operator<=>(const NetworkConfig&) const = default;
    bool operator==(const NetworkConfig&) const = default;

    /// Frames of the network input: samples for raw input, 1 for cepstral.
    std::size_t input_frames() const {
        if (input == InputKind::cepstral) return 1;
        const long long scaled = static_cast<long long>(w_in_ms) * sample_rate;
        detail::require(w_in_ms > 0 && sample_rate > 0 && scaled % 1000 == 0,
                        "NetworkConfig: w_in_ms=" + std::to_string(w_in_ms) + " at " +
                            std::to_string(sample_rate) + " Hz is not a whole number of samples");
        return static_cast<std::size_t>(scaled / 1000);
    }
    std::size_t input_channels() const {
        return input == InputKind::cepstral ? static_cast<std::size_t>(cepstral_dim) : 1;
    }
};

inline std::string to_string(ClassifierKind k) { return k == ClassifierKind::slp ? "slp" : "mlp"; }
inline std::string to_string(InputKind k) { return k == InputKind::raw ? "raw" : "cepstral"; }

/// Field-level validation; shape feasibility is checked by output_shape().
inline void validate(const NetworkConfig& cfg) {
    detail::require(cfg.stages.size() <= kMaxStages,
                    "NetworkConfig: " + std::to_string(cfg.stages.size()) +
                        " filter stages, at most " + std::to_string(kMaxStages) + " supported");
    for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
        const auto& s = cfg.stages[i];
        detail::require(s.kW >= 1 && s.dW >= 1 && s.d_out >= 1 && s.pool_kW >= 1 &&
                            s.pool_stride >= 1,
                        "NetworkConfig: stage " + std::to_string(i + 1) +
                            " has a non-positive kW/dW/d_out/pool_kW/pool_stride");
    }
    detail::require(cfg.classifier.num_classes >= 1, "NetworkConfig: num_classes must be >= 1");
    detail::require(cfg.classifier.kind == ClassifierKind::slp || cfg.classifier.hidden_units >= 1,
                    "NetworkConfig: MLP needs hidden_units >= 1");
    detail::require(cfg.learning_rate >= 0.0, "NetworkConfig: learning_rate must be >= 0");
    detail::require(cfg.max_epochs >= 1, "NetworkConfig: max_epochs must be >= 1");
    detail::require(cfg.patience >= 1, "NetworkConfig: patience must be >= 1");
    if (cfg.input == InputKind::cepstral)
        detail::require(cfg.cepstral_dim >= 1, "NetworkConfig: cepstral_dim must be >= 1");
    (void)cfg.input_frames();
}

namespace config_detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    detail::require(ec == std::errc{} && ptr == end,
                    "config: key '" + key + "' has invalid value '" + text + "'");
    return value;
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace config_detail

/// Parsed `key = value` pairs; later duplicates override earlier ones.
inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto text = config_detail::trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        detail::require(eq != std::string::npos,
                        "config line " + std::to_string(lineno) + ": expected key = value");
        kv[config_detail::trim(std::string_view(text).substr(0, eq))] =
            config_detail::trim(std::string_view(text).substr(eq + 1));
    }
    return kv;
}

inline NetworkConfig parse_config(std::istream& in) {
    using config_detail::parse_number;
    auto kv = parse_key_values(in);
    NetworkConfig cfg;
    auto take = [&](const std::string& key) -> std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    auto take_int = [&](const std::string& key, int& field) {
        if (auto* v = take(key)) {
            field = parse_number<int>(key, *v);
            kv.erase(key);
        }
    };

    if (auto* v = take("input")) {
        detail::require(*v == "raw" || *v == "cepstral", "config: input must be raw or cepstral");
        cfg.input = *v == "raw" ? InputKind::raw : InputKind::cepstral;
        kv.erase("input");
    }
    take_int("sample_rate", cfg.sample_rate);
    take_int("w_in_ms", cfg.w_in_ms);
    take_int("cepstral_dim", cfg.cepstral_dim);
    int stages = 0;
    take_int("stages", stages);
    detail::require(stages >= 0 && static_cast<std::size_t>(stages) <= kMaxStages,
                    "config: stages must be in [0, " + std::to_string(kMaxStages) + "]");
    for (int i = 1; i <= stages; ++i) {
        const std::string p = "stage." + std::to_string(i) + ".";
        ConvStageSpec s;
        for (const char* key : {"kW", "d_out", "pool_kW"})
            detail::require(take(p + key) != nullptr, "config: missing key '" + p + key + "'");
        take_int(p + "kW", s.kW);
        take_int(p + "dW", s.dW);
        take_int(p + "d_out", s.d_out);
        take_int(p + "pool_kW", s.pool_kW);
        s.pool_stride = s.pool_kW;
        take_int(p + "pool_stride", s.pool_stride);
        cfg.stages.push_back(s);
    }
    if (auto* v = take("classifier")) {
        detail::require(*v == "slp" || *v == "mlp", "config: classifier must be slp or mlp");
        cfg.classifier.kind = *v == "slp" ? ClassifierKind::slp : ClassifierKind::mlp;
        kv.erase("classifier");
    }
    take_int("hidden_units", cfg.classifier.hidden_units);
    take_int("num_classes", cfg.classifier.num_classes);
    if (auto* v = take("learning_rate")) {
        cfg.learning_rate = parse_number<double>("learning_rate", *v);
        kv.erase("learning_rate");
    }
    if (auto* v = take("seed")) {
        cfg.seed = parse_number<std::uint64_t>("seed", *v);
        kv.erase("seed");
    }
    take_int("max_epochs", cfg.max_epochs);
    take_int("patience", cfg.patience);

    detail::require(kv.empty(), "config: unknown key '" + (kv.empty() ? "" : kv.begin()->first) + "'");
    validate(cfg);
    return cfg;
}

inline NetworkConfig parse_config(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline NetworkConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    return parse_config(in);
}

/// Architecture keys only (everything that determines parameter shapes).
inline std::string serialize_architecture(const NetworkConfig& cfg) {
    std::ostringstream os;
    os << "input = " << to_string(cfg.input) << "\n";
    if (cfg.input == InputKind::raw) {
        os << "sample_rate = " << cfg.sample_rate << "\n";
        os << "w_in_ms = " << cfg.w_in_ms << "\n";
    } else {
        os << "cepstral_dim = " << cfg.cepstral_dim << "\n";
    }
    os << "stages = " << cfg.stages.size() << "\n";
    for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
        const auto& s = cfg.stages[i];
        const std::string p = "stage." + std::to_string(i + 1) + ".";
        os << p << "kW = " << s.kW << "\n"
           << p << "dW = " << s.dW << "\n"
           << p << "d_out = " << s.d_out << "\n"
           << p << "pool_kW = " << s.pool_kW << "\n"
           << p << "pool_stride = " << s.pool_stride << "\n";
    }
    os << "classifier = " << to_string(cfg.classifier.kind) << "\n";
    if (cfg.classifier.kind == ClassifierKind::mlp)
        os << "hidden_units = " << cfg.classifier.hidden_units << "\n";
    os << "num_classes = " << cfg.classifier.num_classes << "\n";
    return os.str();
}

inline std::string serialize_config(const NetworkConfig& cfg) {
    std::ostringstream os;
    os << serialize_architecture(cfg);
    os << "learning_rate = " << config_detail::format_double(cfg.learning_rate) << "\n";
    os << "seed = " << cfg.seed << "\n";
    os << "max_epochs = " << cfg.max_epochs << "\n";
    os << "patience = " << cfg.patience << "\n";
    return os.str();
}

/// Hash of the architecture; stored in checkpoints and checked on load.
inline std::uint64_t config_hash(const NetworkConfig& cfg) {
    return fnv1a(serialize_architecture(cfg));
}

}  // namespace wavecnn::net
