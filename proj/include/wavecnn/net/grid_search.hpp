// wavecnn/net/grid_search.hpp
//
// Exhaustive search over architecture hyper-parameters. Every candidate is
// trained with sgd_train and scored by its best validation frame accuracy;
// ties go to fewer weights, then to the lexicographically smaller config.

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wavecnn/error.hpp"
#include "wavecnn/net/config.hpp"
#include "wavecnn/net/shape.hpp"
#include "wavecnn/net/train.hpp"

namespace wavecnn::net {

/// Value lists per hyper-parameter. An empty list keeps the base config's
/// value. kW and d_out apply to every stage after the first unless the
/// first-stage lists are given.
struct HyperGrid {
    std::vector<int> w_in_ms;
    std::vector<int> num_stages;
    std::vector<int> first_kW;
    std::vector<int> first_dW;
    std::vector<int> kW;
    std::vector<int> d_out;
    std::vector<int> pool_kW;
    std::vector<ClassifierKind> classifier;
};

/// Grid file: `key = v1, v2, ...` with keys w_in_ms, stages, first_kW,
/// first_dW, kW, d_out, pool_kW, classifier.
inline HyperGrid parse_grid(std::istream& in) {
    auto kv = parse_key_values(in);
    HyperGrid g;
    auto list = [&](const std::string& key, std::vector<int>& dst) {
        auto it = kv.find(key);
        if (it == kv.end()) return;
        std::istringstream items(it->second);
        std::string item;
        while (std::getline(items, item, ','))
            dst.push_back(config_detail::parse_number<int>(key, config_detail::trim(item)));
        kv.erase(it);
    };
    list("w_in_ms", g.w_in_ms);
    list("stages", g.num_stages);
    list("first_kW", g.first_kW);
    list("first_dW", g.first_dW);
    list("kW", g.kW);
    list("d_out", g.d_out);
    list("pool_kW", g.pool_kW);
    if (auto it = kv.find("classifier"); it != kv.end()) {
        std::istringstream items(it->second);
        std::string item;
        while (std::getline(items, item, ',')) {
            const auto v = config_detail::trim(item);
            detail::require(v == "slp" || v == "mlp", "grid: classifier must be slp or mlp");
            g.classifier.push_back(v == "slp" ? ClassifierKind::slp : ClassifierKind::mlp);
        }
        kv.erase(it);
    }
    detail::require(kv.empty(), "grid: unknown key '" + (kv.empty() ? "" : kv.begin()->first) + "'");
    return g;
}

/// Cartesian product of the grid applied to `base`. Stages added beyond the
/// base's stage list copy the base's last stage (or a unit stage).
inline std::vector<NetworkConfig> expand_grid(const HyperGrid& grid, const NetworkConfig& base) {
    auto or_base = [](const std::vector<int>& v, int fallback) {
        return v.empty() ? std::vector<int>{fallback} : v;
    };
    const ConvStageSpec proto = base.stages.empty() ? ConvStageSpec{} : base.stages.back();
    const ConvStageSpec first = base.stages.empty() ? ConvStageSpec{} : base.stages.front();
    const auto classifiers = grid.classifier.empty() ? std::vector<ClassifierKind>{base.classifier.kind}
                                                     : grid.classifier;
    std::vector<NetworkConfig> out;
    for (int w_in : or_base(grid.w_in_ms, base.w_in_ms))
        for (int n : or_base(grid.num_stages, static_cast<int>(base.stages.size())))
            for (int k1 : or_base(grid.first_kW, first.kW))
                for (int d1 : or_base(grid.first_dW, first.dW))
                    for (int kn : or_base(grid.kW, proto.kW))
                        for (int dout : or_base(grid.d_out, proto.d_out))
                            for (int pool : or_base(grid.pool_kW, proto.pool_kW))
                                for (ClassifierKind kind : classifiers) {
                                    NetworkConfig cfg = base;
                                    cfg.w_in_ms = w_in;
                                    cfg.classifier.kind = kind;
                                    cfg.stages.clear();
                                    for (int i = 0; i < n; ++i) {
                                        ConvStageSpec s = i < static_cast<int>(base.stages.size())
                                                              ? base.stages[static_cast<std::size_t>(i)]
                                                              : proto;
                                        s.kW = i == 0 ? k1 : kn;
                                        if (i == 0) s.dW = d1;
                                        s.d_out = dout;
                                        s.pool_kW = pool;
                                        s.pool_stride = pool;
                                        cfg.stages.push_back(s);
                                    }
                                    out.push_back(std::move(cfg));
                                }
    return out;
}

struct GridCandidate {
    NetworkConfig config;
    bool feasible = false;
    std::string note;  ///< why an infeasible candidate was skipped
    double valid_accuracy = std::numeric_limits<double>::quiet_NaN();
    int best_epoch = 0;
    ParamReport params;
};

struct GridReport {
    std::vector<GridCandidate> candidates;
    std::size_t best = 0;
    Parameters best_params;

    const NetworkConfig& best_config() const { return candidates.at(best).config; }
};

/// `make_data(cfg)` returns {train, valid} example sets shaped for cfg.
template <typename MakeData>
GridReport grid_search(const std::vector<NetworkConfig>& candidates, MakeData&& make_data,
                       const std::function<void(const GridCandidate&)>& on_candidate = {}) {
    detail::require(!candidates.empty(), "grid_search: empty grid");
    GridReport report;
    bool have_best = false;
    for (const auto& cfg : candidates) {
        GridCandidate c;
        c.config = cfg;
        try {
            c.params = param_count(cfg);
            c.feasible = true;
        } catch (const StructuralError& e) {
            c.note = e.what();
        }
        if (c.feasible) {
            const auto [train, valid] = make_data(cfg);
            TrainResult tr = sgd_train(cfg, train, valid);
            c.valid_accuracy = tr.best_valid_accuracy;
            c.best_epoch = tr.best_epoch;
            bool better = !have_best;
            if (have_best) {
                const auto& b = report.candidates[report.best];
                if (c.valid_accuracy != b.valid_accuracy)
                    better = c.valid_accuracy > b.valid_accuracy;
                else if (c.params.weights_only.total() != b.params.weights_only.total())
                    better = c.params.weights_only.total() < b.params.weights_only.total();
                else
                    better = c.config < b.config;
            }
            if (better) {
                report.best = report.candidates.size();
                report.best_params = std::move(tr.params);
                have_best = true;
            }
        }
        if (on_candidate) on_candidate(c);
        report.candidates.push_back(std::move(c));
    }
    detail::require(have_best, "grid_search: no feasible candidate in the grid");
    return report;
}

/// One line per candidate: accuracy, weights-only param counts, config summary.
inline std::string format_grid_report(const GridReport& report) {
    std::ostringstream os;
    os.precision(6);
    for (std::size_t i = 0; i < report.candidates.size(); ++i) {
        const auto& c = report.candidates[i];
        os << (i == report.best ? "* " : "  ") << "candidate " << i + 1 << ": w_in_ms=" << c.config.w_in_ms
           << " stages=" << c.config.stages.size();
        for (const auto& s : c.config.stages)
            os << " [kW=" << s.kW << " dW=" << s.dW << " d=" << s.d_out << " pool=" << s.pool_kW << "]";
        os << " classifier=" << to_string(c.config.classifier.kind);
        if (c.feasible)
            os << " valid_acc=" << c.valid_accuracy << " conv_params=" << c.params.weights_only.conv
               << " classifier_params=" << c.params.weights_only.classifier << "\n";
        else
            os << " infeasible (" << c.note << ")\n";
    }
    return os.str();
}

}  // namespace wavecnn::net
