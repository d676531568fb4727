#pragma once

// Run reports: key/value sections plus CSV tables.
//
//     # mtgcn run report
//     [run]
//     key=value ...
//     [config]
//     key=value ...
//     [metrics]
//     split,mae,rmse,count
//     train,<mae>,<rmse>,<n>
//     ...
//     [history]
//     epoch,train_loss,validation_mae
//     ...
//
// Wall-clock time is kept in RunReport but never serialized, so identical
// runs produce identical files.

#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mtgcn/checkpoint.hpp"
#include "mtgcn/format.hpp"
#include "mtgcn/head_loss.hpp"
#include "mtgcn/training.hpp"

namespace mtgcn {

struct SplitMetrics {
    std::string split;
    Metrics metrics;
};

struct RunReport {
    KeyValues run;    // command, inputs, outcome
    TrainConfig config;
    std::vector<SplitMetrics> metrics;
    std::vector<EpochRecord> history;
    double wall_seconds = 0.0;
};

inline void write_report(const RunReport& r, std::ostream& out) {
    out << "# mtgcn run report\n[run]\n";
    for (const auto& [k, v] : r.run)
        out << k << '=' << v << '\n';
    out << "[config]\n";
    for (const auto& [k, v] : config_entries(r.config))
        out << k << '=' << v << '\n';
    out << "[metrics]\nsplit,mae,rmse,count\n";
    for (const auto& m : r.metrics)
        out << m.split << ',' << format_double(m.metrics.mae) << ',' << format_double(m.metrics.rmse) << ','
            << m.metrics.count << '\n';
    if (!r.history.empty()) {
        out << "[history]\nepoch,train_loss,validation_mae\n";
        for (const auto& h : r.history)
            out << h.epoch << ',' << format_double(h.train_loss) << ',' << format_double(h.validation_mae) << '\n';
    }
}

inline std::string report_string(const RunReport& r) {
    std::ostringstream ss;
    write_report(r, ss);
    return ss.str();
}

/// Reads the [metrics] table of a report, keyed by split name.
inline std::map<std::string, Metrics> read_report_metrics(std::istream& in) {
    std::map<std::string, Metrics> out;
    std::string line;
    bool in_metrics = false;
    while (std::getline(in, line)) {
        const auto l = std::string(trim(line));
        if (l.empty())
            continue;
        if (l.front() == '[') {
            in_metrics = l == "[metrics]";
            continue;
        }
        if (!in_metrics || l.starts_with("split,"))
            continue;
        std::vector<std::string> f;
        std::stringstream ss(l);
        std::string cell;
        while (std::getline(ss, cell, ','))
            f.push_back(cell);
        if (f.size() != 4)
            throw ParseError("bad metrics row '" + l + "'");
        auto mae_v = parse_double(f[1]);
        auto rmse_v = parse_double(f[2]);
        auto n = parse_int<std::size_t>(f[3]);
        if (!mae_v || !rmse_v || !n)
            throw ParseError("bad metrics row '" + l + "'");
        out[f[0]] = {*mae_v, *rmse_v, *n};
    }
    return out;
}

/// MAE/RMSE of `params` on each non-empty split of `ds`.
inline std::vector<SplitMetrics> evaluate_splits(const Model& model, const ModelParams& params,
                                                 const DynamicGraphDataset& ds) {
    const RealTensor h = model.represent(params);
    std::vector<SplitMetrics> out;
    auto add = [&](const char* name, const std::vector<std::size_t>& idx) {
        if (idx.empty())
            return;
        const auto obs = ds.select(idx);
        out.push_back({name, evaluate_metrics(obs, estimate_weights(h, obs, params.head))});
    };
    add("train", ds.train);
    add("validation", ds.validation);
    add("test", ds.test);
    return out;
}

} // namespace mtgcn
