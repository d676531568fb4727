#pragma once

// Transform ablation: trains every scheme over a list of seeds and tabulates
// test MAE/RMSE (mean and sample standard deviation) per scheme.

#include <cmath>
#include <functional>
#include <ostream>
#include <vector>

#include "mtgcn/data.hpp"
#include "mtgcn/format.hpp"
#include "mtgcn/report.hpp"
#include "mtgcn/training.hpp"

namespace mtgcn {

inline const std::vector<TransformSelection>& ablation_schemes() {
    static const std::vector<TransformSelection> s{TransformSelection::identity, TransformSelection::dft,
                                                   TransformSelection::dct, TransformSelection::haar,
                                                   TransformSelection::ensemble};
    return s;
}

struct AblationRow {
    TransformSelection scheme = TransformSelection::identity;
    std::vector<double> test_mae;
    std::vector<double> test_rmse;
    double mae_mean = 0.0;
    double mae_std = 0.0;
    double rmse_mean = 0.0;
    double rmse_std = 0.0;
    double mae_improvement_pct = 0.0;  // relative to identity, positive = better
    double rmse_improvement_pct = 0.0;
};

struct AblationTable {
    std::vector<std::uint64_t> seeds;
    std::vector<AblationRow> rows;

    const AblationRow& row(TransformSelection s) const {
        for (const auto& r : rows)
            if (r.scheme == s)
                return r;
        throw DomainError("scheme not in ablation table");
    }
};

inline double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v)
        s += x;
    return s / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1); 0 for a single value.
inline double sample_std(std::span<const double> v) {
    if (v.size() < 2)
        return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v)
        s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

using AblationProgress = std::function<void(TransformSelection, std::uint64_t seed, const Metrics& test)>;

/// For each seed the dataset is re-split and the model re-initialised with
/// that seed; `base.transform` and `base.seed` are overridden.
inline AblationTable run_ablation(const DynamicGraphDataset& unsplit, const TrainConfig& base,
                                  std::span<const std::uint64_t> seeds, const AblationProgress& progress = {}) {
    if (seeds.empty())
        throw DomainError("ablation needs at least one seed");
    AblationTable table;
    table.seeds.assign(seeds.begin(), seeds.end());
    std::vector<DynamicGraphDataset> splits;
    for (auto s : seeds)
        splits.push_back(split_dataset(unsplit, s));

    for (auto scheme : ablation_schemes()) {
        AblationRow row;
        row.scheme = scheme;
        for (std::size_t k = 0; k < seeds.size(); ++k) {
            TrainConfig cfg = base;
            cfg.transform = scheme;
            cfg.seed = seeds[k];
            const auto& ds = splits[k];
            const auto result = train(ds, cfg);
            const Model model(ds, cfg);
            const auto test = ds.test_set();
            const auto m = evaluate_metrics(test, model.predict(result.params, test));
            row.test_mae.push_back(m.mae);
            row.test_rmse.push_back(m.rmse);
            if (progress)
                progress(scheme, seeds[k], m);
        }
        row.mae_mean = mean_of(row.test_mae);
        row.mae_std = sample_std(row.test_mae);
        row.rmse_mean = mean_of(row.test_rmse);
        row.rmse_std = sample_std(row.test_rmse);
        table.rows.push_back(std::move(row));
    }
    const auto& id = table.row(TransformSelection::identity);
    const double id_mae = id.mae_mean, id_rmse = id.rmse_mean;
    for (auto& r : table.rows) {
        r.mae_improvement_pct = 100.0 * (id_mae - r.mae_mean) / id_mae;
        r.rmse_improvement_pct = 100.0 * (id_rmse - r.rmse_mean) / id_rmse;
    }
    return table;
}

inline void write_ablation_table(const AblationTable& t, std::ostream& out) {
    out << "# seeds=";
    for (std::size_t k = 0; k < t.seeds.size(); ++k)
        out << (k ? "," : "") << t.seeds[k];
    out << "\nscheme,mae_mean,mae_std,rmse_mean,rmse_std,mae_improvement_vs_identity_pct,"
           "rmse_improvement_vs_identity_pct\n";
    for (const auto& r : t.rows)
        out << to_string(r.scheme) << ',' << format_double(r.mae_mean) << ',' << format_double(r.mae_std) << ','
            << format_double(r.rmse_mean) << ',' << format_double(r.rmse_std) << ','
            << format_double(r.mae_improvement_pct) << ',' << format_double(r.rmse_improvement_pct) << '\n';
}

} // namespace mtgcn
