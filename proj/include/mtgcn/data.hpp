#pragma once

// Dynamic graph datasets: text format, entrywise splits, adjacency assembly
// and synthetic generation.
//
// File format (UTF-8 text):
//
//     #nodes=<N>            optional, overrides the inferred node count
//     #slots=<T>            optional, overrides the inferred slot count
//     # anything else       comment
//     t<TAB>src<TAB>dst<TAB>weight
//
// t is one-based in 1..T, ids are zero-based, weight is a decimal float.
// Any whitespace separates fields on input; the serializer writes tabs.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "mtgcn/error.hpp"
#include "mtgcn/format.hpp"
#include "mtgcn/head_loss.hpp"
#include "mtgcn/random.hpp"
#include "mtgcn/tensor.hpp"

namespace mtgcn {

struct DynamicGraphDataset {
    std::size_t n_nodes = 0;
    std::size_t n_slots = 0;
    std::vector<LinkObservation> observations;
    // indices into `observations`; together they partition it once split
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;

    std::vector<LinkObservation> select(std::span<const std::size_t> idx) const {
        std::vector<LinkObservation> out;
        out.reserve(idx.size());
        for (auto k : idx)
            out.push_back(observations.at(k));
        return out;
    }
    std::vector<LinkObservation> train_set() const { return select(train); }
    std::vector<LinkObservation> validation_set() const { return select(validation); }
    std::vector<LinkObservation> test_set() const { return select(test); }

    bool is_split() const noexcept { return !train.empty(); }

    /// Throws DomainError if the splits do not partition the observations.
    void check_splits() const {
        std::vector<int> seen(observations.size(), 0);
        for (const auto* part : {&train, &validation, &test})
            for (auto k : *part) {
                if (k >= observations.size())
                    throw DomainError("split index " + std::to_string(k) + " out of range");
                if (seen[k]++)
                    throw DomainError("observation " + std::to_string(k) + " appears in two splits");
            }
        for (std::size_t k = 0; k < seen.size(); ++k)
            if (!seen[k])
                throw DomainError("observation " + std::to_string(k) + " is in no split");
    }

    bool operator==(const DynamicGraphDataset&) const = default;
};

struct ParseOptions {
    bool allow_self_links = false;
};

inline DynamicGraphDataset parse_dataset(std::istream& in, const ParseOptions& opts = {}) {
    std::optional<std::size_t> declared_nodes, declared_slots;
    struct Row {
        LinkObservation obs;
        std::size_t line;
    };
    std::vector<Row> rows;
    std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;

    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty())
            continue;
        if (line.front() == '#') {
            std::istringstream ss{std::string(line)};
            std::string tok;
            while (ss >> tok) {
                std::string_view v = tok;
                while (!v.empty() && v.front() == '#')
                    v.remove_prefix(1);
                auto header = [&](std::string_view key, std::optional<std::size_t>& slot) {
                    if (!v.starts_with(key))
                        return;
                    auto n = parse_int<std::size_t>(v.substr(key.size()));
                    if (!n || *n == 0)
                        throw ParseError("invalid header value '" + tok + "'", line_no);
                    slot = *n;
                };
                header("nodes=", declared_nodes);
                header("slots=", declared_slots);
            }
            continue;
        }
        std::istringstream ss{std::string(line)};
        std::string f[5];
        int nf = 0;
        while (nf < 5 && ss >> f[nf])
            ++nf;
        if (nf != 4)
            throw ParseError("expected 4 fields (t src dst weight), got " + std::to_string(nf), line_no);
        auto t = parse_int<long long>(f[0]);
        auto i = parse_int<long long>(f[1]);
        auto j = parse_int<long long>(f[2]);
        auto y = parse_double(f[3]);
        if (!t || !i || !j || !y)
            throw ParseError("malformed data line '" + std::string(line) + "'", line_no);
        if (*t < 1)
            throw ParseError("time slot must be >= 1", line_no);
        if (*i < 0 || *j < 0)
            throw ParseError("node ids must be >= 0", line_no);
        if (!std::isfinite(*y))
            throw ParseError("weight must be finite", line_no);
        if (*i == *j && !opts.allow_self_links)
            throw ParseError("self link " + f[1] + " -> " + f[2] + " not permitted", line_no);
        LinkObservation obs{static_cast<std::size_t>(*t), static_cast<std::size_t>(*i),
                            static_cast<std::size_t>(*j), *y};
        if (!seen.insert({obs.t, obs.i, obs.j}).second)
            throw ParseError("duplicate entry (t=" + f[0] + ", src=" + f[1] + ", dst=" + f[2] + ")", line_no);
        rows.push_back({obs, line_no});
    }

    std::size_t max_id = 0, max_t = 0;
    for (const auto& r : rows) {
        max_id = std::max({max_id, r.obs.i + 1, r.obs.j + 1});
        max_t = std::max(max_t, r.obs.t);
    }
    DynamicGraphDataset ds;
    ds.n_nodes = declared_nodes.value_or(max_id);
    ds.n_slots = declared_slots.value_or(max_t);
    if (ds.n_nodes == 0 || ds.n_slots == 0)
        throw ParseError("dataset has no observations and no #nodes/#slots header");
    for (const auto& r : rows) {
        if (r.obs.i >= ds.n_nodes || r.obs.j >= ds.n_nodes)
            throw ParseError("node id out of declared range 0.." + std::to_string(ds.n_nodes - 1), r.line);
        if (r.obs.t > ds.n_slots)
            throw ParseError("time slot out of declared range 1.." + std::to_string(ds.n_slots), r.line);
        ds.observations.push_back(r.obs);
    }
    return ds;
}

inline DynamicGraphDataset parse_dataset(const std::string& path, const ParseOptions& opts = {}) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open dataset '" + path + "'");
    return parse_dataset(in, opts);
}

inline void serialize_dataset(const DynamicGraphDataset& ds, std::ostream& out) {
    out << "#nodes=" << ds.n_nodes << "\n#slots=" << ds.n_slots << "\n";
    for (const auto& o : ds.observations)
        out << o.t << '\t' << o.i << '\t' << o.j << '\t' << format_double(o.y) << '\n';
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

struct SplitRatios {
    double train = 0.6;
    double validation = 0.2;
    double test = 0.2;
};

/// Uniform random entrywise split. Validation and test sizes are
/// floor(ratio * n); the remainder goes to train. Each split is sorted.
inline DynamicGraphDataset split_dataset(DynamicGraphDataset ds, std::uint64_t seed, SplitRatios ratios = {}) {
    const std::size_t n = ds.observations.size();
    if (n < 5)
        throw DomainError("need at least 5 observations to split, have " + std::to_string(n));
    if (!(ratios.train >= 0 && ratios.validation >= 0 && ratios.test >= 0) ||
        std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9)
        throw DomainError("split ratios must be nonnegative and sum to 1");
    const auto floor_count = [n](double r) {
        return static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9));
    };
    const std::size_t n_val = floor_count(ratios.validation);
    const std::size_t n_test = floor_count(ratios.test);
    if (n_val == 0 || n_test == 0)
        throw DomainError("split would leave the validation or test set empty");
    const std::size_t n_train = n - n_val - n_test;

    std::vector<std::size_t> perm(n);
    for (std::size_t k = 0; k < n; ++k)
        perm[k] = k;
    Rng rng(seed);
    for (std::size_t k = n - 1; k > 0; --k)
        std::swap(perm[k], perm[rng.index(k + 1)]);

    ds.train.assign(perm.begin(), perm.begin() + n_train);
    ds.validation.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
    ds.test.assign(perm.begin() + n_train + n_val, perm.end());
    std::sort(ds.train.begin(), ds.train.end());
    std::sort(ds.validation.begin(), ds.validation.end());
    std::sort(ds.test.begin(), ds.test.end());
    return ds;
}

// ---------------------------------------------------------------------------
// adjacency
// ---------------------------------------------------------------------------

struct AdjacencyOptions {
    bool binarize = false;   // store 1 instead of the observed weight
    bool symmetrize = false; // a_ji = max(a_ij, a_ji)
};

/// (N, N, T) tensor filled from the training observations only.
inline RealTensor build_adjacency(const DynamicGraphDataset& ds, AdjacencyOptions opts = {}) {
    RealTensor a(ds.n_nodes, ds.n_nodes, ds.n_slots);
    for (auto k : ds.train) {
        const auto& o = ds.observations.at(k);
        a(o.i, o.j, o.t - 1) = opts.binarize ? 1.0 : o.y;
    }
    if (opts.symmetrize)
        for (std::size_t t = 0; t < a.slots(); ++t)
            for (std::size_t i = 0; i < a.rows(); ++i)
                for (std::size_t j = i + 1; j < a.cols(); ++j) {
                    const double v = std::max(a(i, j, t), a(j, i, t));
                    a(i, j, t) = a(j, i, t) = v;
                }
    return a;
}

// ---------------------------------------------------------------------------
// synthetic generation
// ---------------------------------------------------------------------------

enum class Pattern { periodic, trend, mixed };

inline std::string_view to_string(Pattern p) {
    switch (p) {
    case Pattern::periodic: return "periodic";
    case Pattern::trend: return "trend";
    case Pattern::mixed: return "mixed";
    }
    return "?";
}

inline std::optional<Pattern> parse_pattern(std::string_view s) {
    if (s == "periodic") return Pattern::periodic;
    if (s == "trend") return Pattern::trend;
    if (s == "mixed") return Pattern::mixed;
    return std::nullopt;
}

struct SynthSpec {
    std::size_t nodes = 64;
    std::size_t slots = 16;
    double density = 0.1;
    Pattern pattern = Pattern::mixed;
    double noise = 0.0;
    std::uint64_t seed = 1;

    void validate() const {
        if (nodes < 2)
            throw DomainError("synthetic graph needs at least 2 nodes");
        if (slots < 1)
            throw DomainError("synthetic graph needs at least 1 slot");
        if (!(density > 0.0 && density <= 1.0))
            throw DomainError("density must lie in (0, 1]");
        if (!(noise >= 0.0))
            throw DomainError("noise must be nonnegative");
    }
};

/// Per-edge parameters of a synthetic weight series.
struct EdgeSeries {
    std::size_t i = 0;
    std::size_t j = 0;
    double base = 1.0;  // in [0.5, 1)
    double phase = 0.0; // in [0, 2*pi)
    bool rising = true;
};

inline constexpr double kMinSyntheticWeight = 1e-3;

/// Noise-free temporal profile f(t), t one-based:
///   periodic: 0.5 + 0.4 sin(2 pi (t-1)/T + phase)
///   trend:    0.2 + 0.6 (t-1)/(T-1), reversed for falling edges (0.5 when T = 1)
///   mixed:    the average of both
inline double synthetic_profile(Pattern p, const EdgeSeries& e, std::size_t t, std::size_t slots) {
    const double T = static_cast<double>(slots);
    const double periodic =
        0.5 + 0.4 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t - 1) / T + e.phase);
    double ramp = slots > 1 ? static_cast<double>(t - 1) / (T - 1.0) : 0.5;
    if (!e.rising)
        ramp = 1.0 - ramp;
    const double trend = 0.2 + 0.6 * ramp;
    switch (p) {
    case Pattern::periodic: return periodic;
    case Pattern::trend: return trend;
    case Pattern::mixed: return 0.5 * (periodic + trend);
    }
    return periodic;
}

struct SyntheticGraph {
    DynamicGraphDataset dataset;
    std::vector<EdgeSeries> edges;
};

/// Random directed base graph (each ordered pair i != j present with
/// probability `density`); every present edge is observed at every slot with
/// weight clip(base * f(t) + noise * N(0,1), 1e-3, 1). Observations are
/// ordered by (t, i, j).
inline SyntheticGraph generate_synthetic_graph(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    SyntheticGraph g;
    g.dataset.n_nodes = spec.nodes;
    g.dataset.n_slots = spec.slots;
    for (std::size_t i = 0; i < spec.nodes; ++i)
        for (std::size_t j = 0; j < spec.nodes; ++j) {
            if (i == j)
                continue;
            if (!(rng.uniform() < spec.density))
                continue;
            EdgeSeries e;
            e.i = i;
            e.j = j;
            e.base = rng.uniform(0.5, 1.0);
            e.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            e.rising = rng.uniform() < 0.5;
            g.edges.push_back(e);
        }
    for (std::size_t t = 1; t <= spec.slots; ++t)
        for (const auto& e : g.edges) {
            double w = e.base * synthetic_profile(spec.pattern, e, t, spec.slots);
            if (spec.noise > 0.0)
                w += spec.noise * rng.normal();
            w = std::clamp(w, kMinSyntheticWeight, 1.0);
            g.dataset.observations.push_back({t, e.i, e.j, w});
        }
    return g;
}

inline DynamicGraphDataset generate_synthetic(const SynthSpec& spec) {
    return generate_synthetic_graph(spec).dataset;
}

} // namespace mtgcn
