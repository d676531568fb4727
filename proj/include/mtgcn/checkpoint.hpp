#pragma once

// Checkpoint files.
//
//     mtgcn-checkpoint 1
//     [config]
//     key=value                 one line per TrainConfig field
//     [dataset]
//     nodes=<N>
//     slots=<T>
//     [arrays]
//     array <name> <rows> <cols> <slots>
//     <values>                  rows*cols*slots numbers in storage order,
//                               one tensor row per line
//     ...
//     end
//
// Arrays appear in ModelParams::for_each_array order and are named
// w.<kind>.<layer>, embedding and r. Numbers are written in shortest
// round-trip form, so a load reproduces the saved doubles exactly.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mtgcn/format.hpp"
#include "mtgcn/training.hpp"

namespace mtgcn {

inline constexpr std::string_view kCheckpointMagic = "mtgcn-checkpoint";
inline constexpr int kCheckpointVersion = 1;

using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline KeyValues config_entries(const TrainConfig& c) {
    return {
        {"embedding_dim", std::to_string(c.embedding_dim)},
        {"learning_rate", format_double(c.learning_rate)},
        {"kappa", format_double(c.kappa)},
        {"max_epochs", std::to_string(c.max_epochs)},
        {"patience", std::to_string(c.patience)},
        {"seed", std::to_string(c.seed)},
        {"activation", std::string(to_string(c.activation))},
        {"adjacency", std::string(to_string(c.adjacency))},
        {"transform", std::string(to_string(c.transform))},
        {"layers", std::to_string(c.layers)},
        {"binarize", c.binarize ? "true" : "false"},
        {"symmetrize", c.symmetrize ? "true" : "false"},
        {"penalty", std::string(to_string(c.penalty))},
        {"ensemble", format_double(c.ensemble.alpha()) + "," + format_double(c.ensemble.beta()) + "," +
                         format_double(c.ensemble.chi())},
    };
}

/// Inverse of config_entries; unknown keys or bad values throw ParseError.
inline TrainConfig config_from_entries(const KeyValues& kv) {
    TrainConfig c;
    auto bad = [](const std::string& k, const std::string& v) { return ParseError("bad config value " + k + "=" + v); };
    auto size = [&](const std::string& k, const std::string& v) {
        auto n = parse_int<std::size_t>(v);
        if (!n)
            throw bad(k, v);
        return *n;
    };
    auto real = [&](const std::string& k, const std::string& v) {
        auto x = parse_double(v);
        if (!x)
            throw bad(k, v);
        return *x;
    };
    auto flag = [&](const std::string& k, const std::string& v) {
        if (v == "true") return true;
        if (v == "false") return false;
        throw bad(k, v);
    };
    for (const auto& [k, v] : kv) {
        if (k == "embedding_dim") c.embedding_dim = size(k, v);
        else if (k == "learning_rate") c.learning_rate = real(k, v);
        else if (k == "kappa") c.kappa = real(k, v);
        else if (k == "max_epochs") c.max_epochs = size(k, v);
        else if (k == "patience") c.patience = size(k, v);
        else if (k == "seed") {
            auto s = parse_int<std::uint64_t>(v);
            if (!s) throw bad(k, v);
            c.seed = *s;
        } else if (k == "activation") {
            auto a = parse_activation(v);
            if (!a) throw bad(k, v);
            c.activation = *a;
        } else if (k == "adjacency") {
            auto a = parse_adjacency_mode(v);
            if (!a) throw bad(k, v);
            c.adjacency = *a;
        } else if (k == "transform") {
            auto t = parse_transform_selection(v);
            if (!t) throw bad(k, v);
            c.transform = *t;
        } else if (k == "layers") c.layers = size(k, v);
        else if (k == "binarize") c.binarize = flag(k, v);
        else if (k == "symmetrize") c.symmetrize = flag(k, v);
        else if (k == "penalty") {
            if (v == "l2_norm") c.penalty = Penalty::l2_norm;
            else if (v == "squared_l2_norm") c.penalty = Penalty::squared_l2_norm;
            else throw bad(k, v);
        } else if (k == "ensemble") {
            std::vector<double> w;
            std::size_t start = 0;
            while (start <= v.size()) {
                const auto end = std::min(v.find(',', start), v.size());
                w.push_back(real(k, v.substr(start, end - start)));
                start = end + 1;
            }
            if (w.size() != 3)
                throw bad(k, v);
            c.ensemble = EnsembleWeights(w[0], w[1], w[2]);
        } else
            throw ParseError("unknown config key '" + k + "'");
    }
    return c;
}

struct Checkpoint {
    TrainConfig config;
    std::size_t nodes = 0;
    std::size_t slots = 0;
    ModelParams params;
};

inline void write_checkpoint(const Checkpoint& ck, std::ostream& out) {
    out << kCheckpointMagic << ' ' << kCheckpointVersion << "\n[config]\n";
    for (const auto& [k, v] : config_entries(ck.config))
        out << k << '=' << v << '\n';
    out << "[dataset]\nnodes=" << ck.nodes << "\nslots=" << ck.slots << "\n[arrays]\n";
    auto write_tensor = [&](const std::string& name, const RealTensor& x) {
        out << "array " << name << ' ' << x.rows() << ' ' << x.cols() << ' ' << x.slots() << '\n';
        const auto d = x.data();
        for (std::size_t k = 0; k < d.size(); ++k)
            out << format_double(d[k]) << ((k + 1) % x.cols() == 0 ? '\n' : ' ');
    };
    const auto& p = ck.params;
    for (std::size_t b = 0; b < p.w.size(); ++b)
        for (std::size_t l = 0; l < p.w[b].size(); ++l)
            write_tensor("w." + std::string(to_string(p.branches[b])) + "." + std::to_string(l), p.w[b][l]);
    write_tensor("embedding", p.embedding);
    write_tensor("r", RealTensor(1, p.head.r.size(), 1, p.head.r));
    out << "end\n";
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write checkpoint '" + path + "'");
    write_checkpoint(ck, out);
    if (!out)
        throw Error("failed writing checkpoint '" + path + "'");
}

inline Checkpoint read_checkpoint(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line))
        throw ParseError("empty checkpoint");
    {
        std::istringstream ss(line);
        std::string magic;
        int version = 0;
        ss >> magic >> version;
        if (magic != kCheckpointMagic)
            throw ParseError("not a checkpoint file", 1);
        if (version != kCheckpointVersion)
            throw ParseError("unsupported checkpoint version " + std::to_string(version), 1);
    }
    std::string section;
    KeyValues config_kv;
    std::map<std::string, std::string> dataset_kv;
    std::map<std::string, RealTensor> arrays;
    bool ended = false;
    while (!ended && std::getline(in, line)) {
        ++line_no;
        const auto l = std::string(trim(line));
        if (l.empty())
            continue;
        if (l == "end") {
            ended = true;
            break;
        }
        if (l.front() == '[') {
            section = l;
            continue;
        }
        if (section == "[config]" || section == "[dataset]") {
            const auto eq = l.find('=');
            if (eq == std::string::npos)
                throw ParseError("expected key=value", line_no);
            if (section == "[config]")
                config_kv.emplace_back(l.substr(0, eq), l.substr(eq + 1));
            else
                dataset_kv[l.substr(0, eq)] = l.substr(eq + 1);
        } else if (section == "[arrays]") {
            std::istringstream ss(l);
            std::string kw, name;
            std::size_t r = 0, c = 0, s = 0;
            if (!(ss >> kw >> name >> r >> c >> s) || kw != "array")
                throw ParseError("expected 'array <name> <rows> <cols> <slots>'", line_no);
            std::vector<double> values;
            values.reserve(r * c * s);
            while (values.size() < r * c * s) {
                if (!std::getline(in, line))
                    throw ParseError("truncated array '" + name + "'", line_no);
                ++line_no;
                std::istringstream vs(line);
                std::string tok;
                while (vs >> tok) {
                    auto v = parse_double(tok);
                    if (!v)
                        throw ParseError("bad number '" + tok + "'", line_no);
                    values.push_back(*v);
                }
            }
            if (values.size() != r * c * s)
                throw ParseError("array '" + name + "' has extra values", line_no);
            arrays.insert_or_assign(name, RealTensor(r, c, s, std::move(values)));
        } else {
            throw ParseError("content outside a section", line_no);
        }
    }
    if (!ended)
        throw ParseError("checkpoint missing 'end' marker", line_no);

    Checkpoint ck;
    ck.config = config_from_entries(config_kv);
    auto dim = [&](const std::string& k) {
        auto it = dataset_kv.find(k);
        if (it == dataset_kv.end())
            throw ParseError("checkpoint missing dataset " + k);
        auto n = parse_int<std::size_t>(it->second);
        if (!n || *n == 0)
            throw ParseError("bad dataset " + k);
        return *n;
    };
    ck.nodes = dim("nodes");
    ck.slots = dim("slots");
    ck.params = zero_params(ck.nodes, ck.slots, ck.config);
    auto take = [&](const std::string& name, RealTensor& dst) {
        auto it = arrays.find(name);
        if (it == arrays.end())
            throw ParseError("checkpoint missing array '" + name + "'");
        if (!it->second.same_shape(dst))
            throw ParseError("array '" + name + "' has shape " + it->second.shape_string() + ", expected " +
                             dst.shape_string());
        dst = std::move(it->second);
        arrays.erase(it);
    };
    auto& p = ck.params;
    for (std::size_t b = 0; b < p.w.size(); ++b)
        for (std::size_t l = 0; l < p.w[b].size(); ++l)
            take("w." + std::string(to_string(p.branches[b])) + "." + std::to_string(l), p.w[b][l]);
    take("embedding", p.embedding);
    RealTensor r(1, p.head.r.size(), 1);
    take("r", r);
    p.head.r.assign(r.data().begin(), r.data().end());
    if (!arrays.empty())
        throw ParseError("unexpected array '" + arrays.begin()->first + "'");
    return ck;
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open checkpoint '" + path + "'");
    return read_checkpoint(in);
}

} // namespace mtgcn
