// mtgcn: command-line front end.
//
// Exit codes: 0 success, 1 validation/check failure, 2 usage error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mtgcn/ablation.hpp"
#include "mtgcn/checkpoint.hpp"
#include "mtgcn/data.hpp"
#include "mtgcn/report.hpp"
#include "mtgcn/training.hpp"
#include "mtgcn/transforms.hpp"

namespace {

using namespace mtgcn;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct TrainFlags {
    std::string transform = "ensemble";
    std::uint64_t seed = 1;
    std::size_t dim = 20;
    double lr = 0.01;
    double kappa = 1e-4;
    std::size_t epochs = 1000;
    std::size_t patience = 10;
    std::string activation = "sigmoid";
    std::string adjacency = "sym_normalized";
    std::size_t layers = 1;
    bool binarize = false;
    bool symmetrize = false;
    bool squared_norm = false;
    std::vector<double> ensemble_weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
};

void add_train_flags(CLI::App* app, TrainFlags& f, bool with_transform = true) {
    if (with_transform)
        app->add_option("--transform", f.transform, "identity|dft|dct|haar|ensemble")
            ->check(CLI::IsMember({"identity", "dft", "dct", "haar", "ensemble"}))
            ->capture_default_str();
    app->add_option("--seed", f.seed, "split and initialisation seed")->capture_default_str();
    app->add_option("--dim", f.dim, "embedding dimension")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--lr", f.lr, "Adam learning rate")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--kappa", f.kappa, "penalty coefficient")->check(CLI::NonNegativeNumber)->capture_default_str();
    app->add_option("--epochs", f.epochs, "maximum epochs")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--patience", f.patience, "consecutive validation increases before stopping")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--activation", f.activation)
        ->check(CLI::IsMember({"sigmoid", "relu", "identity"}))
        ->capture_default_str();
    app->add_option("--adjacency", f.adjacency)
        ->check(CLI::IsMember({"sym_normalized", "raw_self_loops"}))
        ->capture_default_str();
    app->add_option("--layers", f.layers, "stacked GTCN layers")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_flag("--binarize", f.binarize, "use 0/1 adjacency instead of observed weights");
    app->add_flag("--symmetrize", f.symmetrize, "treat links as undirected in the adjacency");
    app->add_flag("--squared-norm", f.squared_norm, "penalise ||theta||^2 instead of ||theta||");
    app->add_option("--ensemble-weights", f.ensemble_weights, "alpha beta chi (sum to 1)")->expected(3);
}

TrainConfig to_config(const TrainFlags& f) {
    TrainConfig c;
    c.transform = *parse_transform_selection(f.transform);
    c.seed = f.seed;
    c.embedding_dim = f.dim;
    c.learning_rate = f.lr;
    c.kappa = f.kappa;
    c.max_epochs = f.epochs;
    c.patience = f.patience;
    c.activation = *parse_activation(f.activation);
    c.adjacency = *parse_adjacency_mode(f.adjacency);
    c.layers = f.layers;
    c.binarize = f.binarize;
    c.symmetrize = f.symmetrize;
    c.penalty = f.squared_norm ? Penalty::squared_l2_norm : Penalty::l2_norm;
    c.ensemble = EnsembleWeights(f.ensemble_weights.at(0), f.ensemble_weights.at(1), f.ensemble_weights.at(2));
    c.validate();
    return c;
}

template <class F>
void write_file(const std::string& path, F&& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write '" + path + "'");
    body(out);
    if (!out)
        throw Error("failed writing '" + path + "'");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

struct GenSynthFlags {
    std::size_t nodes = 64;
    std::size_t slots = 16;
    std::string pattern = "mixed";
    double density = 0.1;
    double noise = 0.0;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_gen_synth(const GenSynthFlags& f) {
    SynthSpec spec{f.nodes, f.slots, f.density, *parse_pattern(f.pattern), f.noise, f.seed};
    const auto ds = generate_synthetic(spec);
    write_file(f.out, [&](std::ostream& o) { serialize_dataset(ds, o); });
    std::cout << "wrote " << ds.observations.size() << " observations (" << ds.n_nodes << " nodes, " << ds.n_slots
              << " slots) to " << f.out << '\n';
    return 0;
}

struct TrainCmdFlags {
    std::string data;
    std::string checkpoint = "mtgcn.ckpt";
    std::string report = "mtgcn_report.txt";
    TrainFlags train;
};

int cmd_train(const TrainCmdFlags& f) {
    const auto t0 = std::chrono::steady_clock::now();
    const TrainConfig cfg = to_config(f.train);
    const auto ds = split_dataset(parse_dataset(f.data), cfg.seed);
    if (cfg.transform == TransformSelection::haar || cfg.transform == TransformSelection::ensemble) {
        const auto padded = transform_slots(TransformKind::haar, ds.n_slots);
        if (padded != ds.n_slots)
            std::cout << "haar: padding " << ds.n_slots << " slots to " << padded << '\n';
    }
    const auto result = train(ds, cfg);
    const Model model(ds, cfg);

    save_checkpoint({cfg, ds.n_nodes, ds.n_slots, result.params}, f.checkpoint);

    RunReport r;
    r.run = {{"command", "train"},
             {"data", f.data},
             {"checkpoint", f.checkpoint},
             {"nodes", std::to_string(ds.n_nodes)},
             {"slots", std::to_string(ds.n_slots)},
             {"observations", std::to_string(ds.observations.size())},
             {"epochs_run", std::to_string(result.history.size())},
             {"best_epoch", std::to_string(result.best_epoch)},
             {"stopped_early", result.stopped_early ? "true" : "false"}};
    r.config = cfg;
    r.metrics = evaluate_splits(model, result.params, ds);
    r.history = result.history;
    r.wall_seconds = seconds_since(t0);
    write_file(f.report, [&](std::ostream& o) { write_report(r, o); });

    for (const auto& m : r.metrics)
        std::cout << m.split << ": MAE " << format_double(m.metrics.mae) << "  RMSE " << format_double(m.metrics.rmse)
                  << '\n';
    std::cout << "best epoch " << result.best_epoch << " of " << result.history.size() << ", wall-clock "
              << r.wall_seconds << " s\n";
    return 0;
}

struct EvalFlags {
    std::string data;
    std::string checkpoint;
    std::string report;
    double kappa = 0.0; // accepted for symmetry with train; the loss is not recomputed
};

int cmd_eval(const EvalFlags& f) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto ck = load_checkpoint(f.checkpoint);
    auto ds = parse_dataset(f.data);
    if (ds.n_nodes != ck.nodes)
        throw DimensionError("checkpoint expects " + std::to_string(ck.nodes) + " nodes, dataset has " +
                             std::to_string(ds.n_nodes));
    if (ds.n_slots != ck.slots)
        throw DimensionError("checkpoint expects " + std::to_string(ck.slots) + " slots, dataset has " +
                             std::to_string(ds.n_slots));
    ds = split_dataset(std::move(ds), ck.config.seed);
    const Model model(ds, ck.config);

    RunReport r;
    r.run = {{"command", "eval"}, {"data", f.data}, {"checkpoint", f.checkpoint}};
    r.config = ck.config;
    r.metrics = evaluate_splits(model, ck.params, ds);
    r.wall_seconds = seconds_since(t0);
    if (!f.report.empty())
        write_file(f.report, [&](std::ostream& o) { write_report(r, o); });
    else
        write_report(r, std::cout);
    for (const auto& m : r.metrics)
        if (m.split == "test")
            std::cerr << "test: MAE " << format_double(m.metrics.mae) << "  RMSE " << format_double(m.metrics.rmse)
                      << '\n';
    return 0;
}

struct TransformMatrixFlags {
    std::string kind;
    std::size_t size = 0;
    std::string out;
};

void write_csv(const std::string& path, const Matrix<cplx>& m, bool imag) {
    write_file(path, [&](std::ostream& o) {
        for (std::size_t r = 0; r < m.rows(); ++r)
            for (std::size_t c = 0; c < m.cols(); ++c)
                o << format_double(imag ? m(r, c).imag() : m(r, c).real()) << (c + 1 == m.cols() ? '\n' : ',');
    });
}

int cmd_transform_matrix(const TransformMatrixFlags& f) {
    const auto tm = build_transform(*parse_transform_kind(f.kind), f.size);
    const auto& m = tm.forward<cplx>();
    if (tm.is_real()) {
        write_csv(f.out, m, false);
        std::cout << "wrote " << f.out << '\n';
    } else {
        std::filesystem::path p(f.out);
        const std::string stem = (p.extension() == ".csv" ? p.replace_extension("") : p).string();
        write_csv(stem + "_real.csv", m, false);
        write_csv(stem + "_imag.csv", m, true);
        std::cout << "wrote " << stem << "_real.csv and " << stem << "_imag.csv\n";
    }
    return 0;
}

struct GradCheckFlags {
    std::string transform = "dft";
    std::size_t nodes = 5;
    std::size_t dim = 3;
    std::size_t slots = 4;
    std::size_t layers = 1;
    std::uint64_t seed = 1;
    double kappa = 1e-2;
    bool squared_norm = false;
};

int cmd_grad_check(const GradCheckFlags& f) {
    GradCheckOptions opt;
    opt.transform = *parse_transform_selection(f.transform);
    opt.nodes = f.nodes;
    opt.features = f.dim;
    opt.slots = f.slots;
    opt.layers = f.layers;
    opt.seed = f.seed;
    opt.kappa = f.kappa;
    opt.penalty = f.squared_norm ? Penalty::squared_l2_norm : Penalty::l2_norm;
    const auto rep = grad_check(opt);
    for (const auto& g : rep.groups)
        std::cout << g.name << " (" << g.count << " params): max relative error " << g.max_relative_error << '\n';
    std::cout << (rep.passed ? "PASS" : "FAIL") << " max relative error " << rep.max_relative_error
              << " (tolerance " << opt.tolerance << ")\n";
    return rep.passed ? 0 : kExitFailure;
}

struct AblationFlags {
    std::string data;
    std::size_t seeds = 5;
    std::string out = "ablation.csv";
    TrainFlags train;
};

int cmd_ablation(const AblationFlags& f) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto ds = parse_dataset(f.data);
    const TrainConfig base = to_config(f.train);
    std::vector<std::uint64_t> seeds;
    for (std::size_t k = 0; k < f.seeds; ++k)
        seeds.push_back(f.train.seed + k);
    const auto table = run_ablation(ds, base, seeds, [](TransformSelection s, std::uint64_t seed, const Metrics& m) {
        std::cout << to_string(s) << " seed " << seed << ": test MAE " << format_double(m.mae) << "  RMSE "
                  << format_double(m.rmse) << std::endl;
    });
    write_file(f.out, [&](std::ostream& o) { write_ablation_table(table, o); });
    write_ablation_table(table, std::cout);
    std::cout << "wall-clock " << seconds_since(t0) << " s\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph tensor convolution over dynamic graphs (M-product, DFT/DCT/Haar transforms)"};
    app.require_subcommand(1);

    GenSynthFlags gen;
    auto* gen_cmd = app.add_subcommand("gen-synth", "generate a synthetic dynamic graph dataset");
    gen_cmd->add_option("--nodes", gen.nodes)->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20))->capture_default_str();
    gen_cmd->add_option("--slots", gen.slots)->check(CLI::PositiveNumber)->capture_default_str();
    gen_cmd->add_option("--pattern", gen.pattern)
        ->check(CLI::IsMember({"periodic", "trend", "mixed"}))
        ->capture_default_str();
    gen_cmd->add_option("--density", gen.density)
        ->check(CLI::Validator(
            [](std::string& v) {
                double d = 0.0;
                if (!CLI::detail::lexical_cast(v, d))
                    return std::string("density must be a number");
                return d > 0.0 && d <= 1.0 ? std::string() : "density must be in (0, 1]";
            },
            "(0,1]"))
        ->capture_default_str();
    gen_cmd->add_option("--noise", gen.noise)->check(CLI::NonNegativeNumber)->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
    gen_cmd->add_option("--out", gen.out)->required();

    TrainCmdFlags tr;
    auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint and report");
    train_cmd->add_option("--data", tr.data)->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--checkpoint", tr.checkpoint)->capture_default_str();
    train_cmd->add_option("--report", tr.report)->capture_default_str();
    add_train_flags(train_cmd, tr.train);

    EvalFlags ev;
    auto* eval_cmd = app.add_subcommand("eval", "recompute metrics of a checkpoint on a dataset");
    eval_cmd->add_option("--data", ev.data)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--checkpoint", ev.checkpoint)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--report", ev.report, "report path (stdout if omitted)");
    eval_cmd->add_option("--kappa", ev.kappa, "ignored at evaluation");

    TransformMatrixFlags tmf;
    auto* tm_cmd = app.add_subcommand("transform-matrix", "dump a transform matrix as CSV");
    tm_cmd->add_option("--kind", tmf.kind)->required()->check(CLI::IsMember({"identity", "dft", "dct", "haar"}));
    tm_cmd->add_option("--size", tmf.size)->required()->check(CLI::PositiveNumber);
    tm_cmd->add_option("--out", tmf.out, "CSV path; dft writes <stem>_real.csv and <stem>_imag.csv")->required();

    GradCheckFlags gc;
    auto* gc_cmd = app.add_subcommand("grad-check", "compare analytic gradients with finite differences");
    gc_cmd->add_option("--transform", gc.transform)
        ->check(CLI::IsMember({"identity", "dft", "dct", "haar", "ensemble"}))
        ->capture_default_str();
    gc_cmd->add_option("--nodes", gc.nodes)->check(CLI::Range(std::size_t{2}, std::size_t{64}))->capture_default_str();
    gc_cmd->add_option("--dim", gc.dim)->check(CLI::PositiveNumber)->capture_default_str();
    gc_cmd->add_option("--slots", gc.slots)->check(CLI::PositiveNumber)->capture_default_str();
    gc_cmd->add_option("--layers", gc.layers)->check(CLI::PositiveNumber)->capture_default_str();
    gc_cmd->add_option("--seed", gc.seed)->capture_default_str();
    gc_cmd->add_option("--kappa", gc.kappa)->check(CLI::NonNegativeNumber)->capture_default_str();
    gc_cmd->add_flag("--squared-norm", gc.squared_norm);

    AblationFlags ab;
    auto* ab_cmd = app.add_subcommand("ablation", "train every transform scheme over several seeds");
    ab_cmd->add_option("--data", ab.data)->required()->check(CLI::ExistingFile);
    ab_cmd->add_option("--seeds", ab.seeds, "number of seeds, starting at --seed")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    ab_cmd->add_option("--out", ab.out)->capture_default_str();
    add_train_flags(ab_cmd, ab.train, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*gen_cmd) return cmd_gen_synth(gen);
        if (*train_cmd) return cmd_train(tr);
        if (*eval_cmd) return cmd_eval(ev);
        if (*tm_cmd) return cmd_transform_matrix(tmf);
        if (*gc_cmd) return cmd_grad_check(gc);
        if (*ab_cmd) return cmd_ablation(ab);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}
