#pragma once

// Model parameters, analytic gradients, Adam, early stopping and the
// finite-difference gradient checker.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mtgcn/data.hpp"
#include "mtgcn/gtcn.hpp"
#include "mtgcn/head_loss.hpp"
#include "mtgcn/random.hpp"
#include "mtgcn/transforms.hpp"

namespace mtgcn {

enum class TransformSelection { identity, dft, dct, haar, ensemble };

inline std::string_view to_string(TransformSelection s) {
    switch (s) {
    case TransformSelection::identity: return "identity";
    case TransformSelection::dft: return "dft";
    case TransformSelection::dct: return "dct";
    case TransformSelection::haar: return "haar";
    case TransformSelection::ensemble: return "ensemble";
    }
    return "?";
}

inline std::optional<TransformSelection> parse_transform_selection(std::string_view s) {
    if (s == "ensemble")
        return TransformSelection::ensemble;
    if (auto k = parse_transform_kind(s))
        return static_cast<TransformSelection>(*k);
    return std::nullopt;
}

/// Transform of each branch; the ensemble runs DFT, DCT and Haar in that order.
inline std::vector<TransformKind> branch_kinds(TransformSelection s) {
    if (s == TransformSelection::ensemble)
        return {TransformKind::dft, TransformKind::dct, TransformKind::haar};
    return {static_cast<TransformKind>(s)};
}

inline std::string_view to_string(Penalty p) { return p == Penalty::l2_norm ? "l2_norm" : "squared_l2_norm"; }

struct TrainConfig {
    std::size_t embedding_dim = 20;
    double learning_rate = 0.01;
    double kappa = 1e-4;
    std::size_t max_epochs = 1000;
    std::size_t patience = 10;
    std::uint64_t seed = 1;
    Activation activation = Activation::sigmoid;
    AdjacencyMode adjacency = AdjacencyMode::sym_normalized;
    TransformSelection transform = TransformSelection::ensemble;
    std::size_t layers = 1;
    bool binarize = false;
    bool symmetrize = false;
    Penalty penalty = Penalty::l2_norm;
    EnsembleWeights ensemble;

    void validate() const {
        if (embedding_dim < 1)
            throw DomainError("embedding dimension must be >= 1");
        if (patience < 1)
            throw DomainError("patience must be >= 1");
        if (layers < 1)
            throw DomainError("layer count must be >= 1");
        if (!(learning_rate > 0.0))
            throw DomainError("learning rate must be positive");
        if (!(kappa >= 0.0))
            throw DomainError("kappa must be nonnegative");
    }
};

/// Learnable state. `w[b][l]` is layer l of branch b; `embedding` is the
/// (N, F, T) node feature tensor X.
struct ModelParams {
    std::vector<TransformKind> branches;
    std::vector<std::vector<RealTensor>> w;
    RealTensor embedding;
    RegressionHead head;
    EnsembleWeights ensemble;

    /// Visits every learnable array in a fixed order: weights by branch and
    /// layer, then the embedding, then r.
    template <class F>
    void for_each_array(F&& f) {
        for (auto& layers : w)
            for (auto& t : layers)
                f(t.data());
        f(embedding.data());
        f(std::span<double>(head.r));
    }
    template <class F>
    void for_each_array(F&& f) const {
        for (const auto& layers : w)
            for (const auto& t : layers)
                f(t.data());
        f(embedding.data());
        f(std::span<const double>(head.r));
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for_each_array([&](auto s) { n += s.size(); });
        return n;
    }

    double norm() const {
        double s = 0.0;
        for_each_array([&](auto v) {
            for (double x : v)
                s += x * x;
        });
        return std::sqrt(s);
    }

    bool operator==(const ModelParams&) const = default;
};

inline std::vector<double> flatten(const ModelParams& p) {
    std::vector<double> out;
    out.reserve(p.parameter_count());
    p.for_each_array([&](auto s) { out.insert(out.end(), s.begin(), s.end()); });
    return out;
}

inline void unflatten(std::span<const double> flat, ModelParams& p) {
    if (flat.size() != p.parameter_count())
        throw DimensionError("unflatten: " + std::to_string(flat.size()) + " values for " +
                             std::to_string(p.parameter_count()) + " parameters");
    std::size_t k = 0;
    p.for_each_array([&](std::span<double> s) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(k), s.size(), s.begin());
        k += s.size();
    });
}

/// Zero-valued parameter set with the shapes implied by (N, T) and the config.
inline ModelParams zero_params(std::size_t nodes, std::size_t slots, const TrainConfig& cfg) {
    const std::size_t F = cfg.embedding_dim;
    ModelParams p;
    p.branches = branch_kinds(cfg.transform);
    for (auto kind : p.branches) {
        const std::size_t Tp = transform_slots(kind, slots);
        p.w.emplace_back();
        for (std::size_t l = 0; l < cfg.layers; ++l)
            p.w.back().emplace_back(F, F, Tp);
    }
    p.embedding = RealTensor(nodes, F, slots);
    p.head.r.assign(2 * F, 0.0);
    p.ensemble = cfg.ensemble;
    return p;
}

/// Glorot-uniform initialisation: every frontal slice of shape (a, b) draws
/// from U[-sqrt(6/(a+b)), sqrt(6/(a+b))]; r is treated as a (2F, 1) matrix.
inline ModelParams init_params(std::size_t nodes, std::size_t slots, const TrainConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ModelParams p = zero_params(nodes, slots, cfg);
    Rng rng(seed);
    auto fill_slices = [&](RealTensor& x) {
        const double bound = std::sqrt(6.0 / static_cast<double>(x.rows() + x.cols()));
        for (auto& v : x.data())
            v = rng.uniform(-bound, bound);
    };
    for (auto& layers : p.w)
        for (auto& t : layers)
            fill_slices(t);
    fill_slices(p.embedding);
    const double bound = std::sqrt(6.0 / static_cast<double>(p.head.r.size() + 1));
    for (auto& v : p.head.r)
        v = rng.uniform(-bound, bound);
    return p;
}

inline ModelParams init_params(const DynamicGraphDataset& ds, const TrainConfig& cfg, std::uint64_t seed) {
    return init_params(ds.n_nodes, ds.n_slots, cfg, seed);
}

/// Throws DimensionError naming expected and actual shapes if `p` does not fit (N, T, cfg).
inline void check_param_shapes(const ModelParams& p, std::size_t nodes, std::size_t slots, const TrainConfig& cfg) {
    const auto expect = zero_params(nodes, slots, cfg);
    if (p.embedding.rows() != nodes)
        throw DimensionError("parameters are for " + std::to_string(p.embedding.rows()) +
                             " nodes, dataset has " + std::to_string(nodes));
    if (p.embedding.slots() != slots)
        throw DimensionError("parameters are for " + std::to_string(p.embedding.slots()) +
                             " slots, dataset has " + std::to_string(slots));
    bool ok = p.branches == expect.branches && p.w.size() == expect.w.size() &&
              p.embedding.same_shape(expect.embedding) && p.head.r.size() == expect.head.r.size();
    for (std::size_t b = 0; ok && b < p.w.size(); ++b) {
        ok = p.w[b].size() == expect.w[b].size();
        for (std::size_t l = 0; ok && l < p.w[b].size(); ++l)
            ok = p.w[b][l].same_shape(expect.w[b][l]);
    }
    if (!ok)
        throw DimensionError("parameter shapes do not match the configuration");
}

// ---------------------------------------------------------------------------
// model
// ---------------------------------------------------------------------------

struct ObjectiveGradient {
    double loss = 0.0;
    ModelParams grad;
};

/// A dataset's preprocessed adjacency bound to the transforms of a config.
/// Evaluates the representation, predictions, objective and its gradient.
class Model {
public:
    Model(const RealTensor& raw_adjacency, const TrainConfig& cfg)
        : cfg_(cfg), adjacency_(preprocess_adjacency(raw_adjacency, cfg.adjacency)) {
        cfg_.validate();
        const std::size_t T = raw_adjacency.slots();
        for (auto kind : branch_kinds(cfg_.transform)) {
            auto m = build_transform(kind, transform_slots(kind, T));
            if (m.is_real())
                branches_.push_back({m, detail::transform_adjacency<double>(adjacency_.a, m)});
            else
                branches_.push_back({m, detail::transform_adjacency<cplx>(adjacency_.a, m)});
        }
    }

    /// Uses only the training observations of `ds` for the adjacency.
    Model(const DynamicGraphDataset& ds, const TrainConfig& cfg)
        : Model(build_adjacency(ds, {cfg.binarize, cfg.symmetrize}), cfg) {}

    std::size_t nodes() const noexcept { return adjacency_.a.rows(); }
    std::size_t slots() const noexcept { return adjacency_.a.slots(); }
    const TrainConfig& config() const noexcept { return cfg_; }
    const AdjacencyTensor& adjacency() const noexcept { return adjacency_; }

    /// Representation tensor H (N, F, T); the ensemble-weighted sum for several branches.
    RealTensor represent(const ModelParams& p) const {
        check(p);
        std::vector<RealTensor> hs;
        for (std::size_t b = 0; b < branches_.size(); ++b)
            hs.push_back(std::visit([&](const auto& a_hat) { return branch_forward(a_hat, b, p).back().h; },
                                    branches_[b].a_hat));
        return combine(hs, p);
    }

    std::vector<double> predict(const ModelParams& p, std::span<const LinkObservation> obs) const {
        return estimate_weights(represent(p), obs, p.head);
    }

    double penalty_value(const ModelParams& p) const { return p.norm(); }

    double objective(const ModelParams& p, std::span<const LinkObservation> obs) const {
        return loss(obs, predict(p, obs), p.norm(), cfg_.kappa, cfg_.penalty);
    }

    /// Loss and its exact gradient with respect to every learnable scalar.
    ObjectiveGradient gradient(const ModelParams& p, std::span<const LinkObservation> obs) const {
        check(p);
        const std::size_t F = cfg_.embedding_dim;
        using Caches = std::variant<std::vector<detail::LayerCache<double>>, std::vector<detail::LayerCache<cplx>>>;
        std::vector<Caches> caches;
        std::vector<RealTensor> hs;
        for (std::size_t b = 0; b < branches_.size(); ++b) {
            std::visit(
                [&](const auto& a_hat) {
                    auto c = branch_forward(a_hat, b, p);
                    hs.push_back(c.back().h);
                    caches.emplace_back(std::move(c));
                },
                branches_[b].a_hat);
        }
        const RealTensor h = combine(hs, p);

        ObjectiveGradient out;
        out.grad = zero_params(nodes(), slots(), cfg_);
        out.grad.ensemble = p.ensemble;
        RealTensor dh(h.rows(), h.cols(), h.slots());
        double sse = 0.0;
        for (const auto& o : obs) {
            const double yhat = estimate_weight(h, o, p.head);
            const double r = o.y - yhat;
            sse += r * r;
            const double g = -2.0 * r; // d(r^2)/d(yhat)
            const std::size_t t = o.t - 1;
            for (std::size_t f = 0; f < F; ++f) {
                out.grad.head.r[f] += g * h(o.i, f, t);
                out.grad.head.r[F + f] += g * h(o.j, f, t);
                dh(o.i, f, t) += g * p.head.r[f];
                dh(o.j, f, t) += g * p.head.r[F + f];
            }
        }

        for (std::size_t b = 0; b < branches_.size(); ++b) {
            const double wb = branch_weight(b, p);
            RealTensor dhb = dh;
            for (auto& v : dhb.data())
                v *= wb;
            std::visit(
                [&](const auto& cache) {
                    using S = typename std::decay_t<decltype(cache)>::value_type::scalar_type;
                    const auto& a_hat = std::get<Tensor3<S>>(branches_[b].a_hat);
                    for (std::size_t l = cache.size(); l-- > 0;) {
                        auto g = detail::layer_backward(cache[l], a_hat, branches_[b].m, cfg_.activation, dhb);
                        out.grad.w[b][l] = std::move(g.dw);
                        dhb = std::move(g.dx);
                    }
                },
                caches[b]);
            for (std::size_t k = 0; k < dhb.size(); ++k)
                out.grad.embedding.data()[k] += dhb.data()[k];
        }

        // penalty
        const double norm = p.norm();
        double reg = 0.0;
        double coeff = 0.0;
        if (cfg_.penalty == Penalty::l2_norm) {
            reg = norm;
            coeff = norm > 0.0 ? cfg_.kappa / norm : 0.0; // subgradient 0 at the origin
        } else {
            reg = norm * norm;
            coeff = 2.0 * cfg_.kappa;
        }
        if (coeff != 0.0) {
            auto gflat = flatten(out.grad);
            const auto pflat = flatten(p);
            for (std::size_t k = 0; k < gflat.size(); ++k)
                gflat[k] += coeff * pflat[k];
            unflatten(gflat, out.grad);
        }
        out.loss = sse + cfg_.kappa * reg;
        if (!std::isfinite(out.loss))
            throw NumericError("loss", "non-finite objective");
        return out;
    }

private:
    struct Branch {
        TransformMatrix m;
        std::variant<RealTensor, ComplexTensor> a_hat;
    };

    void check(const ModelParams& p) const { check_param_shapes(p, nodes(), slots(), cfg_); }

    double branch_weight(std::size_t b, const ModelParams& p) const {
        if (branches_.size() == 1)
            return 1.0;
        switch (branches_[b].m.kind()) {
        case TransformKind::dft: return p.ensemble.alpha();
        case TransformKind::dct: return p.ensemble.beta();
        case TransformKind::haar: return p.ensemble.chi();
        default: return 0.0;
        }
    }

    RealTensor combine(std::vector<RealTensor>& hs, const ModelParams& p) const {
        if (hs.size() == 1)
            return std::move(hs.front());
        return ensemble_combine(hs[0], hs[1], hs[2], p.ensemble);
    }

    template <Scalar S>
    std::vector<detail::LayerCache<S>> branch_forward(const Tensor3<S>& a_hat, std::size_t b,
                                                      const ModelParams& p) const {
        std::vector<detail::LayerCache<S>> caches;
        const RealTensor* x = &p.embedding;
        for (const auto& w : p.w[b]) {
            caches.push_back(detail::layer_forward(a_hat, *x, w, branches_[b].m, cfg_.activation));
            x = &caches.back().h;
        }
        return caches;
    }

    TrainConfig cfg_;
    AdjacencyTensor adjacency_;
    std::vector<Branch> branches_;
};

inline ObjectiveGradient compute_gradients(const Model& model, const ModelParams& p,
                                           std::span<const LinkObservation> batch) {
    return model.gradient(p, batch);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamHyper {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t step = 0;
};

/// One bias-corrected Adam update in place.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
                      const AdamHyper& hp) {
    if (grads.size() != params.size())
        throw DimensionError("adam_step: gradient size " + std::to_string(grads.size()) + " != parameter size " +
                             std::to_string(params.size()));
    if (state.m.empty() && state.step == 0) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size() || state.v.size() != params.size())
        throw DimensionError("adam_step: optimizer state does not match parameters");
    ++state.step;
    const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double g = grads[k];
        state.m[k] = hp.beta1 * state.m[k] + (1.0 - hp.beta1) * g;
        state.v[k] = hp.beta2 * state.v[k] + (1.0 - hp.beta2) * g * g;
        const double m_hat = state.m[k] / c1;
        const double v_hat = state.v[k] / c2;
        params[k] -= hp.learning_rate * m_hat / (std::sqrt(v_hat) + hp.epsilon);
    }
}

inline void adam_step(ModelParams& p, const ModelParams& grads, AdamState& state, const AdamHyper& hp) {
    auto flat = flatten(p);
    adam_step(flat, flatten(grads), state, hp);
    unflatten(flat, p);
}

// ---------------------------------------------------------------------------
// early stopping and the generic epoch loop
// ---------------------------------------------------------------------------

/// Stops after `patience` consecutive epochs whose validation error exceeds
/// the previous epoch's.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience) : patience_(patience) {
        if (patience < 1)
            throw DomainError("patience must be >= 1");
    }

    /// Feeds one epoch's validation error; returns true when training should stop.
    bool update(double value) {
        if (seen_ && value > previous_)
            ++increases_;
        else
            increases_ = 0;
        previous_ = value;
        seen_ = true;
        return increases_ >= patience_;
    }

    std::size_t consecutive_increases() const noexcept { return increases_; }

private:
    std::size_t patience_;
    std::size_t increases_ = 0;
    double previous_ = 0.0;
    bool seen_ = false;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double validation_mae = 0.0;

    bool operator==(const EpochRecord&) const = default;
};

template <class Grad>
struct Evaluation {
    double train_loss = 0.0;
    double validation_mae = 0.0;
    Grad gradient;
};

template <class Params>
struct FitResult {
    Params params; // at the best validation epoch
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    bool stopped_early = false;
};

/// Epoch loop: evaluate the current parameters, record, check the stopping
/// rule, then update. Returns the parameters of the best validation epoch.
///
/// `evaluate(const Params&) -> Evaluation<G>`, `update(Params&, const G&)`.
template <class Params, class Evaluate, class Update>
auto fit(Params params, Evaluate&& evaluate, Update&& update, std::size_t max_epochs, std::size_t patience)
    -> FitResult<Params> {
    FitResult<Params> result{params, {}, 0, false};
    EarlyStopping stopper(patience);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t epoch = 1; epoch <= max_epochs; ++epoch) {
        auto ev = evaluate(std::as_const(params));
        if (!std::isfinite(ev.train_loss) || !std::isfinite(ev.validation_mae))
            throw NumericError("training", "divergence at epoch " + std::to_string(epoch) + " (loss " +
                                               std::to_string(ev.train_loss) + ")");
        result.history.push_back({epoch, ev.train_loss, ev.validation_mae});
        if (ev.validation_mae < best) {
            best = ev.validation_mae;
            result.params = params;
            result.best_epoch = epoch;
        }
        if (stopper.update(ev.validation_mae)) {
            result.stopped_early = true;
            break;
        }
        update(params, ev.gradient);
    }
    return result;
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

struct TrainResult {
    ModelParams params;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    bool stopped_early = false;
};

/// Full-batch Adam on the training split, monitored by validation MAE (train
/// MAE when the validation split is empty). Parameters come from the seed in `cfg`.
inline TrainResult train(const DynamicGraphDataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    if (!ds.is_split())
        throw DomainError("dataset has no training split");
    ds.check_splits();
    const Model model(ds, cfg);
    const auto train_obs = ds.train_set();
    const auto val_obs = ds.validation.empty() ? train_obs : ds.validation_set();
    const AdamHyper hp{cfg.learning_rate};
    AdamState state;

    auto evaluate = [&](const ModelParams& p) {
        Evaluation<ModelParams> ev;
        auto og = model.gradient(p, train_obs);
        ev.train_loss = og.loss;
        ev.gradient = std::move(og.grad);
        ev.validation_mae = mae(residuals(val_obs, model.predict(p, val_obs)));
        return ev;
    };
    auto update = [&](ModelParams& p, const ModelParams& g) { adam_step(p, g, state, hp); };

    auto fr = fit(init_params(ds, cfg, cfg.seed), evaluate, update, cfg.max_epochs, cfg.patience);
    return {std::move(fr.params), std::move(fr.history), fr.best_epoch, fr.stopped_early};
}

// ---------------------------------------------------------------------------
// gradient check
// ---------------------------------------------------------------------------

struct GradCheckOptions {
    TransformSelection transform = TransformSelection::dft;
    std::size_t nodes = 5;
    std::size_t features = 3;
    std::size_t slots = 4;
    std::size_t layers = 1;
    std::uint64_t seed = 1;
    double kappa = 1e-2;
    Penalty penalty = Penalty::l2_norm;
    Activation activation = Activation::sigmoid;
    double step = 1e-5;
    double tolerance = 1e-4;
};

struct GradCheckGroup {
    std::string name;
    std::size_t count = 0;
    double max_relative_error = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckGroup> groups;
    double max_relative_error = 0.0;
    bool passed = false;
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps gradients that vanish up
/// to round-off from producing meaningless ratios.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Random small model and dataset; compares analytic gradients with central
/// differences for every scalar parameter.
inline GradCheckReport grad_check(const GradCheckOptions& opt) {
    TrainConfig cfg;
    cfg.embedding_dim = opt.features;
    cfg.transform = opt.transform;
    cfg.layers = opt.layers;
    cfg.kappa = opt.kappa;
    cfg.penalty = opt.penalty;
    cfg.activation = opt.activation;
    cfg.seed = opt.seed;

    // random observations (about a third of the ordered pairs per slot), all used for training
    Rng rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
    DynamicGraphDataset ds;
    ds.n_nodes = opt.nodes;
    ds.n_slots = opt.slots;
    for (std::size_t t = 1; t <= opt.slots; ++t)
        for (std::size_t i = 0; i < opt.nodes; ++i)
            for (std::size_t j = 0; j < opt.nodes; ++j)
                if (i != j && rng.uniform() < 0.35)
                    ds.observations.push_back({t, i, j, rng.uniform(0.05, 1.0)});
    for (std::size_t k = 0; k < ds.observations.size(); ++k)
        ds.train.push_back(k);

    const Model model(ds, cfg);
    const auto obs = ds.train_set();
    const ModelParams p = init_params(ds, cfg, opt.seed);
    const auto analytic = flatten(model.gradient(p, obs).grad);

    // group boundaries follow ModelParams::for_each_array order
    std::vector<std::pair<std::string, std::size_t>> groups;
    for (std::size_t b = 0; b < p.w.size(); ++b)
        for (std::size_t l = 0; l < p.w[b].size(); ++l)
            groups.emplace_back("w." + std::string(to_string(p.branches[b])) + "." + std::to_string(l),
                                p.w[b][l].size());
    groups.emplace_back("embedding", p.embedding.size());
    groups.emplace_back("r", p.head.r.size());

    GradCheckReport report;
    auto flat = flatten(p);
    ModelParams probe = p;
    std::size_t k = 0;
    for (const auto& [name, count] : groups) {
        GradCheckGroup g{name, count, 0.0};
        for (std::size_t e = 0; e < count; ++e, ++k) {
            const double saved = flat[k];
            flat[k] = saved + opt.step;
            unflatten(flat, probe);
            const double up = model.objective(probe, obs);
            flat[k] = saved - opt.step;
            unflatten(flat, probe);
            const double down = model.objective(probe, obs);
            flat[k] = saved;
            const double numeric = (up - down) / (2.0 * opt.step);
            g.max_relative_error = std::max(g.max_relative_error, relative_error(analytic[k], numeric));
        }
        report.max_relative_error = std::max(report.max_relative_error, g.max_relative_error);
        report.groups.push_back(std::move(g));
    }
    report.passed = report.max_relative_error <= opt.tolerance;
    return report;
}

} // namespace mtgcn
