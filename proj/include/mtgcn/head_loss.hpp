#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mtgcn/error.hpp"
#include "mtgcn/tensor.hpp"

namespace mtgcn {

/// One observed link weight y at time slot t (one-based) from node i to node j.
struct LinkObservation {
    std::size_t t = 1;
    std::size_t i = 0;
    std::size_t j = 0;
    double y = 0.0;

    bool operator==(const LinkObservation&) const = default;
};

/// Aggregation vector r of length 2F: the first F entries weight the source
/// embedding, the last F the destination embedding.
struct RegressionHead {
    std::vector<double> r;

    std::size_t features() const noexcept { return r.size() / 2; }
    bool operator==(const RegressionHead&) const = default;
};

/// ŷ = [h_i^t || h_j^t] · r
inline double estimate_weight(const RealTensor& h, const LinkObservation& obs, const RegressionHead& head) {
    const std::size_t F = h.cols();
    if (head.r.size() != 2 * F)
        throw DimensionError("regression head has " + std::to_string(head.r.size()) + " entries, expected " +
                             std::to_string(2 * F));
    if (obs.t < 1 || obs.t > h.slots() || obs.i >= h.rows() || obs.j >= h.rows())
        throw DomainError("observation (t=" + std::to_string(obs.t) + ", i=" + std::to_string(obs.i) +
                          ", j=" + std::to_string(obs.j) + ") outside representation " + h.shape_string());
    const std::size_t t = obs.t - 1;
    double y = 0.0;
    for (std::size_t f = 0; f < F; ++f)
        y += h(obs.i, f, t) * head.r[f];
    for (std::size_t f = 0; f < F; ++f)
        y += h(obs.j, f, t) * head.r[F + f];
    return y;
}

inline std::vector<double> estimate_weights(const RealTensor& h, std::span<const LinkObservation> obs,
                                            const RegressionHead& head) {
    std::vector<double> out;
    out.reserve(obs.size());
    for (const auto& o : obs)
        out.push_back(estimate_weight(h, o, head));
    return out;
}

/// Form of the parameter penalty: the plain L2 norm ||Θ||, or its square.
enum class Penalty { l2_norm, squared_l2_norm };

/// Σ (y - ŷ)^2 + κ·||Θ|| (or κ·||Θ||^2 for Penalty::squared_l2_norm).
inline double loss(std::span<const LinkObservation> obs, std::span<const double> predictions, double param_norm,
                   double kappa, Penalty penalty = Penalty::l2_norm) {
    if (obs.size() != predictions.size())
        throw DimensionError("loss: " + std::to_string(obs.size()) + " observations but " +
                             std::to_string(predictions.size()) + " predictions");
    double sse = 0.0;
    for (std::size_t k = 0; k < obs.size(); ++k) {
        const double r = obs[k].y - predictions[k];
        sse += r * r;
    }
    const double reg = penalty == Penalty::l2_norm ? param_norm : param_norm * param_norm;
    return sse + kappa * reg;
}

inline double mae(std::span<const double> residuals) {
    if (residuals.empty())
        throw DomainError("mae of an empty set");
    double s = 0.0;
    for (double r : residuals)
        s += std::abs(r);
    return s / static_cast<double>(residuals.size());
}

inline double rmse(std::span<const double> residuals) {
    if (residuals.empty())
        throw DomainError("rmse of an empty set");
    double s = 0.0;
    for (double r : residuals)
        s += r * r;
    return std::sqrt(s / static_cast<double>(residuals.size()));
}

inline std::vector<double> residuals(std::span<const LinkObservation> obs, std::span<const double> predictions) {
    if (obs.size() != predictions.size())
        throw DimensionError("residuals: size mismatch");
    std::vector<double> out(obs.size());
    for (std::size_t k = 0; k < obs.size(); ++k)
        out[k] = obs[k].y - predictions[k];
    return out;
}

struct Metrics {
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t count = 0;
};

inline Metrics evaluate_metrics(std::span<const LinkObservation> obs, std::span<const double> predictions) {
    const auto res = residuals(obs, predictions);
    return {mae(res), rmse(res), res.size()};
}

} // namespace mtgcn
