#pragma once

// Graph tensor convolution: H = sigma(A * X * W) with * the M-product.

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtgcn/tensor.hpp"
#include "mtgcn/transforms.hpp"

namespace mtgcn {

// ---------------------------------------------------------------------------
// activation
// ---------------------------------------------------------------------------

enum class Activation { sigmoid, relu, identity };

inline std::string_view to_string(Activation a) {
    switch (a) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
    }
    return "?";
}

inline std::optional<Activation> parse_activation(std::string_view s) {
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "relu") return Activation::relu;
    if (s == "identity") return Activation::identity;
    return std::nullopt;
}

inline double activate(Activation a, double z) {
    switch (a) {
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::identity: return z;
    }
    return z;
}

/// d sigma / dz expressed through the pre-activation z.
inline double activate_derivative(Activation a, double z) {
    switch (a) {
    case Activation::sigmoid: {
        const double s = 1.0 / (1.0 + std::exp(-z));
        return s * (1.0 - s);
    }
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::identity: return 1.0;
    }
    return 1.0;
}

// ---------------------------------------------------------------------------
// adjacency preprocessing
// ---------------------------------------------------------------------------

enum class AdjacencyMode { raw_self_loops, sym_normalized };

inline std::string_view to_string(AdjacencyMode m) {
    return m == AdjacencyMode::raw_self_loops ? "raw_self_loops" : "sym_normalized";
}

inline std::optional<AdjacencyMode> parse_adjacency_mode(std::string_view s) {
    if (s == "raw_self_loops") return AdjacencyMode::raw_self_loops;
    if (s == "sym_normalized") return AdjacencyMode::sym_normalized;
    return std::nullopt;
}

struct AdjacencyTensor {
    RealTensor a;
    AdjacencyMode mode = AdjacencyMode::sym_normalized;
};

/// Adds self loops to every slice; sym_normalized additionally rescales each
/// slice to D^-1/2 (A^t + I) D^-1/2 with D the row sums of A^t + I.
inline AdjacencyTensor preprocess_adjacency(const RealTensor& raw, AdjacencyMode mode) {
    if (raw.rows() != raw.cols())
        throw DimensionError("adjacency slices must be square, got " + raw.shape_string());
    for (double v : raw.data())
        if (!(v >= 0.0) || !std::isfinite(v))
            throw DomainError("adjacency weights must be finite and nonnegative");
    const std::size_t N = raw.rows();
    RealTensor a = raw;
    for (std::size_t t = 0; t < a.slots(); ++t)
        for (std::size_t i = 0; i < N; ++i)
            a(i, i, t) += 1.0;
    if (mode == AdjacencyMode::sym_normalized) {
        std::vector<double> inv_sqrt_deg(N);
        for (std::size_t t = 0; t < a.slots(); ++t) {
            for (std::size_t i = 0; i < N; ++i) {
                double deg = 0.0;
                for (std::size_t j = 0; j < N; ++j)
                    deg += a(i, j, t);
                inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
            }
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j)
                    if (a(i, j, t) != 0.0)
                        a(i, j, t) *= inv_sqrt_deg[i] * inv_sqrt_deg[j];
        }
    }
    return {std::move(a), mode};
}

// ---------------------------------------------------------------------------
// layer
// ---------------------------------------------------------------------------

struct GtcnLayerParams {
    RealTensor w; // (F_in, F_out, T'), T' = transform size
    Activation activation = Activation::sigmoid;
};

inline void require_finite(std::span<const double> v, const std::string& stage) {
    for (double x : v)
        if (!std::isfinite(x))
            throw NumericError(stage, "non-finite value");
}

template <Scalar S>
void require_finite(const Tensor3<S>& x, const std::string& stage) {
    for (const auto& v : x.data())
        if (!is_finite(v))
            throw NumericError(stage, "non-finite value");
}

/// The transform operates on m.size() slots; data with `slots` slots may be
/// shorter only when Haar padding applies.
inline void check_transform_slots(const TransformMatrix& m, std::size_t slots) {
    if (m.size() != slots && m.size() != transform_slots(m.kind(), slots))
        throw DimensionError("transform of size " + std::to_string(m.size()) + " does not fit " +
                             std::to_string(slots) + " time slots");
}

namespace detail {

/// Maximum tolerated imaginary residue after the inverse transform, relative
/// to the magnitude of the real part (floor 1).
inline constexpr double kImagResidueTolerance = 1e-8;

template <Scalar S>
struct LayerCache {
    using scalar_type = S;
    Tensor3<S> x_hat; // X ×3 M (padded)
    Tensor3<S> w_hat; // W ×3 M
    Tensor3<S> p;     // Â ⊗ X̂
    RealTensor z;     // real pre-activation, truncated to the data slots
    RealTensor h;     // sigma(z)
    double imag_residue = 0.0;
};

/// One layer given the already transformed adjacency `a_hat` (padded slots).
template <Scalar S>
LayerCache<S> layer_forward(const Tensor3<S>& a_hat, const RealTensor& x, const RealTensor& w,
                            const TransformMatrix& m, Activation act) {
    const std::size_t slots = x.slots();
    const std::size_t padded = m.size();
    if (a_hat.slots() != padded || w.slots() != padded)
        throw DimensionError("gtcn layer: adjacency " + a_hat.shape_string() + " / weights " +
                             w.shape_string() + " do not match transform size " + std::to_string(padded));
    if (a_hat.cols() != x.rows())
        throw DimensionError("gtcn layer: adjacency " + a_hat.shape_string() + " and features " +
                             x.shape_string() + " differ in node count");
    if (w.rows() != x.cols())
        throw DimensionError("gtcn layer: features " + x.shape_string() + " and weights " +
                             w.shape_string() + " differ in feature count");
    const auto& M = m.forward<S>();
    const auto& Minv = m.inverse<S>();

    LayerCache<S> c;
    c.x_hat = m_transform(as_scalar<S>(pad_slots(x, padded)), M);
    c.w_hat = m_transform(as_scalar<S>(w), M);
    c.p = facewise_product(a_hat, c.x_hat);
    require_finite(c.p, "spatial aggregation");
    auto q = facewise_product(c.p, c.w_hat);
    auto zc = truncate_slots(m_transform(q, Minv), slots);
    require_finite(zc, "inverse transform");
    if constexpr (is_complex_v<S>) {
        double scale = 1.0;
        for (const auto& v : zc.data())
            scale = std::max(scale, std::abs(v.real()));
        c.imag_residue = imag_residue(zc);
        if (c.imag_residue > kImagResidueTolerance * scale)
            throw NumericError("inverse transform",
                               "imaginary residue " + std::to_string(c.imag_residue) + " before activation");
        c.z = real_part_unchecked(zc);
    } else {
        c.z = std::move(zc);
    }
    c.h = RealTensor(c.z.rows(), c.z.cols(), c.z.slots());
    for (std::size_t k = 0; k < c.z.size(); ++k)
        c.h.data()[k] = activate(act, c.z.data()[k]);
    require_finite(c.h, "activation");
    return c;
}

template <Scalar S>
RealTensor real_adjoint_transform(const Tensor3<S>& g, const Matrix<S>& M_adj) {
    if constexpr (is_complex_v<S>)
        return real_part_unchecked(m_transform(g, M_adj));
    else
        return m_transform(g, M_adj);
}

struct LayerGrad {
    RealTensor dx; // (N, F_in, T)
    RealTensor dw; // (F_in, F_out, T')
};

/// Reverse pass through layer_forward. Complex stages are treated as real
/// linear maps: the adjoint of Y = X ×3 B is G ↦ G ×3 B^H, the real part is
/// taken where a real parameter enters.
template <Scalar S>
LayerGrad layer_backward(const LayerCache<S>& c, const Tensor3<S>& a_hat, const TransformMatrix& m,
                         Activation act, const RealTensor& dh) {
    const std::size_t padded = m.size();
    RealTensor dz(dh.rows(), dh.cols(), dh.slots());
    for (std::size_t k = 0; k < dz.size(); ++k)
        dz.data()[k] = dh.data()[k] * activate_derivative(act, c.z.data()[k]);
    const auto M_adj = adjoint(m.forward<S>());
    const auto Minv_adj = adjoint(m.inverse<S>());

    auto dq = m_transform(as_scalar<S>(pad_slots(dz, padded)), Minv_adj);
    auto dp = facewise_adjoint_right(dq, c.w_hat);
    auto dw_hat = facewise_adjoint_left(c.p, dq);
    auto dx_hat = facewise_adjoint_left(a_hat, dp);

    LayerGrad g;
    g.dw = real_adjoint_transform(dw_hat, M_adj);
    g.dx = truncate_slots(real_adjoint_transform(dx_hat, M_adj), dh.slots());
    require_finite(g.dw.data(), "weight gradient");
    require_finite(g.dx.data(), "feature gradient");
    return g;
}

template <Scalar S>
Tensor3<S> transform_adjacency(const RealTensor& a, const TransformMatrix& m) {
    return m_transform(as_scalar<S>(pad_slots(a, m.size())), m.forward<S>());
}

} // namespace detail

/// H = sigma(A * X * W), evaluated as ((Â ⊗ X̂ ⊗ Ŵ) ×3 M^-1) with hats = ×3 M.
///
/// A and X carry T slots, W and M carry T' slots. T' > T only for Haar, in
/// which case A and X are zero-padded and H is truncated back to T.
inline RealTensor gtcn_forward(const AdjacencyTensor& a, const RealTensor& x, const GtcnLayerParams& p,
                               const TransformMatrix& m) {
    if (a.a.slots() != x.slots())
        throw DimensionError("gtcn_forward: adjacency " + a.a.shape_string() + " and features " +
                             x.shape_string() + " differ in slot count");
    check_transform_slots(m, x.slots());
    if (m.is_real())
        return detail::layer_forward(detail::transform_adjacency<double>(a.a, m), x, p.w, m, p.activation).h;
    return detail::layer_forward(detail::transform_adjacency<cplx>(a.a, m), x, p.w, m, p.activation).h;
}

/// A stack of layers sharing one transform; layer l+1 consumes the output of layer l.
inline RealTensor gtcn_forward(const AdjacencyTensor& a, const RealTensor& x,
                               std::span<const GtcnLayerParams> layers, const TransformMatrix& m) {
    RealTensor h = x;
    for (const auto& layer : layers)
        h = gtcn_forward(a, h, layer, m);
    return h;
}

/// Largest number of nodes the message-passing oracle is meant for.
inline constexpr std::size_t kOracleMaxNodes = 64;

/// Entrywise evaluation of the GTCN layer by explicit loops over time, nodes,
/// neighbours and features. Serves as an independent check of gtcn_forward.
inline RealTensor message_passing_oracle(const AdjacencyTensor& a, const RealTensor& x,
                                         const GtcnLayerParams& p, const TransformMatrix& m) {
    const std::size_t N = x.rows(), Fin = x.cols(), T = x.slots();
    const std::size_t Tp = m.size();
    if (N > kOracleMaxNodes)
        throw DomainError("message_passing_oracle is limited to " + std::to_string(kOracleMaxNodes) + " nodes");
    if (a.a.rows() != N || a.a.cols() != N || a.a.slots() != T)
        throw DimensionError("message_passing_oracle: adjacency " + a.a.shape_string() + " vs features " +
                             x.shape_string());
    if (p.w.rows() != Fin || p.w.slots() != Tp)
        throw DimensionError("message_passing_oracle: weights " + p.w.shape_string());
    check_transform_slots(m, T);
    const std::size_t Fout = p.w.cols();
    const auto& M = m.forward<cplx>();
    const auto& Minv = m.inverse<cplx>();

    auto a_at = [&](std::size_t i, std::size_t j, std::size_t k) { return k < T ? a.a(i, j, k) : 0.0; };
    auto x_at = [&](std::size_t j, std::size_t f, std::size_t k) { return k < T ? x(j, f, k) : 0.0; };

    // neighbourhoods: j != i with a_ij^k != 0 for some k
    std::vector<std::vector<std::size_t>> neighbours(N);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            if (j == i)
                continue;
            for (std::size_t k = 0; k < T; ++k)
                if (a.a(i, j, k) != 0.0) {
                    neighbours[i].push_back(j);
                    break;
                }
        }

    // g[i][f][t]: transformed-domain node output
    std::vector<cplx> g(N * Fout * Tp);
    for (std::size_t t = 0; t < Tp; ++t) {
        for (std::size_t i = 0; i < N; ++i) {
            auto members = neighbours[i];
            members.push_back(i);
            std::vector<cplx> msg(Fin); // c_i^t
            for (std::size_t j : members) {
                cplx phi_a = 0.0;
                for (std::size_t k = 0; k < Tp; ++k)
                    phi_a += M(t, k) * a_at(i, j, k);
                for (std::size_t f = 0; f < Fin; ++f) {
                    cplx phi_x = 0.0;
                    for (std::size_t k = 0; k < Tp; ++k)
                        phi_x += M(t, k) * x_at(j, f, k);
                    msg[f] += phi_a * phi_x;
                }
            }
            for (std::size_t fo = 0; fo < Fout; ++fo) {
                cplx acc = 0.0;
                for (std::size_t fi = 0; fi < Fin; ++fi) {
                    cplx w_hat = 0.0;
                    for (std::size_t k = 0; k < Tp; ++k)
                        w_hat += M(t, k) * p.w(fi, fo, k);
                    acc += msg[fi] * w_hat;
                }
                g[(i * Fout + fo) * Tp + t] = acc;
            }
        }
    }

    RealTensor h(N, Fout, T);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t fo = 0; fo < Fout; ++fo)
            for (std::size_t t = 0; t < T; ++t) {
                cplx z = 0.0;
                for (std::size_t k = 0; k < Tp; ++k)
                    z += Minv(t, k) * g[(i * Fout + fo) * Tp + k];
                if (std::abs(z.imag()) > detail::kImagResidueTolerance * std::max(1.0, std::abs(z.real())))
                    throw NumericError("message_passing_oracle", "imaginary residue before activation");
                h(i, fo, t) = activate(p.activation, z.real());
            }
    return h;
}

// ---------------------------------------------------------------------------
// ensemble
// ---------------------------------------------------------------------------

/// Nonnegative weights for the DFT, DCT and Haar representations; sum to 1.
class EnsembleWeights {
public:
    EnsembleWeights() = default;
    EnsembleWeights(double alpha, double beta, double chi) : alpha_(alpha), beta_(beta), chi_(chi) {
        if (!(alpha >= 0.0 && beta >= 0.0 && chi >= 0.0))
            throw DomainError("ensemble weights must be nonnegative");
        if (std::abs(alpha + beta + chi - 1.0) > 1e-12)
            throw DomainError("ensemble weights must sum to 1");
    }

    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return beta_; }
    double chi() const noexcept { return chi_; }

    bool operator==(const EnsembleWeights&) const = default;

private:
    double alpha_ = 1.0 / 3.0;
    double beta_ = 1.0 / 3.0;
    double chi_ = 1.0 / 3.0;
};

inline RealTensor ensemble_combine(const RealTensor& h_dft, const RealTensor& h_dct, const RealTensor& h_haar,
                                   const EnsembleWeights& w) {
    if (!h_dft.same_shape(h_dct) || !h_dft.same_shape(h_haar))
        throw DimensionError("ensemble_combine: shapes " + h_dft.shape_string() + ", " + h_dct.shape_string() +
                             ", " + h_haar.shape_string());
    RealTensor out(h_dft.rows(), h_dft.cols(), h_dft.slots());
    for (std::size_t k = 0; k < out.size(); ++k)
        out.data()[k] = w.alpha() * h_dft.data()[k] + w.beta() * h_dct.data()[k] + w.chi() * h_haar.data()[k];
    return out;
}

} // namespace mtgcn
