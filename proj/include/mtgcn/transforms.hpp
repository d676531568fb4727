#pragma once

// Temporal transform matrices (identity, DFT, DCT-II, Haar) and the
// M-product operations that need an invertible M.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "mtgcn/tensor.hpp"

namespace mtgcn {

enum class TransformKind { identity, dft, dct, haar };

inline std::string_view to_string(TransformKind k) {
    switch (k) {
    case TransformKind::identity: return "identity";
    case TransformKind::dft: return "dft";
    case TransformKind::dct: return "dct";
    case TransformKind::haar: return "haar";
    }
    return "?";
}

inline std::optional<TransformKind> parse_transform_kind(std::string_view s) {
    if (s == "identity") return TransformKind::identity;
    if (s == "dft") return TransformKind::dft;
    if (s == "dct") return TransformKind::dct;
    if (s == "haar") return TransformKind::haar;
    return std::nullopt;
}

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

/// Number of time slots a transform of this kind operates on for a dataset of
/// `slots` slots. Only Haar pads (to the next power of two).
inline std::size_t transform_slots(TransformKind k, std::size_t slots) {
    return k == TransformKind::haar ? next_power_of_two(slots) : slots;
}

/// Induced infinity norm (max absolute row sum) of a*b - I.
template <Scalar S>
double identity_defect(const Matrix<S>& a, const Matrix<S>& b) {
    const auto p = matmul(a, b);
    double worst = 0.0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < p.cols(); ++j)
            row += std::abs(p(i, j) - S(i == j ? 1.0 : 0.0));
        worst = std::max(worst, row);
    }
    return worst;
}

/// An invertible T x T matrix M together with its inverse.
///
/// Real kinds (identity, dct, haar) also keep real copies so the training
/// pipeline can stay in real arithmetic for them.
class TransformMatrix {
public:
    static constexpr double kInverseTolerance = 1e-12;

    /// Throws DomainError unless ||m * m_inv - I||_inf <= 1e-12.
    TransformMatrix(TransformKind kind, Matrix<cplx> m, Matrix<cplx> m_inv)
        : kind_(kind), m_(std::move(m)), m_inv_(std::move(m_inv)) {
        if (m_.rows() != m_.cols() || m_inv_.rows() != m_.rows() || m_inv_.cols() != m_.cols())
            throw DimensionError("transform matrix and inverse must be square and equally sized");
        const double defect = identity_defect(m_, m_inv_);
        if (!(defect <= kInverseTolerance))
            throw DomainError("transform matrix is singular or inverse is inconsistent (||M*Minv - I|| = " +
                              std::to_string(defect) + ")");
        real_ = kind_ != TransformKind::dft;
        if (real_) {
            m_real_ = real_copy(m_);
            m_inv_real_ = real_copy(m_inv_);
        }
    }

    TransformKind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return m_.rows(); }
    bool is_real() const noexcept { return real_; }

    /// M in the requested scalar type. Requesting double for a complex kind throws.
    template <Scalar S>
    const Matrix<S>& forward() const {
        if constexpr (is_complex_v<S>)
            return m_;
        else
            return real_or_throw(m_real_);
    }

    template <Scalar S>
    const Matrix<S>& inverse() const {
        if constexpr (is_complex_v<S>)
            return m_inv_;
        else
            return real_or_throw(m_inv_real_);
    }

private:
    static Matrix<double> real_copy(const Matrix<cplx>& m) {
        Matrix<double> out(m.rows(), m.cols());
        for (std::size_t k = 0; k < m.data().size(); ++k) {
            if (m.data()[k].imag() != 0.0)
                throw DomainError("real transform kind with complex entries");
            out.data()[k] = m.data()[k].real();
        }
        return out;
    }

    const Matrix<double>& real_or_throw(const Matrix<double>& m) const {
        if (!real_)
            throw DomainError(std::string(to_string(kind_)) + " transform has no real representation");
        return m;
    }

    TransformKind kind_;
    Matrix<cplx> m_;
    Matrix<cplx> m_inv_;
    bool real_ = false;
    Matrix<double> m_real_;
    Matrix<double> m_inv_real_;
};

inline void require_positive_size(std::size_t T) {
    if (T == 0)
        throw DomainError("transform size must be positive");
}

inline TransformMatrix build_identity(std::size_t T) {
    require_positive_size(T);
    return {TransformKind::identity, Matrix<cplx>::identity(T), Matrix<cplx>::identity(T)};
}

/// Unitary DFT, entry (u, v) = exp(-2*pi*i*u*v/T) / sqrt(T), zero-based.
inline TransformMatrix build_dft(std::size_t T) {
    require_positive_size(T);
    Matrix<cplx> m(T, T);
    const double scale = 1.0 / std::sqrt(static_cast<double>(T));
    for (std::size_t u = 0; u < T; ++u)
        for (std::size_t v = 0; v < T; ++v) {
            // reduce u*v mod T first so the angle stays small and exact multiples of pi/2 stay exact
            const std::size_t r = (u * v) % T;
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(T);
            double c = std::cos(angle), s = std::sin(angle);
            if (4 * r % T == 0) {
                // angle is a multiple of pi/2
                const std::size_t q = 4 * r / T;
                c = q == 0 ? 1.0 : q == 2 ? -1.0 : 0.0;
                s = q == 1 ? -1.0 : q == 3 ? 1.0 : 0.0;
            }
            m(u, v) = scale * cplx(c, s);
        }
    auto inv = adjoint(m);
    return {TransformKind::dft, std::move(m), std::move(inv)};
}

/// Orthonormal DCT-II, entry (u, v) = alpha(u) * cos(pi/T * u * (v + 1/2)).
inline TransformMatrix build_dct(std::size_t T) {
    require_positive_size(T);
    Matrix<cplx> m(T, T);
    const double Td = static_cast<double>(T);
    for (std::size_t u = 0; u < T; ++u) {
        const double alpha = u == 0 ? std::sqrt(1.0 / Td) : std::sqrt(2.0 / Td);
        for (std::size_t v = 0; v < T; ++v)
            m(u, v) = alpha * std::cos(std::numbers::pi / Td * static_cast<double>(u) *
                                       (static_cast<double>(v) + 0.5));
    }
    auto inv = adjoint(m);
    return {TransformKind::dct, std::move(m), std::move(inv)};
}

/// Orthonormal Haar matrix for T = 2^L.
///
/// Row 0 is constant. Row 2^j + i (0 <= j < L, 0 <= i < 2^j) samples
/// psi(2^j z - i) at z = k/T, k = 0..T-1, where psi is +1 on [0, 1/2), -1 on
/// [1/2, 1) and 0 elsewhere, scaled to unit norm by sqrt(2^j / T).
inline TransformMatrix build_haar(std::size_t T) {
    require_positive_size(T);
    if (!is_power_of_two(T))
        throw DomainError("size must be a power of two (got " + std::to_string(T) + ")");
    Matrix<cplx> m(T, T);
    const double Td = static_cast<double>(T);
    for (std::size_t k = 0; k < T; ++k)
        m(0, k) = 1.0 / std::sqrt(Td);
    for (std::size_t scale = 1; scale < T; scale <<= 1) {
        const double amp = std::sqrt(static_cast<double>(scale) / Td);
        for (std::size_t shift = 0; shift < scale; ++shift) {
            const std::size_t row = scale + shift;
            for (std::size_t k = 0; k < T; ++k) {
                // 2^j * k/T - i compared against [0, 1/2) and [1/2, 1), in units of 1/T
                const long long s = static_cast<long long>(k * scale) - static_cast<long long>(shift * T);
                const long long half = static_cast<long long>(T / 2), full = static_cast<long long>(T);
                if (s >= 0 && s < half)
                    m(row, k) = amp;
                else if (s >= half && s < full)
                    m(row, k) = -amp;
            }
        }
    }
    auto inv = adjoint(m);
    return {TransformKind::haar, std::move(m), std::move(inv)};
}

inline TransformMatrix build_transform(TransformKind kind, std::size_t T) {
    switch (kind) {
    case TransformKind::identity: return build_identity(T);
    case TransformKind::dft: return build_dft(T);
    case TransformKind::dct: return build_dct(T);
    case TransformKind::haar: return build_haar(T);
    }
    throw DomainError("unknown transform kind");
}

// ---------------------------------------------------------------------------
// operations needing M^-1
// ---------------------------------------------------------------------------

/// X ×_3 M^-1. A real tensor under a complex M is transformed in complex
/// arithmetic and demoted; the imaginary residue must stay below 1e-8.
template <Scalar S>
Tensor3<S> m_inverse_transform(const Tensor3<S>& x, const TransformMatrix& m) {
    if constexpr (is_complex_v<S>) {
        return m_transform(x, m.inverse<cplx>());
    } else {
        if (m.is_real())
            return m_transform(x, m.inverse<double>());
        return real_part(m_transform(x, m.inverse<cplx>()), 1e-8, "m_inverse_transform");
    }
}

/// The M-product ((X ×_3 M) ⊗ (Y ×_3 M)) ×_3 M^-1. Real operands give a
/// real result; under the DFT the imaginary residue is checked against 1e-8.
template <Scalar S>
Tensor3<S> m_product(const Tensor3<S>& x, const Tensor3<S>& y, const TransformMatrix& m) {
    if (x.slots() != m.size() || y.slots() != m.size())
        throw DimensionError("m_product: operands " + x.shape_string() + " and " + y.shape_string() +
                             " do not match transform size " + std::to_string(m.size()));
    if (x.cols() != y.rows())
        throw DimensionError("m_product: inner dimensions " + std::to_string(x.cols()) + " and " +
                             std::to_string(y.rows()) + " differ");
    if constexpr (!is_complex_v<S>) {
        if (!m.is_real()) {
            const auto& M = m.forward<cplx>();
            auto z = facewise_product(m_transform(x, M), m_transform(y, M));
            return real_part(m_transform(z, m.inverse<cplx>()), 1e-8, "m_product");
        }
    }
    const auto& M = m.forward<S>();
    auto z = facewise_product(m_transform(x, M), m_transform(y, M));
    return m_transform(z, m.inverse<S>());
}

} // namespace mtgcn
