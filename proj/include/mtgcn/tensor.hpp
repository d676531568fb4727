#pragma once

// Dense third-order tensors and the M-product primitives built on them.
//
// Storage layout of Tensor3 (fixed, relied upon by unfold3/fold3):
//
//     offset(i, j, t) = (t * rows + i) * cols + j
//
// i.e. frontal slices are contiguous and each slice is row-major. As a
// consequence the T x (I*J) unfolding is the raw buffer viewed row-major:
// row t of unfold3(x) is frontal slice t and column (i * J + j) is tube (i, j, :).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "mtgcn/error.hpp"

namespace mtgcn {

using cplx = std::complex<double>;

template <class T>
struct is_complex : std::false_type {};
template <class T>
struct is_complex<std::complex<T>> : std::true_type {};
template <class T>
inline constexpr bool is_complex_v = is_complex<T>::value;

template <class T>
concept Scalar = std::same_as<T, double> || std::same_as<T, cplx>;

template <Scalar A, Scalar B>
using promote_t = std::conditional_t<is_complex_v<A> || is_complex_v<B>, cplx, double>;

template <Scalar S>
inline S conj_if(S v) {
    if constexpr (is_complex_v<S>)
        return std::conj(v);
    else
        return v;
}

template <Scalar S>
inline double real_of(S v) {
    if constexpr (is_complex_v<S>)
        return v.real();
    else
        return v;
}

template <Scalar S>
inline bool is_finite(S v) {
    if constexpr (is_complex_v<S>)
        return std::isfinite(v.real()) && std::isfinite(v.imag());
    else
        return std::isfinite(v);
}

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

/// Row-major dense matrix.
template <Scalar S>
class Matrix {
public:
    using value_type = S;

    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {
        if (rows == 0 || cols == 0)
            throw DimensionError("matrix dimensions must be positive");
    }
    Matrix(std::size_t rows, std::size_t cols, std::vector<S> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (rows == 0 || cols == 0)
            throw DimensionError("matrix dimensions must be positive");
        if (data_.size() != rows * cols)
            throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                                 " != " + std::to_string(rows) + "x" + std::to_string(cols));
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = S(1);
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    S& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    const S& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<S> data() noexcept { return data_; }
    std::span<const S> data() const noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<S> data_;
};

template <Scalar A, Scalar B>
Matrix<promote_t<A, B>> matmul(const Matrix<A>& a, const Matrix<B>& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                             std::to_string(b.rows()) + " differ");
    Matrix<promote_t<A, B>> out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const auto v = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j)
                out(i, j) += v * b(k, j);
        }
    return out;
}

/// Conjugate transpose (plain transpose for real matrices).
template <Scalar S>
Matrix<S> adjoint(const Matrix<S>& m) {
    Matrix<S> out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            out(j, i) = conj_if(m(i, j));
    return out;
}

// ---------------------------------------------------------------------------
// Tensor3
// ---------------------------------------------------------------------------

/// Dense I x J x T tensor. The scalar type is the scalar mode: Tensor3<double>
/// is real, Tensor3<cplx> is complex.
template <Scalar S>
class Tensor3 {
public:
    using value_type = S;

    Tensor3() = default;
    Tensor3(std::size_t rows, std::size_t cols, std::size_t slots)
        : rows_(rows), cols_(cols), slots_(slots), data_(rows * cols * slots) {
        check_positive();
    }
    Tensor3(std::size_t rows, std::size_t cols, std::size_t slots, std::vector<S> data)
        : rows_(rows), cols_(cols), slots_(slots), data_(std::move(data)) {
        check_positive();
        if (data_.size() != rows * cols * slots)
            throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                                 " != " + shape_string());
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t slots() const noexcept { return slots_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t slice_size() const noexcept { return rows_ * cols_; }
    bool empty() const noexcept { return data_.empty(); }

    /// Extent along axis 1, 2 or 3.
    std::size_t extent(int axis) const {
        switch (axis) {
        case 1: return rows_;
        case 2: return cols_;
        case 3: return slots_;
        default: throw DomainError("axis must be 1, 2 or 3");
        }
    }

    bool same_shape(const Tensor3& o) const noexcept {
        return rows_ == o.rows_ && cols_ == o.cols_ && slots_ == o.slots_;
    }

    std::string shape_string() const {
        return "(" + std::to_string(rows_) + "," + std::to_string(cols_) + "," +
               std::to_string(slots_) + ")";
    }

    S& operator()(std::size_t i, std::size_t j, std::size_t t) noexcept {
        return data_[(t * rows_ + i) * cols_ + j];
    }
    const S& operator()(std::size_t i, std::size_t j, std::size_t t) const noexcept {
        return data_[(t * rows_ + i) * cols_ + j];
    }

    std::span<S> slice(std::size_t t) noexcept { return {data_.data() + t * slice_size(), slice_size()}; }
    std::span<const S> slice(std::size_t t) const noexcept {
        return {data_.data() + t * slice_size(), slice_size()};
    }

    std::span<S> data() noexcept { return data_; }
    std::span<const S> data() const noexcept { return data_; }

    bool operator==(const Tensor3&) const = default;

private:
    void check_positive() const {
        if (rows_ == 0 || cols_ == 0 || slots_ == 0)
            throw DimensionError("tensor dimensions must be positive, got " + shape_string());
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t slots_ = 0;
    std::vector<S> data_;
};

using RealTensor = Tensor3<double>;
using ComplexTensor = Tensor3<cplx>;

inline ComplexTensor to_complex(const RealTensor& x) {
    ComplexTensor out(x.rows(), x.cols(), x.slots());
    std::copy(x.data().begin(), x.data().end(), out.data().begin());
    return out;
}

template <Scalar S>
inline Tensor3<S> as_scalar(const RealTensor& x) {
    if constexpr (is_complex_v<S>)
        return to_complex(x);
    else
        return x;
}

/// Largest |imag| over all entries.
inline double imag_residue(const ComplexTensor& x) {
    double r = 0.0;
    for (const auto& v : x.data())
        r = std::max(r, std::abs(v.imag()));
    return r;
}

/// Real part of `x`; throws NumericError when an imaginary part exceeds `tol`.
inline RealTensor real_part(const ComplexTensor& x, double tol = 1e-8,
                            const std::string& stage = "real_part") {
    RealTensor out(x.rows(), x.cols(), x.slots());
    auto dst = out.data();
    auto src = x.data();
    for (std::size_t k = 0; k < src.size(); ++k) {
        if (std::abs(src[k].imag()) > tol)
            throw NumericError(stage, "imaginary residue " + std::to_string(std::abs(src[k].imag())) +
                                          " exceeds " + std::to_string(tol));
        dst[k] = src[k].real();
    }
    return out;
}

inline RealTensor real_part_unchecked(const ComplexTensor& x) {
    RealTensor out(x.rows(), x.cols(), x.slots());
    auto dst = out.data();
    auto src = x.data();
    for (std::size_t k = 0; k < src.size(); ++k)
        dst[k] = src[k].real();
    return out;
}

template <Scalar S>
double max_abs_diff(const Tensor3<S>& a, const Tensor3<S>& b) {
    if (!a.same_shape(b))
        throw DimensionError("max_abs_diff: shapes " + a.shape_string() + " and " + b.shape_string());
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        d = std::max(d, std::abs(a.data()[k] - b.data()[k]));
    return d;
}

template <Scalar S>
Tensor3<S> operator+(const Tensor3<S>& a, const Tensor3<S>& b) {
    if (!a.same_shape(b))
        throw DimensionError("tensor add: shapes " + a.shape_string() + " and " + b.shape_string());
    Tensor3<S> out = a;
    for (std::size_t k = 0; k < out.size(); ++k)
        out.data()[k] += b.data()[k];
    return out;
}

template <Scalar S>
Tensor3<S> operator*(S s, const Tensor3<S>& a) {
    Tensor3<S> out = a;
    for (auto& v : out.data())
        v *= s;
    return out;
}

// ---------------------------------------------------------------------------
// unfold / fold
// ---------------------------------------------------------------------------

/// T x (I*J) matrix whose column i*J + j is the tube x(i, j, :).
template <Scalar S>
Matrix<S> unfold3(const Tensor3<S>& x) {
    return Matrix<S>(x.slots(), x.slice_size(), std::vector<S>(x.data().begin(), x.data().end()));
}

/// Inverse of unfold3 for a target shape (rows, cols, slots).
template <Scalar S>
Tensor3<S> fold3(const Matrix<S>& m, std::size_t rows, std::size_t cols, std::size_t slots) {
    if (m.rows() != slots || m.cols() != rows * cols)
        throw DimensionError("fold3: matrix " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                             " cannot fold into (" + std::to_string(rows) + "," + std::to_string(cols) +
                             "," + std::to_string(slots) + ")");
    return Tensor3<S>(rows, cols, slots, std::vector<S>(m.data().begin(), m.data().end()));
}

// ---------------------------------------------------------------------------
// mode-n product, M-transform
// ---------------------------------------------------------------------------

/// x ×_n u: contracts axis n of x against the columns of u.
template <Scalar A, Scalar B>
Tensor3<promote_t<A, B>> mode_n_product(const Tensor3<A>& x, const Matrix<B>& u, int axis) {
    using R = promote_t<A, B>;
    const std::size_t n_axis = x.extent(axis);
    if (u.cols() != n_axis)
        throw DimensionError("mode_n_product: matrix has " + std::to_string(u.cols()) +
                             " columns but axis " + std::to_string(axis) + " of " + x.shape_string() +
                             " has extent " + std::to_string(n_axis));
    const std::size_t I = x.rows(), J = x.cols(), T = x.slots();
    switch (axis) {
    case 1: {
        Tensor3<R> out(u.rows(), J, T);
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t d = 0; d < u.rows(); ++d)
                for (std::size_t i = 0; i < I; ++i) {
                    const R c = u(d, i);
                    if (c == R(0))
                        continue;
                    for (std::size_t j = 0; j < J; ++j)
                        out(d, j, t) += c * R(x(i, j, t));
                }
        return out;
    }
    case 2: {
        Tensor3<R> out(I, u.rows(), T);
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t i = 0; i < I; ++i)
                for (std::size_t d = 0; d < u.rows(); ++d) {
                    R acc{};
                    for (std::size_t j = 0; j < J; ++j)
                        acc += R(u(d, j)) * R(x(i, j, t));
                    out(i, d, t) = acc;
                }
        return out;
    }
    default: {
        Tensor3<R> out(I, J, u.rows());
        const std::size_t n = x.slice_size();
        for (std::size_t d = 0; d < u.rows(); ++d) {
            auto dst = out.slice(d);
            for (std::size_t k = 0; k < T; ++k) {
                const R c = u(d, k);
                if (c == R(0))
                    continue;
                auto src = x.slice(k);
                for (std::size_t e = 0; e < n; ++e)
                    dst[e] += c * R(src[e]);
            }
        }
        return out;
    }
    }
}

/// X ×_3 M, mixing the time axis: out(i,j,t) = sum_k M(t,k) x(i,j,k).
template <Scalar A, Scalar B>
Tensor3<promote_t<A, B>> m_transform(const Tensor3<A>& x, const Matrix<B>& m) {
    if (m.rows() != x.slots() || m.cols() != x.slots())
        throw DimensionError("m_transform: matrix " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + " does not match " + std::to_string(x.slots()) +
                             " time slots");
    return mode_n_product(x, m, 3);
}

// ---------------------------------------------------------------------------
// face-wise products
// ---------------------------------------------------------------------------

namespace detail {

enum class Op { none, adjoint };

// out^t = op(x^t) * op(y^t) for every frontal slice. Zero entries of the left
// operand are skipped, which is what makes sparse adjacency slices cheap.
template <Op OpX, Op OpY, Scalar A, Scalar B>
Tensor3<promote_t<A, B>> facewise(const Tensor3<A>& x, const Tensor3<B>& y) {
    using R = promote_t<A, B>;
    const std::size_t xr = OpX == Op::none ? x.rows() : x.cols();
    const std::size_t xc = OpX == Op::none ? x.cols() : x.rows();
    const std::size_t yr = OpY == Op::none ? y.rows() : y.cols();
    const std::size_t yc = OpY == Op::none ? y.cols() : y.rows();
    if (xc != yr)
        throw DimensionError("facewise_product: inner dimensions " + std::to_string(xc) + " and " +
                             std::to_string(yr) + " differ (" + x.shape_string() + " x " +
                             y.shape_string() + ")");
    if (x.slots() != y.slots())
        throw DimensionError("facewise_product: slot counts " + std::to_string(x.slots()) + " and " +
                             std::to_string(y.slots()) + " differ");
    Tensor3<R> out(xr, yc, x.slots());
    std::vector<R> yt;
    for (std::size_t t = 0; t < x.slots(); ++t) {
        // materialize op(y^t) row-major so the inner loop is contiguous
        std::span<const B> ys = y.slice(t);
        if constexpr (OpY == Op::adjoint) {
            yt.assign(yr * yc, R{});
            for (std::size_t r = 0; r < y.rows(); ++r)
                for (std::size_t c = 0; c < y.cols(); ++c)
                    yt[c * yc + r] = conj_if(R(ys[r * y.cols() + c]));
        }
        auto xs = x.slice(t);
        auto os = out.slice(t);
        for (std::size_t i = 0; i < xr; ++i) {
            R* orow = os.data() + i * yc;
            for (std::size_t k = 0; k < xc; ++k) {
                R a;
                if constexpr (OpX == Op::none)
                    a = R(xs[i * x.cols() + k]);
                else
                    a = conj_if(R(xs[k * x.cols() + i]));
                if (a == R(0))
                    continue;
                if constexpr (OpY == Op::none) {
                    const B* yrow = ys.data() + k * yc;
                    for (std::size_t j = 0; j < yc; ++j)
                        orow[j] += a * R(yrow[j]);
                } else {
                    const R* yrow = yt.data() + k * yc;
                    for (std::size_t j = 0; j < yc; ++j)
                        orow[j] += a * yrow[j];
                }
            }
        }
    }
    return out;
}

} // namespace detail

/// Slice-wise matrix product: out^t = x^t y^t.
template <Scalar A, Scalar B>
Tensor3<promote_t<A, B>> facewise_product(const Tensor3<A>& x, const Tensor3<B>& y) {
    return detail::facewise<detail::Op::none, detail::Op::none>(x, y);
}

/// out^t = (x^t)^H y^t
template <Scalar A, Scalar B>
Tensor3<promote_t<A, B>> facewise_adjoint_left(const Tensor3<A>& x, const Tensor3<B>& y) {
    return detail::facewise<detail::Op::adjoint, detail::Op::none>(x, y);
}

/// out^t = x^t (y^t)^H
template <Scalar A, Scalar B>
Tensor3<promote_t<A, B>> facewise_adjoint_right(const Tensor3<A>& x, const Tensor3<B>& y) {
    return detail::facewise<detail::Op::none, detail::Op::adjoint>(x, y);
}

// ---------------------------------------------------------------------------
// time-axis padding
// ---------------------------------------------------------------------------

/// Zero-pads (or leaves unchanged) the time axis up to `slots`.
template <Scalar S>
Tensor3<S> pad_slots(const Tensor3<S>& x, std::size_t slots) {
    if (slots < x.slots())
        throw DimensionError("pad_slots: cannot pad " + x.shape_string() + " to " + std::to_string(slots));
    if (slots == x.slots())
        return x;
    Tensor3<S> out(x.rows(), x.cols(), slots);
    std::copy(x.data().begin(), x.data().end(), out.data().begin());
    return out;
}

/// Keeps the first `slots` frontal slices.
template <Scalar S>
Tensor3<S> truncate_slots(const Tensor3<S>& x, std::size_t slots) {
    if (slots > x.slots() || slots == 0)
        throw DimensionError("truncate_slots: cannot truncate " + x.shape_string() + " to " +
                             std::to_string(slots));
    if (slots == x.slots())
        return x;
    Tensor3<S> out(x.rows(), x.cols(), slots);
    std::copy_n(x.data().begin(), out.size(), out.data().begin());
    return out;
}

} // namespace mtgcn
