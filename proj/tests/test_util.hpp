#pragma once

// Test-only helpers: random operands and brute-force oracles written directly
// from the defining formulas, independent of the library's kernels.

#include <array>
#include <complex>
#include <vector>

#include "mtgcn/random.hpp"
#include "mtgcn/tensor.hpp"

namespace mtgcn::testing {

inline RealTensor random_tensor(Rng& rng, std::size_t I, std::size_t J, std::size_t T, double lo = -1.0,
                                double hi = 1.0) {
    RealTensor x(I, J, T);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < I; ++i)
            for (std::size_t j = 0; j < J; ++j)
                x(i, j, t) = rng.uniform(lo, hi);
    return x;
}

inline Matrix<double> random_matrix(Rng& rng, std::size_t r, std::size_t c) {
    Matrix<double> m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            m(i, j) = rng.uniform(-1.0, 1.0);
    return m;
}

/// (x ×_n u)_{..d..} = sum_{i_n} u(d, i_n) x_{..i_n..}, evaluated position by position.
template <Scalar A, Scalar B>
std::vector<std::vector<std::vector<cplx>>> naive_mode_n(const Tensor3<A>& x, const Matrix<B>& u, int n) {
    std::array<std::size_t, 3> dims{x.rows(), x.cols(), x.slots()};
    std::array<std::size_t, 3> out_dims = dims;
    out_dims[n - 1] = u.rows();
    std::vector<std::vector<std::vector<cplx>>> out(
        out_dims[0], std::vector<std::vector<cplx>>(out_dims[1], std::vector<cplx>(out_dims[2])));
    for (std::size_t a = 0; a < out_dims[0]; ++a)
        for (std::size_t b = 0; b < out_dims[1]; ++b)
            for (std::size_t c = 0; c < out_dims[2]; ++c) {
                std::array<std::size_t, 3> pos{a, b, c};
                const std::size_t d = pos[n - 1];
                cplx sum = 0.0;
                for (std::size_t k = 0; k < dims[n - 1]; ++k) {
                    pos[n - 1] = k;
                    sum += cplx(u(d, k)) * cplx(x(pos[0], pos[1], pos[2]));
                }
                out[a][b][c] = sum;
            }
    return out;
}

template <Scalar S>
double max_diff_nested(const Tensor3<S>& y, const std::vector<std::vector<std::vector<cplx>>>& ref) {
    double d = 0.0;
    for (std::size_t i = 0; i < y.rows(); ++i)
        for (std::size_t j = 0; j < y.cols(); ++j)
            for (std::size_t t = 0; t < y.slots(); ++t)
                d = std::max(d, std::abs(cplx(y(i, j, t)) - ref.at(i).at(j).at(t)));
    return d;
}

/// Per-slice matrix product with an explicit triple loop.
template <Scalar S>
Tensor3<S> naive_facewise(const Tensor3<S>& x, const Tensor3<S>& y) {
    Tensor3<S> out(x.rows(), y.cols(), x.slots());
    for (std::size_t t = 0; t < x.slots(); ++t)
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t k = 0; k < y.cols(); ++k) {
                S s{};
                for (std::size_t j = 0; j < x.cols(); ++j)
                    s += x(i, j, t) * y(j, k, t);
                out(i, k, t) = s;
            }
    return out;
}

/// c[t] = sum_k a[k] b[(t - k) mod T]
inline std::vector<double> circular_convolution(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t T = a.size();
    std::vector<double> c(T, 0.0);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < T; ++k)
            c[t] += a[k] * b[(t + T - k) % T];
    return c;
}

} // namespace mtgcn::testing
