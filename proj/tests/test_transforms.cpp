#include <gtest/gtest.h>

#include <cmath>

#include "mtgcn/transforms.hpp"
#include "test_util.hpp"

using namespace mtgcn;

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752;

void expect_matrix_near(const Matrix<cplx>& m, const std::vector<std::vector<cplx>>& ref, double tol) {
    ASSERT_EQ(m.rows(), ref.size());
    for (std::size_t u = 0; u < ref.size(); ++u) {
        ASSERT_EQ(m.cols(), ref[u].size());
        for (std::size_t v = 0; v < ref[u].size(); ++v)
            EXPECT_LE(std::abs(m(u, v) - ref[u][v]), tol) << "entry (" << u << "," << v << ")";
    }
}

} // namespace

TEST(BuildDft, SizeOneAndTwo) {
    expect_matrix_near(build_dft(1).forward<cplx>(), {{1.0}}, 0.0);
    expect_matrix_near(build_dft(2).forward<cplx>(), {{kInvSqrt2, kInvSqrt2}, {kInvSqrt2, -kInvSqrt2}}, 1e-15);
}

TEST(BuildDft, SizeFourRowOne) {
    const auto m = build_dft(4);
    const auto& M = m.forward<cplx>();
    const cplx i(0.0, 1.0);
    const std::vector<cplx> row{0.5, -0.5 * i, -0.5, 0.5 * i};
    for (std::size_t v = 0; v < 4; ++v)
        EXPECT_EQ(M(1, v), row[v]) << v;
    EXPECT_FALSE(m.is_real());
    EXPECT_THROW(m.forward<double>(), DomainError);
}

TEST(BuildDft, EntriesMatchExponentialFormula) {
    for (std::size_t T : {3, 5, 8, 16}) {
        const auto m = build_dft(T);
        const auto& M = m.forward<cplx>();
        for (std::size_t u = 0; u < T; ++u)
            for (std::size_t v = 0; v < T; ++v) {
                const double ang = -2.0 * std::numbers::pi * double(u) * double(v) / double(T);
                const cplx ref = std::polar(1.0 / std::sqrt(double(T)), ang);
                EXPECT_LE(std::abs(M(u, v) - ref), 1e-13);
            }
    }
}

TEST(BuildDct, SmallSizes) {
    expect_matrix_near(build_dct(1).forward<cplx>(), {{1.0}}, 1e-15);
    expect_matrix_near(build_dct(2).forward<cplx>(), {{0.70711, 0.70711}, {0.70711, -0.70711}}, 1e-5);
    const auto m4 = build_dct(4);
    const auto& M4 = m4.forward<double>();
    for (std::size_t v = 0; v < 4; ++v)
        EXPECT_NEAR(M4(0, v), 0.5, 1e-15);
}

TEST(BuildHaar, SmallSizes) {
    expect_matrix_near(build_haar(1).forward<cplx>(), {{1.0}}, 0.0);
    expect_matrix_near(build_haar(2).forward<cplx>(), {{kInvSqrt2, kInvSqrt2}, {kInvSqrt2, -kInvSqrt2}}, 1e-15);
    expect_matrix_near(build_haar(4).forward<cplx>(),
                       {{0.5, 0.5, 0.5, 0.5},
                        {0.5, 0.5, -0.5, -0.5},
                        {kInvSqrt2, -kInvSqrt2, 0.0, 0.0},
                        {0.0, 0.0, kInvSqrt2, -kInvSqrt2}},
                       1e-15);
}

TEST(BuildHaar, RejectsNonPowerOfTwo) {
    for (std::size_t T : {3, 5, 6, 12}) {
        try {
            build_haar(T);
            FAIL() << "accepted size " << T;
        } catch (const DomainError& e) {
            EXPECT_NE(std::string(e.what()).find("size must be a power of two"), std::string::npos);
        }
    }
    EXPECT_THROW(build_dft(0), DomainError);
}

TEST(BuildHaar, RowsBeyondFirstSumToZero) {
    for (std::size_t T : {2, 4, 8, 16, 32}) {
        const auto m = build_haar(T);
        const auto& M = m.forward<double>();
        for (std::size_t u = 1; u < T; ++u) {
            double s = 0.0;
            for (std::size_t v = 0; v < T; ++v)
                s += M(u, v);
            EXPECT_LE(std::abs(s), 1e-15) << "T=" << T << " row " << u;
        }
    }
}

TEST(BuildIdentity, IsIdentity) {
    const auto m = build_identity(3);
    const auto& M = m.forward<double>();
    for (std::size_t u = 0; u < 3; ++u)
        for (std::size_t v = 0; v < 3; ++v)
            EXPECT_EQ(M(u, v), u == v ? 1.0 : 0.0);
}

TEST(TransformMatrix, InverseDefectBelowTolerance) {
    for (std::size_t T : {2, 4, 8, 16})
        for (auto kind : {TransformKind::identity, TransformKind::dft, TransformKind::dct, TransformKind::haar}) {
            const auto m = build_transform(kind, T);
            EXPECT_LE(identity_defect(m.forward<cplx>(), m.inverse<cplx>()), 1e-12)
                << to_string(kind) << " T=" << T;
        }
}

TEST(TransformMatrix, UnitaryAndOrthogonal) {
    // M^H M = I computed independently of the stored inverse
    for (std::size_t T : {2, 4, 8, 16})
        for (auto kind : {TransformKind::dft, TransformKind::dct, TransformKind::haar}) {
            const auto m = build_transform(kind, T);
            const auto& M = m.forward<cplx>();
            for (std::size_t a = 0; a < T; ++a)
                for (std::size_t b = 0; b < T; ++b) {
                    cplx s = 0.0;
                    for (std::size_t k = 0; k < T; ++k)
                        s += std::conj(M(k, a)) * M(k, b);
                    EXPECT_LE(std::abs(s - (a == b ? 1.0 : 0.0)), 1e-13) << to_string(kind) << " T=" << T;
                }
        }
}

TEST(TransformMatrix, DftAndDctShareConstantRow) {
    for (std::size_t T : {2, 4, 8, 16}) {
        const auto f = build_dft(T), c = build_dct(T);
        const auto& F = f.forward<cplx>();
        const auto& C = c.forward<cplx>();
        for (std::size_t v = 0; v < T; ++v) {
            EXPECT_NEAR(std::abs(F(0, v)), 1.0 / std::sqrt(double(T)), 1e-15);
            EXPECT_NEAR(std::abs(C(0, v)), 1.0 / std::sqrt(double(T)), 1e-15);
        }
    }
}

TEST(TransformMatrix, RejectsInconsistentInverse) {
    Matrix<cplx> m(2, 2, {1.0, 1.0, 1.0, 1.0});
    EXPECT_THROW(TransformMatrix(TransformKind::identity, m, Matrix<cplx>::identity(2)), DomainError);
    Matrix<cplx> d(2, 2, {2.0, 0.0, 0.0, 1.0});
    Matrix<cplx> d_bad(2, 2, {0.5 + 1e-9, 0.0, 0.0, 1.0});
    EXPECT_THROW(TransformMatrix(TransformKind::identity, d, d_bad), DomainError);
    Matrix<cplx> d_inv(2, 2, {0.5, 0.0, 0.0, 1.0});
    EXPECT_NO_THROW(TransformMatrix(TransformKind::identity, d, d_inv));
}

TEST(TransformMatrix, RoundTripForAllKinds) {
    Rng rng(41);
    for (std::size_t T : {2, 4, 8, 16})
        for (auto kind : {TransformKind::identity, TransformKind::dft, TransformKind::dct, TransformKind::haar}) {
            const auto m = build_transform(kind, T);
            auto x = mtgcn::testing::random_tensor(rng, 3, 2, T);
            auto back = m_transform(m_transform(to_complex(x), m.forward<cplx>()), m.inverse<cplx>());
            EXPECT_LE(max_abs_diff(back, to_complex(x)), 1e-10) << to_string(kind) << " T=" << T;
        }
}

TEST(TransformKindNames, RoundTrip) {
    for (auto kind : {TransformKind::identity, TransformKind::dft, TransformKind::dct, TransformKind::haar})
        EXPECT_EQ(parse_transform_kind(to_string(kind)), kind);
    EXPECT_FALSE(parse_transform_kind("wavelet").has_value());
}

TEST(TransformSlots, HaarPadsToPowerOfTwo) {
    EXPECT_EQ(transform_slots(TransformKind::haar, 3), 4u);
    EXPECT_EQ(transform_slots(TransformKind::haar, 7), 8u);
    EXPECT_EQ(transform_slots(TransformKind::haar, 8), 8u);
    EXPECT_EQ(transform_slots(TransformKind::dft, 7), 7u);
    EXPECT_EQ(next_power_of_two(1), 1u);
    EXPECT_EQ(next_power_of_two(17), 32u);
}
