#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include "sublra/linalg.hpp"
#include "sublra/multipliers.hpp"
#include "test_util.hpp"

using namespace sublra;

namespace {

MultiplierFlags unit_diagonal() {
    MultiplierFlags f;
    f.identity_diagonal = true;
    return f;
}

// Walsh-Hadamard matrix by the block recursion H_2n = [[H, H], [H, -H]].
RMat hadamard_recursive(std::size_t n) {
    RMat H{{1.0}};
    for (std::size_t s = 1; s < n; s *= 2) {
        RMat next(2 * s, 2 * s);
        for (std::size_t i = 0; i < s; ++i)
            for (std::size_t j = 0; j < s; ++j) {
                next(i, j) = H(i, j);
                next(i, j + s) = H(i, j);
                next(i + s, j) = H(i, j);
                next(i + s, j + s) = -H(i, j);
            }
        H = std::move(next);
    }
    return H;
}

// Rows of A selected by the sampler, in sample order.
template <typename Scalar>
Mat<Scalar> sampled_rows(const Mat<Scalar>& A, const std::vector<std::size_t>& rows) {
    Mat<Scalar> out(rows.size(), A.cols());
    for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t j = 0; j < A.cols(); ++j) out(a, j) = A(rows[a], j);
    return out;
}

template <typename Scalar>
std::size_t row_nnz(const Mat<Scalar>& A, std::size_t i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < A.cols(); ++j) c += std::abs(A(i, j)) > 1e-14;
    return c;
}

template <typename Scalar>
double row_orthonormality(const Mat<Scalar>& A) {
    return orthonormality_defect(adjoint(A));
}

}  // namespace

TEST(Hadamard, TwoByTwoButterfly) {
    const auto F = gen_abridged_hadamard(2, 1, 2, 1, Side::left, unit_diagonal());
    const RMat D = densify(F);
    const RMat expected = sampled_rows(RMat{{1, 1}, {1, -1}} * (1 / std::sqrt(2.0)), F.sample());
    EXPECT_LE(frobenius_norm(D - expected), 1e-15);
}

TEST(Hadamard, DepthZeroIsSampling) {
    const auto F = gen_abridged_hadamard(16, 0, 5, 2);
    const RMat D = densify(F);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(row_nnz(D, i), 1u);
        EXPECT_NEAR(std::abs(D(i, F.sample()[i])), std::sqrt(16.0 / 5.0), 1e-14);
    }
}

TEST(Hadamard, FullDepthMatchesRecursion) {
    const auto F = gen_abridged_hadamard(4, 2, 4, 3, Side::left, unit_diagonal());
    const RMat expected = sampled_rows(hadamard_recursive(4) * 0.5, F.sample());
    EXPECT_LE(frobenius_norm(densify(F) - expected), 1e-15);

    const auto G = gen_abridged_hadamard(16, 4, 16, 4, Side::left, unit_diagonal());
    EXPECT_LE(frobenius_norm(densify(G) - sampled_rows(hadamard_recursive(16) * 0.25, G.sample())), 1e-14);
}

TEST(Hadamard, Errors) {
    EXPECT_THROW(gen_abridged_hadamard(6, 1, 2, 0), std::invalid_argument);
    EXPECT_THROW(gen_abridged_hadamard(8, 4, 2, 0), std::invalid_argument);
    EXPECT_THROW(gen_abridged_hadamard(8, 1, 9, 0), std::invalid_argument);
}

TEST(Hadamard, SparsityAndOrthonormalRows) {
    for (unsigned d = 0; d <= 5; ++d) {
        const std::size_t n = 32;
        const auto F = gen_abridged_hadamard(n, d, n, 10 + d);
        const RMat D = densify(F);
        for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(row_nnz(D, i), std::size_t{1} << d);
        EXPECT_LE(row_orthonormality(D), 1e-12);
        const auto row = F.realized_row(3);
        EXPECT_EQ(row.size(), std::size_t{1} << d);
    }
}

TEST(Fourier, TwoByTwoMatchesHadamard) {
    const auto F = gen_abridged_fourier(2, 1, 2, 1, Side::left, unit_diagonal());
    const CMat expected = cast<cplx>(sampled_rows(RMat{{1, 1}, {1, -1}} * (1 / std::sqrt(2.0)), F.sample()));
    EXPECT_LE(frobenius_norm(densify(F) - expected), 1e-15);
}

TEST(Fourier, FullDepthWithBitReversalIsUnitaryDft) {
    MultiplierFlags f = unit_diagonal();
    f.bit_reverse = true;
    for (std::size_t n : {4u, 8u, 16u}) {
        unsigned d = 0;
        while ((std::size_t{1} << d) < n) ++d;
        const auto F = gen_abridged_fourier(n, d, n, 7, Side::left, f);
        CMat dft(n, n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                dft(r, c) = std::polar(1.0 / std::sqrt(double(n)), -2.0 * std::numbers::pi * double(r * c) / double(n));
        EXPECT_LE(frobenius_norm(densify(F) - sampled_rows(dft, F.sample())), 1e-12) << "n=" << n;
    }
}

TEST(Fourier, ThreeLevelsKeepRowsSparse) {
    const auto F = gen_abridged_fourier(64, 3, 64, 9);
    const CMat D = densify(F);
    for (std::size_t i = 0; i < 64; ++i) EXPECT_LE(row_nnz(D, i), 8u);
    EXPECT_LE(row_orthonormality(D), 1e-12);
}

TEST(BidiagPerm, StructureAndRank) {
    MultiplierFlags f;
    f.identity_permutation = true;
    const auto B = gen_bidiag_perm(3, 1, 3, 4, Side::left, f);
    const RMat D = densify(B);
    std::size_t nnz = 0;
    for (std::size_t i = 0; i < 3; ++i) nnz += row_nnz(D, i);
    // sampled rows are a permutation of the bidiagonal rows
    EXPECT_EQ(nnz, 5u);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto G = gen_bidiag_perm(12, 3, 12, seed);
        EXPECT_EQ(qrp(densify(G), 1e-12).numrank, 12u);
        EXPECT_LE(G.flops_per_vector(), 3u * 3 * 12);
        Flops fl;
        std::vector<double> x(12, 1.0);
        G.apply(x, &fl);
        EXPECT_LE(fl.count(), 3u * 3 * 12);
    }
    EXPECT_THROW(gen_bidiag_perm(4, 0, 2, 0), std::invalid_argument);
}

TEST(OrthogonalPartial, SingleGivensRotation) {
    std::vector<Stage<double>> stages{GivensStage{0, 1, std::numbers::pi / 2}};
    const SparseMultiplier<double> G(3, stages, {0, 1}, 1.0, Side::left, "givens");
    const RMat expected{{0, -1, 0}, {1, 0, 0}};
    EXPECT_LE(frobenius_norm(densify(G) - expected), 1e-15);
}

TEST(OrthogonalPartial, OrthogonalityIsPreserved) {
    for (std::size_t count : {1u, 5u, 40u}) {
        const auto G = gen_orthogonal_partial(10, OrthoKind::givens, count, 10, count);
        EXPECT_LE(orthonormality_defect(densify(G)), 1e-12 * 10);
        const auto H = gen_orthogonal_partial(10, OrthoKind::householder, count, 10, count);
        EXPECT_LE(orthonormality_defect(densify(H)), 1e-12 * 10);
    }
    const auto H = gen_orthogonal_partial(8, OrthoKind::householder, 2, 4, 3);
    EXPECT_LE(row_orthonormality(densify(H)), 1e-12);
}

TEST(OrthogonalPartial, ProductOrderAndFlags) {
    const auto G = gen_orthogonal_partial(6, OrthoKind::givens, 3, 6, 21);
    // Q_1 Q_2 Q_3 applied to x: the stage nearest the input is Q_3.
    RMat P = RMat::identity(6);
    std::vector<GivensStage> qs;
    for (const auto& st : G.stages()) qs.push_back(std::get<GivensStage>(st));
    ASSERT_EQ(qs.size(), 3u);
    for (const auto& q : qs) {
        RMat R = RMat::identity(6);
        R(q.i, q.i) = std::cos(q.angle);
        R(q.i, q.j) = -std::sin(q.angle);
        R(q.j, q.i) = std::sin(q.angle);
        R(q.j, q.j) = std::cos(q.angle);
        P = matmul(R, P);
    }
    EXPECT_LE(frobenius_norm(densify(G) - P), 1e-14);

    MultiplierFlags f;
    f.diagonal_scaling = true;
    f.permute = true;
    const auto S = gen_orthogonal_partial(6, OrthoKind::givens, 3, 4, 21, Side::left, f);
    EXPECT_LE(row_orthonormality(densify(S)), 1e-12);
}

TEST(OrthogonalPartial, IdentityWarning) {
    const auto G = gen_orthogonal_partial(5, OrthoKind::givens, 0, 5, 1);
    ASSERT_EQ(G.warnings().size(), 1u);
    EXPECT_EQ(G.warnings()[0], "identity multiplier");
    EXPECT_LE(frobenius_norm(densify(G) - RMat::identity(5)), 0.0);
}

TEST(Gaussian, DeterminismAndMoments) {
    EXPECT_EQ(gen_gaussian(5, 7, 3), gen_gaussian(5, 7, 3));
    EXPECT_FALSE(gen_gaussian(5, 7, 3) == gen_gaussian(5, 7, 4));
    const RMat G = gen_gaussian(100, 100, 99);
    double mean = 0.0, var = 0.0;
    for (double x : G.data()) mean += x;
    mean /= 1e4;
    for (double x : G.data()) var += (x - mean) * (x - mean);
    var /= 1e4 - 1;
    EXPECT_LT(std::abs(mean), 0.04);
    EXPECT_LT(std::abs(var - 1.0), 0.1);
}

TEST(Apply, RowSamplingReadsSelectedRows) {
    const RMat M = testutil::random_matrix(12, 9, 1);
    MatrixOracle o(M);
    const auto F = gen_abridged_hadamard(16, 0, 4, 2, Side::left, unit_diagonal());
    EXPECT_THROW(apply_left(F, o), std::invalid_argument);

    const auto F8 = gen_abridged_hadamard(8, 0, 3, 2, Side::left, unit_diagonal());
    MatrixOracle o8(testutil::random_matrix(8, 9, 3));
    const RMat W = apply_left(F8, o8);
    const double s = std::sqrt(8.0 / 3.0);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t j = 0; j < 9; ++j) EXPECT_NEAR(W(a, j), s * o8.audit()(F8.sample()[a], j), 1e-14);
    EXPECT_EQ(o8.reads(), 3u * 9);
}

TEST(Apply, ButterflyOnIdentity) {
    const auto F = gen_abridged_hadamard(2, 1, 2, 1, Side::left, unit_diagonal());
    MatrixOracle o(RMat::identity(2));
    EXPECT_LE(frobenius_norm(apply_left(F, o) - densify(F)), 1e-15);
}

TEST(Apply, StructuredMatchesDense) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const RMat M = testutil::random_matrix(16, 16, 50 + seed);
        MatrixOracle o(M);
        const auto F = gen_abridged_hadamard(16, 1 + seed % 4, 6, seed);
        const auto H = gen_abridged_hadamard(16, 1 + seed % 4, 5, seed + 100, Side::right);
        EXPECT_LE(frobenius_norm(apply_left(F, o) - matmul(densify(F), M)), 1e-12 * frobenius_norm(M));
        EXPECT_LE(frobenius_norm(apply_right(H, o) - matmul(M, densify(H))), 1e-12 * frobenius_norm(M));

        const auto B = gen_bidiag_perm(16, 2, 4, seed, Side::right);
        EXPECT_LE(frobenius_norm(apply_right(B, o) - matmul(M, densify(B))), 1e-12 * frobenius_norm(M) * 10);
        const auto Q = gen_orthogonal_partial(16, OrthoKind::householder, 6, 5, seed);
        EXPECT_LE(frobenius_norm(apply_left(Q, M) - matmul(densify(Q), M)), 1e-12 * frobenius_norm(M));

        const auto C = gen_abridged_fourier(16, 3, 6, seed);
        const CMat Mc = cast<cplx>(M);
        EXPECT_LE(frobenius_norm(apply_left(C, o) - matmul(densify(C), Mc)), 1e-12 * frobenius_norm(M));
    }
}

TEST(Apply, SixBySixOracle) {
    const RMat M = testutil::random_matrix(8, 6, 77);
    MatrixOracle o(M);
    const auto F = gen_abridged_hadamard(8, 3, 6, 5);
    EXPECT_LE(frobenius_norm(apply_left(F, o) - matmul(densify(F), M)), 1e-12);
}

TEST(Apply, AccessBudgets) {
    const std::size_t m = 64, n = 64;
    for (unsigned d = 0; d <= 3; ++d) {
        const auto H = gen_abridged_hadamard(n, d, 5, d, Side::right);
        MatrixOracle o(testutil::random_matrix(m, n, d));
        apply_right(H, o);
        EXPECT_LE(o.reads(), m * 5 * (std::size_t{1} << d));
        const auto F = gen_abridged_hadamard(m, d, 7, d + 9);
        MatrixOracle o2(testutil::random_matrix(m, n, d));
        apply_left(F, o2);
        EXPECT_LE(o2.reads(), 7 * n * (std::size_t{1} << d));
    }
}

TEST(Densify, Basics) {
    const auto I = gen_orthogonal_partial(4, OrthoKind::givens, 0, 4, 0);
    EXPECT_EQ(densify(I), RMat::identity(4));
    std::vector<Stage<double>> st{PermutationStage{{2, 0, 3, 1}}};
    const SparseMultiplier<double> P(4, st, {0, 1, 2, 3}, 1.0, Side::left, "perm");
    const RMat D = densify(P);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(row_nnz(D, i), 1u);
        EXPECT_EQ(D(i, P.stages().size() ? std::get<PermutationStage>(P.stages()[0]).source[i] : 0), 1.0);
    }
    const auto H = gen_abridged_hadamard(8, 3, 8, 0, Side::left, unit_diagonal());
    EXPECT_LE(frobenius_norm(densify(H) - sampled_rows(hadamard_recursive(8) * (1 / std::sqrt(8.0)), H.sample())),
              1e-14);
}

TEST(Densify, SeedDeterminismAndSides) {
    EXPECT_EQ(densify(gen_abridged_hadamard(32, 3, 6, 8)), densify(gen_abridged_hadamard(32, 3, 6, 8)));
    const auto L = gen_abridged_hadamard(32, 3, 6, 8);
    EXPECT_EQ(densify(L.with_side(Side::right)), transpose(densify(L)));
}

TEST(Apply, RealizedRowsMatchDensified) {
    const auto F = gen_bidiag_perm(10, 2, 4, 3);
    const RMat D = densify(F);
    for (std::size_t s = 0; s < 4; ++s) {
        RMat row(1, 10);
        for (const auto& [j, v] : F.realized_row(s)) row(0, j) = v;
        for (std::size_t j = 0; j < 10; ++j) EXPECT_NEAR(row(0, j), D(s, j), 1e-13);
    }
}
