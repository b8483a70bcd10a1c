#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "sublra/cur.hpp"
#include "sublra/random.hpp"
#include "test_util.hpp"

using namespace sublra;

namespace {

std::vector<std::size_t> iota_vec(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

std::size_t oracle_rank(const RMat& A) {
    const auto s = testutil::oracle_singular_values(A);
    if (s.empty() || s[0] == 0.0) return 0;
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [&](double x) { return x > 1e-10 * s[0]; }));
}

RMat submat(const RMat& A, const std::vector<std::size_t>& r, const std::vector<std::size_t>& c) {
    RMat out(r.size(), c.size());
    for (std::size_t a = 0; a < r.size(); ++a)
        for (std::size_t b = 0; b < c.size(); ++b) out(a, b) = A(r[a], c[b]);
    return out;
}

// sigma_rho / sigma_min(G) via the independent SVD.
double oracle_quality(const RMat& M, const std::vector<std::size_t>& r, const std::vector<std::size_t>& c,
                      std::size_t rho) {
    const auto sm = testutil::oracle_singular_values(M);
    const auto sg = testutil::oracle_singular_values(submat(M, r, c));
    return sg.back() > 0.0 ? sm[rho - 1] / sg.back() : std::numeric_limits<double>::infinity();
}

std::vector<std::vector<std::size_t>> combinations(std::size_t n, std::size_t k) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<bool> mask(n, false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(k), true);
    do {
        std::vector<std::size_t> c;
        for (std::size_t i = 0; i < n; ++i)
            if (mask[i]) c.push_back(i);
        out.push_back(c);
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return out;
}

}  // namespace

TEST(CanonicalCur, IdentityExample) {
    MatrixOracle o(RMat::identity(3));
    const std::vector<std::size_t> idx{0, 1};
    const auto c = canonical_cur(o, idx, idx, 2);
    RMat expected(3, 3);
    expected(0, 0) = expected(1, 1) = 1.0;
    EXPECT_LE(frobenius_norm(c.dense() - expected), 1e-15);
    EXPECT_EQ(c.nucleus.rows(), 2u);
    EXPECT_EQ(c.nucleus.cols(), 2u);
}

TEST(CanonicalCur, RankOneExact) {
    const RMat u = testutil::random_matrix(7, 1, 1), v = testutil::random_matrix(1, 5, 2);
    const RMat M = matmul(u, v);
    MatrixOracle o(M);
    const std::vector<std::size_t> zero{0};
    const auto c = canonical_cur(o, zero, zero, 1);
    EXPECT_LE(frobenius_norm(c.dense() - M), 1e-10 * frobenius_norm(M));
    EXPECT_TRUE(verify_cur_exactness(M, c).exact);
}

TEST(CanonicalCur, ReadsExactlyCUnionR) {
    const std::size_t m = 12, n = 10;
    MatrixOracle o(testutil::random_matrix(m, n, 3));
    const std::vector<std::size_t> rows{1, 4, 7}, cols{0, 2, 5, 9};
    canonical_cur(o, rows, cols, 3);
    EXPECT_EQ(o.reads(), m * cols.size() + rows.size() * n - rows.size() * cols.size());
    EXPECT_LE(o.reads(), m * cols.size() + rows.size() * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const bool in_c = std::find(cols.begin(), cols.end(), j) != cols.end();
            const bool in_r = std::find(rows.begin(), rows.end(), i) != rows.end();
            EXPECT_EQ(o.was_read(i, j), in_c || in_r);
        }
}

TEST(CanonicalCur, ShapesAndGenerator) {
    const RMat M = testutil::random_matrix(9, 8, 4);
    MatrixOracle o(M);
    const std::vector<std::size_t> rows{0, 3, 5, 6}, cols{1, 2, 7};
    const auto c = canonical_cur(o, rows, cols, 2);
    EXPECT_EQ(c.C.rows(), 9u);
    EXPECT_EQ(c.C.cols(), 3u);
    EXPECT_EQ(c.R.rows(), 4u);
    EXPECT_EQ(c.R.cols(), 8u);
    EXPECT_EQ(c.nucleus.rows(), 3u);
    EXPECT_EQ(c.nucleus.cols(), 4u);
    EXPECT_EQ(c.generator(), submat(M, rows, cols));
    EXPECT_EQ(c.C, submat(M, iota_vec(9), cols));
}

TEST(CanonicalCur, Errors) {
    MatrixOracle o(RMat::identity(4));
    const std::vector<std::size_t> a{0, 1}, b{2, 3}, one{0};
    EXPECT_THROW(canonical_cur(o, a, b, 1), std::domain_error);
    EXPECT_THROW(canonical_cur(o, one, a, 2), std::invalid_argument);
    EXPECT_THROW(canonical_cur(o, a, a, 0), std::invalid_argument);
}

TEST(CanonicalCur, WeightedMatchesRescaledCur) {
    const RMat M = testutil::random_matrix(8, 8, 5);
    MatrixOracle o(M);
    const std::vector<std::size_t> rows{1, 2, 6}, cols{0, 3, 4};
    const std::vector<double> wr{2.0, 0.5, 1.5}, wc{0.25, 3.0, 1.0};
    const auto c = canonical_cur(o, rows, cols, 2, wr, wc);
    // independent construction: (C Dc) pinv_2(Dr G Dc) (Dr R)
    Eigen::MatrixXd G = testutil::to_eigen(submat(M, rows, cols));
    Eigen::MatrixXd Dr = Eigen::VectorXd::Map(wr.data(), 3).asDiagonal();
    Eigen::MatrixXd Dc = Eigen::VectorXd::Map(wc.data(), 3).asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> sv(Dr * G * Dc, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(3, 3);
    for (int t = 0; t < 2; ++t) P += sv.matrixV().col(t) * sv.matrixU().col(t).transpose() / sv.singularValues()(t);
    const Eigen::MatrixXd expected = testutil::to_eigen(c.C) * Dc * P * Dr * testutil::to_eigen(c.R);
    EXPECT_LE((testutil::to_eigen(c.dense()) - expected).norm(), 1e-12 * expected.norm());
}

TEST(CurExactness, ConstructedRankTwo) {
    // rows 0..2 carry only the first direction
    RMat U(5, 2), V(2, 5);
    const RMat g = testutil::random_matrix(5, 2, 6), h = testutil::random_matrix(2, 5, 7);
    for (std::size_t i = 0; i < 5; ++i) {
        U(i, 0) = g(i, 0);
        U(i, 1) = i < 3 ? 0.0 : g(i, 1);
    }
    V = h;
    const RMat M = matmul(U, V);
    MatrixOracle o(M);
    const std::vector<std::size_t> spanning{0, 4}, slice{0, 1, 2}, cols{0, 1};
    const auto good = canonical_cur(o, spanning, cols, 2);
    EXPECT_TRUE(verify_cur_exactness(M, good).exact);
    const auto bad = canonical_cur(o, slice, cols, 1);
    const auto e = verify_cur_exactness(M, bad);
    EXPECT_FALSE(e.exact);
    EXPECT_GT(e.fro_error, 1e-3);
}

TEST(CurExactness, RejectsZero) {
    MatrixOracle o(RMat::identity(2));
    const std::vector<std::size_t> z{0};
    const auto c = canonical_cur(o, z, z, 1);
    EXPECT_THROW(verify_cur_exactness(RMat(2, 2), c), std::invalid_argument);
}

TEST(CurExactness, IffOnSmallInstances) {
    Rng rng = make_rng(99);
    int exact_seen = 0, inexact_seen = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t m = 3 + rng() % 4, n = 3 + rng() % 4;
        const std::size_t r = 1 + rng() % 3;
        RMat U = testutil::random_matrix(m, r, rng());
        // zero out a random block so some generators lose rank
        for (std::size_t i = 0; i < m; ++i)
            if (rng() % 2) U(i, r - 1) = 0.0;
        const RMat M = matmul(U, testutil::random_matrix(r, n, rng()));
        const std::size_t rank_m = oracle_rank(M);
        if (rank_m == 0) continue;
        const std::size_t k = 1 + rng() % m, l = 1 + rng() % n;
        const auto rows = sample_without_replacement(m, k, rng);
        const auto cols = sample_without_replacement(n, l, rng);
        const std::size_t rank_g = oracle_rank(submat(M, rows, cols));
        if (rank_g == 0) continue;
        MatrixOracle o(M);
        const auto c = canonical_cur(o, rows, cols, rank_g);
        const bool exact = verify_cur_exactness(M, c).exact;
        EXPECT_EQ(exact, rank_g == rank_m) << "trial " << trial;
        exact ? ++exact_seen : ++inexact_seen;
    }
    EXPECT_GT(exact_seen, 20);
    EXPECT_GT(inexact_seen, 20);
}

TEST(Maxvol, FindsDominantRows) {
    RMat U(6, 2);
    U(2, 0) = 10.0;
    U(4, 1) = 10.0;
    U(0, 0) = U(1, 1) = U(3, 0) = U(5, 1) = 1.0;
    const auto r = maxvol(U);
    EXPECT_TRUE(r.converged);
    auto rows = r.rows;
    std::sort(rows.begin(), rows.end());
    EXPECT_EQ(rows, (std::vector<std::size_t>{2, 4}));
    EXPECT_THROW(maxvol(RMat(2, 3)), std::invalid_argument);
}

TEST(Maxvol, CoefficientsBounded) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const RMat U = testutil::random_matrix(40, 4, seed);
        const auto r = maxvol(U);
        ASSERT_TRUE(r.converged);
        const Eigen::MatrixXd E = testutil::to_eigen(U);
        const Eigen::MatrixXd S = testutil::to_eigen(submat(U, r.rows, iota_vec(4)));
        const Eigen::MatrixXd B = E * S.inverse();
        EXPECT_LE(B.cwiseAbs().maxCoeff(), kMaxvolGrowth + 1e-12);
    }
}

TEST(TopSvdToCur, DiagonalExample) {
    TopSVD<double> s;
    s.U = RMat::identity(3);
    s.V = RMat::identity(3);
    s.sigma = {3, 2, 1};
    const auto c = topsvd_to_cur(s, 2);
    EXPECT_EQ(c.row_idx, (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(c.col_idx, (std::vector<std::size_t>{0, 1}));
    EXPECT_NEAR(c.quality, 1.0, 1e-14);
    EXPECT_TRUE(c.converged);
}

TEST(TopSvdToCur, PermutedDiagonalTracksPermutation) {
    Rng rng = make_rng(5);
    const auto p = random_permutation(6, rng), q = random_permutation(6, rng);
    TopSVD<double> s;
    s.U = RMat(6, 3);
    s.V = RMat(6, 3);
    s.sigma = {3, 2, 1};
    for (std::size_t t = 0; t < 3; ++t) {
        s.U(p[t], t) = 1.0;
        s.V(q[t], t) = 1.0;
    }
    const auto c = topsvd_to_cur(s, 2);
    std::vector<std::size_t> er{p[0], p[1]}, ec{q[0], q[1]};
    std::sort(er.begin(), er.end());
    std::sort(ec.begin(), ec.end());
    EXPECT_EQ(c.row_idx, er);
    EXPECT_EQ(c.col_idx, ec);
    EXPECT_NEAR(c.quality, 1.0, 1e-14);
}

TEST(TopSvdToCur, PermutationInvariance) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = svd(testutil::with_spectrum(15, 12, {4, 2, 1}, seed));
        TopSVD<double> t = truncate_svd(s, 3);
        Rng rng = make_rng(seed + 50);
        const auto p = random_permutation(15, rng), q = random_permutation(12, rng);
        TopSVD<double> u = t;
        for (std::size_t i = 0; i < 15; ++i)
            for (std::size_t c = 0; c < 3; ++c) u.U(p[i], c) = t.U(i, c);
        for (std::size_t i = 0; i < 12; ++i)
            for (std::size_t c = 0; c < 3; ++c) u.V(q[i], c) = t.V(i, c);
        const auto a = topsvd_to_cur(t, 3), b = topsvd_to_cur(u, 3);
        std::vector<std::size_t> pr, qc;
        for (auto i : a.row_idx) pr.push_back(p[i]);
        for (auto j : a.col_idx) qc.push_back(q[j]);
        std::sort(pr.begin(), pr.end());
        std::sort(qc.begin(), qc.end());
        EXPECT_EQ(b.row_idx, pr);
        EXPECT_EQ(b.col_idx, qc);
    }
}

TEST(TopSvdToCur, QualityAgainstExhaustiveSearch) {
    const RMat M = testutil::with_spectrum(8, 8, {3, 1.5, 1}, 77);
    const auto s = truncate_svd(svd(M), 3);
    const auto c = topsvd_to_cur(s, 3);
    double best = std::numeric_limits<double>::infinity();
    const auto all = combinations(8, 3);
    for (const auto& r : all)
        for (const auto& cc : all) best = std::min(best, oracle_quality(M, r, cc, 3));
    const double got = oracle_quality(M, c.row_idx, c.col_idx, 3);
    EXPECT_NEAR(got, c.quality, 1e-8 * got);
    EXPECT_GE(got, best - 1e-12);
    RecordProperty("exhaustive_optimum", std::to_string(best));
    RecordProperty("maxvol_quality", std::to_string(got));
    EXPECT_LE(got, 4.0 * 3);
}

TEST(TopSvdToCur, SeededRankThreeQuality) {
    int within = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = truncate_svd(svd(testutil::with_spectrum(20, 20, {5, 3, 2}, seed)), 3);
        const auto c = topsvd_to_cur(s, 3);
        within += c.quality <= 12.0;
        // the selected generator makes an exact CUR of the rank-3 matrix
        MatrixOracle o(s.reconstruct());
        EXPECT_TRUE(verify_cur_exactness(o.audit(), canonical_cur(o, c.row_idx, c.col_idx, 3)).exact);
    }
    RecordProperty("within_4rho", within);
    EXPECT_GE(within, 18);
}
