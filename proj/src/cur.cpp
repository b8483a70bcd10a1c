#include "sublra/cur.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace sublra {

RMat CURDecomp::dense() const {
    return matmul(matmul(C, nucleus), R);
}

RMat CURDecomp::generator() const {
    std::vector<std::size_t> rows(R.rows());
    std::iota(rows.begin(), rows.end(), 0);
    return submatrix(R, rows, col_idx);
}

CURDecomp canonical_cur(MatrixOracle& o, std::span<const std::size_t> row_idx,
                        std::span<const std::size_t> col_idx, std::size_t rho) {
    const std::vector<double> rw(row_idx.size(), 1.0), cw(col_idx.size(), 1.0);
    return canonical_cur(o, row_idx, col_idx, rho, rw, cw);
}

CURDecomp canonical_cur(MatrixOracle& o, std::span<const std::size_t> row_idx,
                        std::span<const std::size_t> col_idx, std::size_t rho,
                        std::span<const double> row_weights, std::span<const double> col_weights) {
    if (rho == 0) throw std::invalid_argument("canonical_cur: rho must be positive");
    if (row_idx.size() < rho || col_idx.size() < rho)
        throw std::invalid_argument("canonical_cur: need at least rho rows and rho columns");
    if (row_weights.size() != row_idx.size() || col_weights.size() != col_idx.size())
        throw std::invalid_argument("canonical_cur: weight lengths differ from index lengths");

    std::vector<std::size_t> all_rows(o.rows()), all_cols(o.cols());
    std::iota(all_rows.begin(), all_rows.end(), 0);
    std::iota(all_cols.begin(), all_cols.end(), 0);

    CURDecomp c;
    c.row_idx.assign(row_idx.begin(), row_idx.end());
    c.col_idx.assign(col_idx.begin(), col_idx.end());
    c.rho = rho;
    c.C = o.read_block(all_rows, col_idx);
    c.R = o.read_block(row_idx, all_cols);

    RMat Gs = c.generator();
    for (std::size_t a = 0; a < Gs.rows(); ++a)
        for (std::size_t b = 0; b < Gs.cols(); ++b) Gs(a, b) *= row_weights[a] * col_weights[b];

    PseudoInverse<double> p;
    try {
        p = pinv_trunc(Gs, rho);
    } catch (const std::domain_error&) {
        throw std::domain_error("canonical_cur: rank-deficient generator");
    }
    if (p.effective_rank < rho) throw std::domain_error("canonical_cur: rank-deficient generator");
    c.effective_rank = p.effective_rank;
    for (std::size_t a = 0; a < p.pinv.rows(); ++a)
        for (std::size_t b = 0; b < p.pinv.cols(); ++b) p.pinv(a, b) *= col_weights[a] * row_weights[b];
    c.nucleus = std::move(p.pinv);
    return c;
}

CurExactness verify_cur_exactness(const RMat& M, const CURDecomp& c) {
    const double mf = frobenius_norm(M);
    if (mf == 0.0) throw std::invalid_argument("verify_cur_exactness: M has rank 0");
    CurExactness out;
    out.fro_error = frobenius_norm(M - c.dense());
    out.exact = out.fro_error <= 1e-8 * mf;
    return out;
}

MaxvolResult maxvol(const RMat& U) {
    const std::size_t m = U.rows(), r = U.cols();
    if (r == 0 || r > m) throw std::invalid_argument("maxvol: need a tall matrix with at least one column");
    MaxvolResult out;
    const auto start = qrp(transpose(U), 0.0);
    out.rows.assign(start.perm.begin(), start.perm.begin() + static_cast<std::ptrdiff_t>(r));

    std::vector<std::size_t> cols(r);
    std::iota(cols.begin(), cols.end(), 0);
    out.converged = false;
    for (out.sweeps = 0; out.sweeps < kMaxvolSweeps; ++out.sweeps) {
        const RMat sub = submatrix(U, out.rows, cols);
        const auto inv = pinv_trunc(sub, r);
        if (inv.effective_rank < r) break;  // singular start: leave the flag unset
        const RMat B = matmul(U, inv.pinv);
        std::size_t bi = 0, bj = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < r; ++j)
                if (std::abs(B(i, j)) > best) {
                    best = std::abs(B(i, j));
                    bi = i;
                    bj = j;
                }
        if (best <= kMaxvolGrowth) {
            out.converged = true;
            break;
        }
        out.rows[bj] = bi;
    }
    return out;
}

CurSelection topsvd_to_cur(const TopSVD<double>& s, std::size_t rho) {
    if (rho == 0 || rho > s.rank()) throw std::invalid_argument("topsvd_to_cur: rho must lie in [1, rank]");
    const RMat Ur = leading(s.U, s.U.rows(), rho);
    const RMat Vr = leading(s.V, s.V.rows(), rho);
    const auto mr = maxvol(Ur);
    const auto mc = maxvol(Vr);

    CurSelection out;
    out.row_idx = mr.rows;
    out.col_idx = mc.rows;
    std::sort(out.row_idx.begin(), out.row_idx.end());
    std::sort(out.col_idx.begin(), out.col_idx.end());
    out.converged = mr.converged && mc.converged;

    std::vector<std::size_t> cols(rho);
    std::iota(cols.begin(), cols.end(), 0);
    const RMat G = matmul(scale_cols(submatrix(Ur, out.row_idx, cols),
                                     std::span<const double>(s.sigma.data(), rho)),
                          transpose(submatrix(Vr, out.col_idx, cols)));
    const auto gs = singular_values(G);
    const double smin = gs.back();
    out.quality = smin > 0.0 ? s.sigma[rho - 1] / smin : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace sublra
