#ifndef SUBLRA_CUR_HPP
#define SUBLRA_CUR_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "sublra/linalg.hpp"
#include "sublra/matrix.hpp"
#include "sublra/oracle.hpp"

namespace sublra {

// M ~= C * nucleus * R with C = M[:, col_idx], R = M[row_idx, :].
struct CURDecomp {
    std::vector<std::size_t> row_idx;  // k rows
    std::vector<std::size_t> col_idx;  // l columns
    RMat C;                            // m x l
    RMat nucleus;                      // l x k
    RMat R;                            // k x n
    std::size_t rho = 0;
    std::size_t effective_rank = 0;

    RMat dense() const;
    // Generator G = M[row_idx, col_idx], taken from R.
    RMat generator() const;
};

// Canonical nucleus pinv_trunc(G, rho). Reads exactly the entries of C and R.
// Throws std::domain_error("rank-deficient generator") when sigma_rho(G) is
// below the pseudo-inverse cutoff.
CURDecomp canonical_cur(MatrixOracle& o, std::span<const std::size_t> row_idx,
                        std::span<const std::size_t> col_idx, std::size_t rho);

// Weighted variant used by leverage sampling: the nucleus is
// Dc * pinv_trunc(Dr G Dc, rho) * Dr, so C * nucleus * R equals the CUR of
// the rescaled rows and columns.
CURDecomp canonical_cur(MatrixOracle& o, std::span<const std::size_t> row_idx,
                        std::span<const std::size_t> col_idx, std::size_t rho,
                        std::span<const double> row_weights, std::span<const double> col_weights);

struct CurExactness {
    bool exact = false;
    double fro_error = 0.0;
};

// exact <=> ||M - C U R||_F <= 1e-8 ||M||_F. Rejects M = 0.
CurExactness verify_cur_exactness(const RMat& M, const CURDecomp& c);

struct MaxvolResult {
    std::vector<std::size_t> rows;
    bool converged = true;
    int sweeps = 0;
};

inline constexpr int kMaxvolSweeps = 50;
inline constexpr double kMaxvolGrowth = 1.01;

// Greedy volume maximization over r-row subsets of a tall m x r matrix.
MaxvolResult maxvol(const RMat& U);

struct CurSelection {
    std::vector<std::size_t> row_idx;  // sorted
    std::vector<std::size_t> col_idx;  // sorted
    double quality = 0.0;              // ||G^-1||_2 * sigma_rho
    bool converged = true;
};

// rho x rho generator selection from the factors of a top SVD alone.
CurSelection topsvd_to_cur(const TopSVD<double>& s, std::size_t rho);

}  // namespace sublra

#endif
