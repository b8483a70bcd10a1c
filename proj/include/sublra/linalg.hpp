#ifndef SUBLRA_LINALG_HPP
#define SUBLRA_LINALG_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "sublra/matrix.hpp"

namespace sublra {

// Raised when an iterative kernel exhausts its iteration cap.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Compact SVD: A ~= U * diag(sigma) * V^H, sigma nonincreasing.
template <typename Scalar>
struct TopSVD {
    Mat<Scalar> U;              // m x r, orthonormal columns
    std::vector<double> sigma;  // r values
    Mat<Scalar> V;              // n x r, orthonormal columns

    std::size_t rank() const noexcept { return sigma.size(); }
    Mat<Scalar> reconstruct(Flops* flops = nullptr) const;
};

// A * P = Q * R with P given by perm: column t of A*P is A[:, perm[t]].
template <typename Scalar>
struct QrpFactorization {
    Mat<Scalar> Q;  // m x min(m,n)
    Mat<Scalar> R;  // min(m,n) x n, upper triangular
    std::vector<std::size_t> perm;
    std::size_t numrank = 0;
};

template <typename Scalar>
struct QrFactorization {
    Mat<Scalar> Q;
    Mat<Scalar> R;
};

// One-sided Jacobi parameters.
inline constexpr int kSvdMaxSweeps = 60;
inline constexpr double kJacobiRelTol = 1e-15;
inline constexpr double kJacobiAbsTol = 1e-14;  // relative to ||A||_F
inline constexpr double kPinvCutoff = 1e-12;
inline constexpr int kPowerMaxIters = 300;
inline constexpr double kPowerTol = 1e-10;
inline constexpr std::size_t kQrpRecomputeEvery = 16;

template <typename Scalar>
TopSVD<Scalar> svd(const Mat<Scalar>& A, Flops* flops = nullptr);

template <typename Scalar>
std::vector<double> singular_values(const Mat<Scalar>& A, Flops* flops = nullptr);

template <typename Scalar>
QrFactorization<Scalar> qr(const Mat<Scalar>& A, Flops* flops = nullptr);

template <typename Scalar>
QrpFactorization<Scalar> qrp(const Mat<Scalar>& A, double tol, Flops* flops = nullptr);

// Orthonormal basis of the column space of a (generically full column rank) matrix.
template <typename Scalar>
Mat<Scalar> orthonormal_basis(const Mat<Scalar>& A);

template <typename Scalar>
TopSVD<Scalar> truncate_svd(const TopSVD<Scalar>& s, std::size_t rho);

template <typename Scalar>
struct PseudoInverse {
    Mat<Scalar> pinv;  // cols x rows of the input
    std::size_t effective_rank = 0;
    double sigma_max = 0.0;
};

// V_rho * diag(1/sigma) * U_rho^H of the rho-truncated SVD, dropping
// singular values below kPinvCutoff * sigma_1.
template <typename Scalar>
PseudoInverse<Scalar> pinv_trunc(const Mat<Scalar>& G, std::size_t rho, Flops* flops = nullptr);

struct Norms {
    double frobenius = 0.0;
    double spectral = 0.0;
    bool converged = true;
    int iterations = 0;
};

template <typename Scalar>
Norms norms(const Mat<Scalar>& A);

double tail_norm(std::span<const double> sigma, std::size_t rho);

// min over unitary Omega of ||B1 * Omega - B2||_F (orthogonal Procrustes).
template <typename Scalar>
double subspace_distance(const Mat<Scalar>& B1, const Mat<Scalar>& B2);

// ||A^H A - I||_F
template <typename Scalar>
double orthonormality_defect(const Mat<Scalar>& A);

// Numerical rank: count of singular values above rel_tol * sigma_1.
std::size_t numerical_rank(std::span<const double> sigma, double rel_tol);

//
// Compensated (twice-working-precision) kernels. Products are split with
// fma and sums accumulated with TwoSum, so the result is as accurate as
// if computed in doubled precision and rounded once.
//
RMat matmul_compensated(const RMat& A, const RMat& B);
// C - A*B with every entry evaluated as one compensated dot product.
RMat sub_matmul_compensated(const RMat& C, const RMat& A, const RMat& B);

}  // namespace sublra

#endif
