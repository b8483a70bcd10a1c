#ifndef SUBLRA_TEST_UTIL_HPP
#define SUBLRA_TEST_UTIL_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sublra/matrix.hpp"
#include "sublra/random.hpp"

namespace testutil {

using sublra::RMat;
using sublra::CMat;

inline RMat random_matrix(std::size_t m, std::size_t n, std::uint64_t seed) {
    sublra::Rng rng = sublra::make_rng(seed);
    return sublra::gaussian_matrix(m, n, rng);
}

inline Eigen::MatrixXd to_eigen(const RMat& A) {
    Eigen::MatrixXd E(A.rows(), A.cols());
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j) E(i, j) = A(i, j);
    return E;
}

inline Eigen::MatrixXcd to_eigen(const CMat& A) {
    Eigen::MatrixXcd E(A.rows(), A.cols());
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j) E(i, j) = A(i, j);
    return E;
}

inline RMat from_eigen(const Eigen::MatrixXd& E) {
    RMat A(E.rows(), E.cols());
    for (Eigen::Index i = 0; i < E.rows(); ++i)
        for (Eigen::Index j = 0; j < E.cols(); ++j) A(i, j) = E(i, j);
    return A;
}

// Singular values from an independent implementation.
template <typename Scalar>
std::vector<double> oracle_singular_values(const sublra::Mat<Scalar>& A) {
    const auto E = to_eigen(A);
    Eigen::JacobiSVD<std::decay_t<decltype(E)>> s(E);
    const auto& v = s.singularValues();
    return {v.data(), v.data() + v.size()};
}

// sqrt of the sum of squared singular values beyond the first rho.
template <typename Scalar>
double oracle_tail(const sublra::Mat<Scalar>& A, std::size_t rho) {
    const auto s = oracle_singular_values(A);
    double t = 0.0;
    for (std::size_t j = rho; j < s.size(); ++j) t += s[j] * s[j];
    return std::sqrt(t);
}

inline double fro(const RMat& A) { return to_eigen(A).norm(); }

// Matrix with orthonormal columns from QR of a seeded Gaussian matrix.
inline RMat oracle_orthonormal(std::size_t m, std::size_t r, std::uint64_t seed) {
    const Eigen::MatrixXd G = to_eigen(random_matrix(m, r, seed));
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(m, r);
    return from_eigen(Q);
}

// U diag(sigma) V^T with seeded orthonormal factors.
inline RMat with_spectrum(std::size_t m, std::size_t n, const std::vector<double>& sigma, std::uint64_t seed) {
    const RMat U = oracle_orthonormal(m, sigma.size(), sublra::split_seed(seed, 1));
    const RMat V = oracle_orthonormal(n, sigma.size(), sublra::split_seed(seed, 2));
    return sublra::matmul(sublra::scale_cols(U, sigma), sublra::transpose(V));
}

}  // namespace testutil

#endif
