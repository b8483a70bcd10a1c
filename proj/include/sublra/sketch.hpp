#ifndef SUBLRA_SKETCH_HPP
#define SUBLRA_SKETCH_HPP

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sublra/linalg.hpp"
#include "sublra/matrix.hpp"
#include "sublra/multipliers.hpp"
#include "sublra/oracle.hpp"

namespace sublra {

// M ~= X * Y
template <typename Scalar>
struct LRA2 {
    Mat<Scalar> X;  // m x r
    Mat<Scalar> Y;  // r x n

    Mat<Scalar> dense() const { return matmul(X, Y); }
};

// M ~= U * T * V
template <typename Scalar>
struct LRA3 {
    Mat<Scalar> U;  // m x k'
    Mat<Scalar> T;  // k' x l'
    Mat<Scalar> V;  // l' x n

    Mat<Scalar> dense(Flops* flops = nullptr) const;
    LRA2<Scalar> as_lra2() const { return {matmul(U, T), V}; }
};

template <typename Scalar>
struct SketchSet {
    Mat<Scalar> W;  // F*M, k x n
    Mat<Scalar> Y;  // M*H, m x l
    Mat<Scalar> Z;  // F*Y, k x l
    std::string provenance;
    std::size_t reads = 0;
    std::uint64_t flops = 0;
};

// The sketch annihilated the input (Z == 0); expected on unseen delta inputs.
class SketchLostInput : public std::runtime_error {
public:
    SketchLostInput() : std::runtime_error("sketch lost the input") {}
};

template <typename Scalar>
SketchSet<Scalar> sketch(MatrixOracle& o, const Multiplier<Scalar>& F, const Multiplier<Scalar>& H);

template <typename Scalar>
struct NystromResult {
    LRA3<Scalar> lra;
    std::size_t core_rank = 0;  // rank actually inverted in Z
    std::uint64_t flops = 0;
};

// (M H) * pinv_trunc(F M H, rho') * (F M), rho' = min(rho, numerical rank of Z).
template <typename Scalar>
NystromResult<Scalar> nystrom_reconstruct(const SketchSet<Scalar>& s, std::size_t rho);

inline constexpr double kLraQrpTol = 1e-12;

template <typename Scalar>
struct LraSvdResult {
    TopSVD<Scalar> svd;
    std::size_t rank = 0;
    std::size_t numrank_left = 0;
    std::size_t numrank_right = 0;
    double discarded_left = 0.0;   // ||trailing block of R||_F for A
    double discarded_right = 0.0;  // same for B^H
    std::uint64_t flops = 0;
    std::vector<std::string> warnings;
};

//
// Top SVD of A*W*B without forming the m x n product.
//
// Column-pivoted QR of A and of B^H reduces the problem to the small core
// R_A P^T W P' R_B^H; its SVD is lifted back through the orthonormal
// factors and truncated to r. QR blocks below kLraQrpTol relative to the
// leading pivot are discarded and their norms reported.
//
template <typename Scalar>
LraSvdResult<Scalar> lra_to_topsvd(const Mat<Scalar>& A, const Mat<Scalar>& W, const Mat<Scalar>& B,
                                   std::size_t r);

template <typename Scalar>
struct Recompressed {
    LRA2<Scalar> lra2;  // X = U Sigma, Y = V^H
    TopSVD<Scalar> svd;
    std::uint64_t flops = 0;
    std::vector<std::string> warnings;
};

template <typename Scalar>
Recompressed<Scalar> recompress(const LRA3<Scalar>& lra, std::size_t rho);

// k = 4 rho + 2, l = 2 rho + 1
inline std::size_t default_left_size(std::size_t rho) { return 4 * rho + 2; }
inline std::size_t default_right_size(std::size_t rho) { return 2 * rho + 1; }

}  // namespace sublra

#endif
