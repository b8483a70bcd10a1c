#ifndef SUBLRA_MULTIPLIERS_HPP
#define SUBLRA_MULTIPLIERS_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sublra/matrix.hpp"
#include "sublra/oracle.hpp"

namespace sublra {

enum class Side { left, right };
enum class Twiddle { hadamard, fourier };
enum class OrthoKind { givens, householder };

//
// Stage descriptors. A multiplier acts on a column vector x of length n by
// applying its stages in list order, then keeping the sampled coordinates
// times sample_scale.
//
template <typename Scalar>
struct DiagonalStage {
    std::vector<Scalar> values;
};

// Radix-2 butterfly pairing i with i + 2^level inside blocks of 2^(level+1).
// Hadamard: (a, b) -> (a + b, a - b). Fourier (decimation in time):
// (a, b) -> (a + w b, a - w b) with w = exp(-2 pi i j / 2^(level+1)),
// j the offset inside the block. Unscaled; normalization lives in the
// diagonal stage.
struct ButterflyStage {
    unsigned level = 0;
    Twiddle rule = Twiddle::hadamard;
};

// y[i] = x[source[i]]
struct PermutationStage {
    std::vector<std::size_t> source;
};

// Upper bidiagonal: y[i] = diag[i] x[i] + super[i] x[i+1].
template <typename Scalar>
struct BidiagonalStage {
    std::vector<Scalar> diag;
    std::vector<Scalar> super;
};

// (x_i, x_j) -> (x_i cos t - x_j sin t, x_i sin t + x_j cos t)
struct GivensStage {
    std::size_t i = 0;
    std::size_t j = 0;
    double angle = 0.0;
};

// I - 2 v v^H with v a sparse unit vector.
template <typename Scalar>
struct HouseholderStage {
    std::vector<std::pair<std::size_t, Scalar>> v;
};

template <typename Scalar>
using Stage = std::variant<DiagonalStage<Scalar>, ButterflyStage, PermutationStage,
                           BidiagonalStage<Scalar>, GivensStage, HouseholderStage<Scalar>>;

template <typename Scalar>
using SparseRow = std::vector<std::pair<std::size_t, Scalar>>;

template <typename Scalar>
class SparseMultiplier {
public:
    SparseMultiplier(std::size_t n, std::vector<Stage<Scalar>> stages,
                     std::vector<std::size_t> sample, double sample_scale, Side side,
                     std::string descriptor);

    std::size_t n() const noexcept { return n_; }
    // Number of sampled rows (k for a left multiplier, l for a right one).
    std::size_t k() const noexcept { return sample_.size(); }
    Side side() const noexcept { return side_; }
    // Shape of the operator as it multiplies M: k x n (left) or n x k (right).
    std::size_t rows() const noexcept { return side_ == Side::left ? k() : n_; }
    std::size_t cols() const noexcept { return side_ == Side::left ? n_ : k(); }

    const std::vector<Stage<Scalar>>& stages() const noexcept { return stages_; }
    const std::vector<std::size_t>& sample() const noexcept { return sample_; }
    double sample_scale() const noexcept { return sample_scale_; }
    const std::string& descriptor() const noexcept { return descriptor_; }
    unsigned butterfly_levels() const noexcept;

    const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

    SparseMultiplier with_side(Side s) const;

    // Row-form action x (length n) -> k sampled outputs.
    std::vector<Scalar> apply(std::span<const Scalar> x, Flops* flops = nullptr) const;
    // Row s of the row-form operator as a sorted sparse vector (exact zeros dropped).
    SparseRow<Scalar> realized_row(std::size_t s, Flops* flops = nullptr) const;
    // Cost of apply() on one vector, by stage.
    std::uint64_t flops_per_vector() const;

private:
    std::size_t n_;
    std::vector<Stage<Scalar>> stages_;
    std::vector<std::size_t> sample_;
    double sample_scale_;
    Side side_;
    std::string descriptor_;
    std::vector<std::string> warnings_;
};

struct MultiplierFlags {
    bool identity_diagonal = false;     // replace random signs/phases by 1
    bool identity_permutation = false;  // bidiagonal family: permutations forced to identity
    bool permute = false;               // random permutation before sampling
    bool bit_reverse = false;           // Fourier: bit-reversal on the input side
    bool diagonal_scaling = false;      // orthogonal family: random +-1 input scaling
};

SparseMultiplier<double> gen_abridged_hadamard(std::size_t n, unsigned d, std::size_t k,
                                               std::uint64_t seed, Side side = Side::left,
                                               const MultiplierFlags& flags = {});

SparseMultiplier<cplx> gen_abridged_fourier(std::size_t n, unsigned d, std::size_t k,
                                            std::uint64_t seed, Side side = Side::left,
                                            const MultiplierFlags& flags = {});

SparseMultiplier<double> gen_bidiag_perm(std::size_t n, std::size_t factors, std::size_t k,
                                         std::uint64_t seed, Side side = Side::left,
                                         const MultiplierFlags& flags = {});

SparseMultiplier<double> gen_orthogonal_partial(std::size_t n, OrthoKind kind, std::size_t stages,
                                                std::size_t k, std::uint64_t seed,
                                                Side side = Side::left,
                                                const MultiplierFlags& flags = {});

// Orthonormal k-row multiplier whose rows are supported on `support`:
// random Givens rotations inside the support, then the support is moved to
// the front and the first k rows are kept (k = support.size()).
SparseMultiplier<double> gen_supported_orthogonal(std::size_t n,
                                                  std::span<const std::size_t> support,
                                                  std::size_t rotations, std::uint64_t seed,
                                                  Side side = Side::left);

// k x n with iid N(0,1) entries.
RMat gen_gaussian(std::size_t k, std::size_t n, std::uint64_t seed);

SparseMultiplier<cplx> to_complex(const SparseMultiplier<double>& m);

template <typename Scalar>
Mat<Scalar> densify(const SparseMultiplier<Scalar>& s);

// F*M and M*H through the oracle; only rows (columns) in the support of the
// realized multiplier are read.
template <typename Scalar>
Mat<Scalar> apply_left(const SparseMultiplier<Scalar>& F, MatrixOracle& o, Flops* flops = nullptr);
template <typename Scalar>
Mat<Scalar> apply_right(const SparseMultiplier<Scalar>& H, MatrixOracle& o, Flops* flops = nullptr);

// Same products on in-memory matrices.
template <typename Scalar>
Mat<Scalar> apply_left(const SparseMultiplier<Scalar>& F, const Mat<Scalar>& X, Flops* flops = nullptr);
template <typename Scalar>
Mat<Scalar> apply_right(const SparseMultiplier<Scalar>& H, const Mat<Scalar>& X, Flops* flops = nullptr);

// Dense multipliers: reads every row (column) of M with a nonzero coefficient.
template <typename Scalar>
Mat<Scalar> apply_left(const Mat<Scalar>& F, MatrixOracle& o, Flops* flops = nullptr);
template <typename Scalar>
Mat<Scalar> apply_right(const Mat<Scalar>& H, MatrixOracle& o, Flops* flops = nullptr);

template <typename Scalar>
using Multiplier = std::variant<SparseMultiplier<Scalar>, Mat<Scalar>>;

template <typename Scalar>
std::string describe(const Multiplier<Scalar>& m);

}  // namespace sublra

#endif
