#include "sublra/sketch.hpp"

#include <algorithm>
#include <numeric>
#include <variant>

namespace sublra {

namespace {

template <typename Scalar>
std::size_t left_rows(const Multiplier<Scalar>& F) {
    return std::visit(
        [](const auto& f) -> std::size_t {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Mat<Scalar>>) return f.rows();
            else return f.k();
        },
        F);
}

template <typename Scalar>
std::size_t right_cols(const Multiplier<Scalar>& H) {
    return std::visit(
        [](const auto& h) -> std::size_t {
            using T = std::decay_t<decltype(h)>;
            if constexpr (std::is_same_v<T, Mat<Scalar>>) return h.cols();
            else return h.k();
        },
        H);
}

// R with its columns moved back to their unpivoted positions, first `rows` rows.
template <typename Scalar>
Mat<Scalar> unpivot(const Mat<Scalar>& R, const std::vector<std::size_t>& perm, std::size_t rows) {
    Mat<Scalar> out(rows, R.cols());
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t t = 0; t < R.cols(); ++t) out(i, perm[t]) = R(i, t);
    return out;
}

template <typename Scalar>
double trailing_norm(const Mat<Scalar>& R, std::size_t from) {
    double s = 0.0;
    for (std::size_t i = from; i < R.rows(); ++i)
        for (std::size_t j = 0; j < R.cols(); ++j) s += abs2(R(i, j));
    return std::sqrt(s);
}

}  // namespace

template <typename Scalar>
Mat<Scalar> LRA3<Scalar>::dense(Flops* flops) const {
    const double left_first = double(U.rows()) * U.cols() * T.cols() + double(U.rows()) * T.cols() * V.cols();
    const double right_first = double(T.rows()) * T.cols() * V.cols() + double(U.rows()) * U.cols() * V.cols();
    if (left_first <= right_first) return matmul(matmul(U, T, flops), V, flops);
    return matmul(U, matmul(T, V, flops), flops);
}

template <typename Scalar>
SketchSet<Scalar> sketch(MatrixOracle& o, const Multiplier<Scalar>& F, const Multiplier<Scalar>& H) {
    if (left_rows(F) < 1 || right_cols(H) < 1)
        throw std::invalid_argument("sketch: k and l must be at least 1");
    Flops flops;
    const std::size_t before = o.reads();
    SketchSet<Scalar> s;
    s.W = std::visit([&](const auto& f) { return apply_left(f, o, &flops); }, F);
    s.Y = std::visit([&](const auto& h) { return apply_right(h, o, &flops); }, H);
    s.Z = std::visit(
        [&](const auto& f) -> Mat<Scalar> {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Mat<Scalar>>) return matmul(f, s.Y, &flops);
            else return apply_left(f, s.Y, &flops);
        },
        F);
    s.reads = o.reads() - before;
    s.flops = flops.count();
    s.provenance = "F=" + describe(F) + ";H=" + describe(H);
    return s;
}

template <typename Scalar>
NystromResult<Scalar> nystrom_reconstruct(const SketchSet<Scalar>& s, std::size_t rho) {
    const std::size_t k = s.Z.rows(), l = s.Z.cols();
    if (rho == 0 || rho > std::min(k, l))
        throw std::invalid_argument("nystrom_reconstruct: rho must lie in [1, min(k, l)]");
    if (max_abs(s.Z) == 0.0) throw SketchLostInput();
    Flops flops;
    PseudoInverse<Scalar> core;
    try {
        core = pinv_trunc(s.Z, rho, &flops);
    } catch (const std::domain_error&) {
        throw SketchLostInput();
    }
    NystromResult<Scalar> out;
    out.lra = {s.Y, std::move(core.pinv), s.W};
    out.core_rank = core.effective_rank;
    out.flops = flops.count();
    return out;
}

template <typename Scalar>
LraSvdResult<Scalar> lra_to_topsvd(const Mat<Scalar>& A, const Mat<Scalar>& W, const Mat<Scalar>& B,
                                   std::size_t r) {
    if (A.cols() != W.rows() || W.cols() != B.rows())
        throw std::invalid_argument("lra_to_topsvd: factor dimensions do not chain");
    if (r == 0 || r > std::min(W.rows(), W.cols()))
        throw std::invalid_argument("lra_to_topsvd: r must lie in [1, min(k, l)]");

    Flops flops;
    LraSvdResult<Scalar> out;
    const auto qa = qrp(A, kLraQrpTol, &flops);
    const auto qb = qrp(adjoint(B), kLraQrpTol, &flops);
    out.numrank_left = qa.numrank;
    out.numrank_right = qb.numrank;
    out.discarded_left = trailing_norm(qa.R, qa.numrank);
    out.discarded_right = trailing_norm(qb.R, qb.numrank);
    if (qa.numrank == 0 || qb.numrank == 0)
        throw std::domain_error("lra_to_topsvd: the product is numerically zero");

    const auto ra = unpivot(qa.R, qa.perm, qa.numrank);  // na x l
    const auto rb = unpivot(qb.R, qb.perm, qb.numrank);  // nb x k
    const auto core = matmul(matmul(ra, W, &flops), adjoint(rb), &flops);
    const auto cs = svd(core, &flops);

    std::size_t rank = r;
    const std::size_t avail = std::min(qa.numrank, qb.numrank);
    if (rank > avail) {
        out.warnings.push_back("requested rank " + std::to_string(r) + " exceeds detected numerical rank " +
                               std::to_string(avail) + "; truncated");
        rank = avail;
    }
    out.rank = rank;
    const auto qa_used = leading(qa.Q, qa.Q.rows(), qa.numrank);
    const auto qb_used = leading(qb.Q, qb.Q.rows(), qb.numrank);
    out.svd.U = matmul(qa_used, leading(cs.U, cs.U.rows(), rank), &flops);
    out.svd.V = matmul(qb_used, leading(cs.V, cs.V.rows(), rank), &flops);
    out.svd.sigma.assign(cs.sigma.begin(), cs.sigma.begin() + static_cast<std::ptrdiff_t>(rank));
    out.flops = flops.count();
    return out;
}

template <typename Scalar>
Recompressed<Scalar> recompress(const LRA3<Scalar>& lra, std::size_t rho) {
    auto res = lra_to_topsvd(lra.U, lra.T, lra.V, rho);
    Recompressed<Scalar> out;
    out.svd = std::move(res.svd);
    out.lra2.X = scale_cols(out.svd.U, std::span<const double>(out.svd.sigma));
    out.lra2.Y = adjoint(out.svd.V);
    out.flops = res.flops;
    out.warnings = std::move(res.warnings);
    return out;
}

#define SUBLRA_INSTANTIATE(S)                                                                     \
    template struct LRA3<S>;                                                                      \
    template SketchSet<S> sketch<S>(MatrixOracle&, const Multiplier<S>&, const Multiplier<S>&);   \
    template NystromResult<S> nystrom_reconstruct<S>(const SketchSet<S>&, std::size_t);           \
    template LraSvdResult<S> lra_to_topsvd<S>(const Mat<S>&, const Mat<S>&, const Mat<S>&,        \
                                              std::size_t);                                       \
    template Recompressed<S> recompress<S>(const LRA3<S>&, std::size_t);

SUBLRA_INSTANTIATE(double)
SUBLRA_INSTANTIATE(cplx)

#undef SUBLRA_INSTANTIATE

}  // namespace sublra
