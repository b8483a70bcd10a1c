#include "sublra/linalg.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "sublra/random.hpp"

namespace sublra {

namespace {

template <typename Scalar>
Scalar dotc(std::span<const Scalar> x, std::span<const Scalar> y) {
    Scalar s{};
    for (std::size_t k = 0; k < x.size(); ++k) s += conj_of(x[k]) * y[k];
    return s;
}

template <typename Scalar>
double norm2sq(std::span<const Scalar> x) {
    double s = 0.0;
    for (const auto& v : x) s += abs2(v);
    return s;
}

template <typename Scalar>
Scalar phase_of(const Scalar& x) {
    const double a = std::abs(x);
    if (a == 0.0) return Scalar(1);
    return x / a;
}

// Columns of U (stored as rows of Ut) in order 0..r-1 are made orthonormal
// by two passes of modified Gram-Schmidt; columns that collapse are replaced
// by coordinate vectors orthogonalized against the preceding ones.
template <typename Scalar>
void reorthonormalize_rows(Mat<Scalar>& Ut) {
    const std::size_t r = Ut.rows(), m = Ut.cols();
    for (std::size_t j = 0; j < r; ++j) {
        auto uj = Ut.row(j);
        double nrm = std::sqrt(norm2sq<Scalar>(uj));
        bool replace = !(nrm > 0.0);
        if (!replace) {
            for (auto& x : uj) x /= nrm;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t i = 0; i < j; ++i) {
                    auto ui = Ut.row(i);
                    const Scalar p = dotc<Scalar>(ui, uj);
                    for (std::size_t k = 0; k < m; ++k) uj[k] -= p * ui[k];
                }
            }
            nrm = std::sqrt(norm2sq<Scalar>(uj));
            replace = nrm < 0.5;
            if (!replace)
                for (auto& x : uj) x /= nrm;
        }
        if (replace) {
            // the coordinate vector with the largest component outside the span so far
            std::size_t best = 0;
            double best_res = -1.0;
            for (std::size_t k = 0; k < m; ++k) {
                double res = 1.0;
                for (std::size_t i = 0; i < j; ++i) res -= abs2(Ut(i, k));
                if (res > best_res) {
                    best_res = res;
                    best = k;
                }
            }
            std::fill(uj.begin(), uj.end(), Scalar{});
            uj[best] = Scalar(1);
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t i = 0; i < j; ++i) {
                    auto ui = Ut.row(i);
                    const Scalar p = dotc<Scalar>(ui, uj);
                    for (std::size_t k = 0; k < m; ++k) uj[k] -= p * ui[k];
                }
            }
            nrm = std::sqrt(norm2sq<Scalar>(uj));
            for (auto& x : uj) x /= nrm;
        }
    }
}

template <typename Scalar>
TopSVD<Scalar> jacobi_svd_tall(const Mat<Scalar>& A, Flops* flops) {
    const std::size_t m = A.rows(), n = A.cols();
    Mat<Scalar> Gt = transpose(A);  // row j holds column j
    Mat<Scalar> Vt = Mat<Scalar>::identity(n);
    std::vector<double> d(n);

    const double afro = frobenius_norm(A);
    const double abs_floor = (kJacobiAbsTol * afro) * (kJacobiAbsTol * afro);

    int sweep = 0;
    for (;;) {
        for (std::size_t j = 0; j < n; ++j) d[j] = norm2sq<Scalar>(Gt.row(j));
        tally(flops, 2ull * m * n);
        bool rotated = false;
        for (std::size_t j = 1; j < n; ++j) {
            for (std::size_t i = 0; i < j; ++i) {
                auto gi = Gt.row(i);
                auto gj = Gt.row(j);
                const Scalar c = dotc<Scalar>(gi, gj);
                tally(flops, 2ull * m);
                const double absc = std::abs(c);
                const double a = d[i], b = d[j];
                if (absc <= kJacobiRelTol * std::sqrt(a * b) || absc <= abs_floor) continue;
                rotated = true;
                const double zeta = (b - a) / (2.0 * absc);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                const Scalar ph = c / absc;
                const Scalar sn_conj_ph = sn * conj_of(ph);
                const Scalar sn_ph = sn * ph;
                for (std::size_t k = 0; k < m; ++k) {
                    const Scalar p = gi[k], q = gj[k];
                    gi[k] = cs * p - sn_conj_ph * q;
                    gj[k] = sn_ph * p + cs * q;
                }
                auto vi = Vt.row(i);
                auto vj = Vt.row(j);
                for (std::size_t k = 0; k < n; ++k) {
                    const Scalar p = vi[k], q = vj[k];
                    vi[k] = cs * p - sn_conj_ph * q;
                    vj[k] = sn_ph * p + cs * q;
                }
                d[i] = a - t * absc;
                d[j] = b + t * absc;
                tally(flops, 6ull * (m + n) + 20);
            }
        }
        ++sweep;
        if (!rotated) break;
        if (sweep >= kSvdMaxSweeps)
            throw ConvergenceError("svd: one-sided Jacobi did not converge in " +
                                   std::to_string(kSvdMaxSweeps) + " sweeps");
    }

    std::vector<double> sig(n);
    for (std::size_t j = 0; j < n; ++j) sig[j] = std::sqrt(norm2sq<Scalar>(Gt.row(j)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sig[x] > sig[y]; });

    Mat<Scalar> Ut(n, m), Vs(n, n);
    TopSVD<Scalar> out;
    out.sigma.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t j = order[r];
        out.sigma[r] = sig[j];
        auto src = Gt.row(j);
        auto dst = Ut.row(r);
        if (sig[j] > 0.0)
            for (std::size_t k = 0; k < m; ++k) dst[k] = src[k] / sig[j];
        std::copy(Vt.row(j).begin(), Vt.row(j).end(), Vs.row(r).begin());
    }
    reorthonormalize_rows(Ut);
    tally(flops, 4ull * m * n * n);
    out.U = transpose(Ut);
    out.V = transpose(Vs);
    return out;
}

template <typename Scalar>
QrpFactorization<Scalar> householder_qr(const Mat<Scalar>& A, bool pivot, double tol,
                                        Flops* flops) {
    const std::size_t m = A.rows(), n = A.cols();
    const std::size_t p = std::min(m, n);
    Mat<Scalar> Wt = transpose(A);  // row c = column c
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> cn(n), ref(n);
    for (std::size_t c = 0; c < n; ++c) cn[c] = ref[c] = norm2sq<Scalar>(Wt.row(c));
    tally(flops, 2ull * m * n);

    std::vector<std::vector<Scalar>> refl(p);
    for (std::size_t j = 0; j < p; ++j) {
        if (pivot) {
            if (j > 0 && j % kQrpRecomputeEvery == 0) {
                for (std::size_t c = j; c < n; ++c) {
                    auto w = Wt.row(c);
                    cn[c] = ref[c] = norm2sq<Scalar>(w.subspan(j));
                }
                tally(flops, 2ull * (m - j) * (n - j));
            }
            std::size_t best = j;
            for (std::size_t c = j + 1; c < n; ++c)
                if (cn[c] > cn[best]) best = c;
            if (best != j) {
                auto a = Wt.row(j), b = Wt.row(best);
                std::swap_ranges(a.begin(), a.end(), b.begin());
                std::swap(perm[j], perm[best]);
                std::swap(cn[j], cn[best]);
                std::swap(ref[j], ref[best]);
            }
        }
        auto x = Wt.row(j).subspan(j);
        const double xnorm = std::sqrt(norm2sq<Scalar>(x));
        tally(flops, 2ull * (m - j));
        std::vector<Scalar>& v = refl[j];
        if (xnorm == 0.0) {
            v.clear();
            continue;
        }
        const Scalar beta = -phase_of(x[0]) * xnorm;
        v.assign(x.begin(), x.end());
        v[0] -= beta;
        const double vn = std::sqrt(norm2sq<Scalar>(std::span<const Scalar>(v)));
        for (auto& e : v) e /= vn;
        x[0] = beta;
        std::fill(x.begin() + 1, x.end(), Scalar{});
        for (std::size_t c = j + 1; c < n; ++c) {
            auto y = Wt.row(c).subspan(j);
            const Scalar s = Scalar(2) * dotc<Scalar>(std::span<const Scalar>(v), y);
            for (std::size_t k = 0; k < y.size(); ++k) y[k] -= s * v[k];
            if (pivot) {
                cn[c] -= abs2(y[0]);
                if (cn[c] <= 1e-8 * ref[c] || cn[c] < 0.0) {
                    cn[c] = ref[c] = norm2sq<Scalar>(y.subspan(1));
                    tally(flops, 2ull * y.size());
                }
            }
        }
        tally(flops, 4ull * (m - j) * (n - j - 1) + 4ull * (m - j));
    }

    QrpFactorization<Scalar> out;
    out.R = Mat<Scalar>(p, n);
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t i = 0; i <= std::min(c, p - 1); ++i) out.R(i, c) = Wt(c, i);

    Mat<Scalar> Qt(p, m);
    for (std::size_t i = 0; i < p; ++i) Qt(i, i) = Scalar(1);
    for (std::size_t jj = p; jj-- > 0;) {
        const auto& v = refl[jj];
        if (v.empty()) continue;
        for (std::size_t c = 0; c < p; ++c) {
            auto y = Qt.row(c).subspan(jj);
            const Scalar s = Scalar(2) * dotc<Scalar>(std::span<const Scalar>(v), y);
            for (std::size_t k = 0; k < y.size(); ++k) y[k] -= s * v[k];
        }
        tally(flops, 4ull * (m - jj) * p);
    }
    out.Q = transpose(Qt);
    out.perm = std::move(perm);

    if (p > 0) {
        const double r00 = std::abs(out.R(0, 0));
        std::size_t rank = 0;
        if (r00 > 0.0)
            while (rank < p && std::abs(out.R(rank, rank)) > tol * r00) ++rank;
        out.numrank = rank;
    }
    return out;
}

inline void two_sum(double a, double b, double& s, double& e) {
    s = a + b;
    const double bb = s - a;
    e = (a - (s - bb)) + (b - bb);
}

}  // namespace

template <typename Scalar>
Mat<Scalar> TopSVD<Scalar>::reconstruct(Flops* flops) const {
    return matmul(scale_cols(U, std::span<const double>(sigma)), adjoint(V), flops);
}

template <typename Scalar>
TopSVD<Scalar> svd(const Mat<Scalar>& A, Flops* flops) {
    if (A.rows() == 0 || A.cols() == 0) throw std::invalid_argument("svd: empty matrix");
    if (!all_finite(A)) throw std::invalid_argument("svd: non-finite entries");
    if (A.rows() < A.cols()) {
        auto s = jacobi_svd_tall(adjoint(A), flops);
        std::swap(s.U, s.V);
        return s;
    }
    return jacobi_svd_tall(A, flops);
}

template <typename Scalar>
std::vector<double> singular_values(const Mat<Scalar>& A, Flops* flops) {
    return svd(A, flops).sigma;
}

template <typename Scalar>
QrFactorization<Scalar> qr(const Mat<Scalar>& A, Flops* flops) {
    if (A.rows() == 0 || A.cols() == 0) throw std::invalid_argument("qr: empty matrix");
    auto f = householder_qr(A, false, 0.0, flops);
    return {std::move(f.Q), std::move(f.R)};
}

template <typename Scalar>
QrpFactorization<Scalar> qrp(const Mat<Scalar>& A, double tol, Flops* flops) {
    if (A.rows() == 0 || A.cols() == 0) throw std::invalid_argument("qrp: empty matrix");
    if (!(tol >= 0.0)) throw std::invalid_argument("qrp: tolerance must be nonnegative");
    return householder_qr(A, true, tol, flops);
}

template <typename Scalar>
Mat<Scalar> orthonormal_basis(const Mat<Scalar>& A) {
    return qr(A).Q;
}

template <typename Scalar>
TopSVD<Scalar> truncate_svd(const TopSVD<Scalar>& s, std::size_t rho) {
    if (rho == 0)
        throw std::invalid_argument("truncate_svd: rho = 0 refused (request the zero matrix explicitly)");
    if (rho > s.rank())
        throw std::invalid_argument("truncate_svd: rho " + std::to_string(rho) + " exceeds rank " +
                                    std::to_string(s.rank()));
    TopSVD<Scalar> t;
    t.U = leading(s.U, s.U.rows(), rho);
    t.V = leading(s.V, s.V.rows(), rho);
    t.sigma.assign(s.sigma.begin(), s.sigma.begin() + static_cast<std::ptrdiff_t>(rho));
    return t;
}

template <typename Scalar>
PseudoInverse<Scalar> pinv_trunc(const Mat<Scalar>& G, std::size_t rho, Flops* flops) {
    if (rho == 0 || rho > std::min(G.rows(), G.cols()))
        throw std::invalid_argument("pinv_trunc: rho must lie in [1, min(rows, cols)]");
    const auto s = svd(G, flops);
    PseudoInverse<Scalar> out;
    out.sigma_max = s.sigma.front();
    if (!(out.sigma_max > DBL_MIN)) throw std::domain_error("pinv_trunc: numerically zero generator");
    const double cut = kPinvCutoff * out.sigma_max;
    std::size_t eff = 0;
    while (eff < rho && s.sigma[eff] > cut) ++eff;
    out.effective_rank = eff;
    out.pinv = Mat<Scalar>(G.cols(), G.rows());
    for (std::size_t j = 0; j < eff; ++j) {
        const double inv = 1.0 / s.sigma[j];
        for (std::size_t a = 0; a < G.cols(); ++a) {
            const Scalar va = s.V(a, j) * inv;
            for (std::size_t b = 0; b < G.rows(); ++b) out.pinv(a, b) += va * conj_of(s.U(b, j));
        }
    }
    tally(flops, 2ull * eff * G.rows() * G.cols());
    return out;
}

template <typename Scalar>
Norms norms(const Mat<Scalar>& A) {
    Norms out;
    out.frobenius = frobenius_norm(A);
    if (out.frobenius == 0.0) return out;
    Rng rng(0x5eedULL);
    std::normal_distribution<double> dist;
    std::vector<Scalar> x(A.cols());
    for (auto& v : x) {
        if constexpr (is_complex_v<Scalar>)
            v = Scalar(dist(rng), dist(rng));
        else
            v = dist(rng);
    }
    auto normalize = [](std::vector<Scalar>& v) {
        double s = 0.0;
        for (const auto& e : v) s += abs2(e);
        s = std::sqrt(s);
        if (s > 0.0)
            for (auto& e : v) e /= s;
        return s;
    };
    normalize(x);
    double lambda = 0.0;
    out.converged = false;
    std::vector<Scalar> y(A.rows()), z(A.cols());
    for (int it = 1; it <= kPowerMaxIters; ++it) {
        for (std::size_t i = 0; i < A.rows(); ++i) {
            Scalar s{};
            auto ai = A.row(i);
            for (std::size_t j = 0; j < A.cols(); ++j) s += ai[j] * x[j];
            y[i] = s;
        }
        std::fill(z.begin(), z.end(), Scalar{});
        for (std::size_t i = 0; i < A.rows(); ++i) {
            auto ai = A.row(i);
            for (std::size_t j = 0; j < A.cols(); ++j) z[j] += conj_of(ai[j]) * y[i];
        }
        double rayleigh = 0.0;
        for (const auto& e : y) rayleigh += abs2(e);
        out.iterations = it;
        if (normalize(z) == 0.0) {
            lambda = rayleigh;
            out.converged = true;
            break;
        }
        x = z;
        const bool done = it > 1 && std::abs(rayleigh - lambda) <= kPowerTol * rayleigh;
        lambda = rayleigh;
        if (done) {
            out.converged = true;
            break;
        }
    }
    out.spectral = std::sqrt(lambda);
    return out;
}

double tail_norm(std::span<const double> sigma, std::size_t rho) {
    if (rho > sigma.size()) throw std::invalid_argument("tail_norm: rho exceeds spectrum length");
    double s = 0.0;
    for (std::size_t j = rho; j < sigma.size(); ++j) s += sigma[j] * sigma[j];
    return std::sqrt(s);
}

std::size_t numerical_rank(std::span<const double> sigma, double rel_tol) {
    if (sigma.empty() || !(sigma.front() > 0.0)) return 0;
    std::size_t r = 0;
    while (r < sigma.size() && sigma[r] > rel_tol * sigma.front()) ++r;
    return r;
}

template <typename Scalar>
double subspace_distance(const Mat<Scalar>& B1, const Mat<Scalar>& B2) {
    if (B1.rows() != B2.rows() || B1.cols() != B2.cols())
        throw std::invalid_argument("subspace_distance: shape mismatch");
    const auto s = svd(adjoint_matmul(B1, B2));
    const auto omega = matmul(s.U, adjoint(s.V));
    return frobenius_norm(matmul(B1, omega) - B2);
}

template <typename Scalar>
double orthonormality_defect(const Mat<Scalar>& A) {
    return frobenius_norm(adjoint_matmul(A, A) - Mat<Scalar>::identity(A.cols()));
}

RMat matmul_compensated(const RMat& A, const RMat& B) {
    return sub_matmul_compensated(RMat(A.rows(), B.cols()), -1.0 * A, B);
}

RMat sub_matmul_compensated(const RMat& C, const RMat& A, const RMat& B) {
    if (A.cols() != B.rows() || C.rows() != A.rows() || C.cols() != B.cols())
        throw std::invalid_argument("sub_matmul_compensated: shape mismatch");
    RMat out(C.rows(), C.cols());
    for (std::size_t i = 0; i < C.rows(); ++i) {
        for (std::size_t j = 0; j < C.cols(); ++j) {
            double s = C(i, j), comp = 0.0;
            for (std::size_t p = 0; p < A.cols(); ++p) {
                const double prod = -A(i, p) * B(p, j);
                const double perr = std::fma(-A(i, p), B(p, j), -prod);
                double t, e;
                two_sum(s, prod, t, e);
                s = t;
                comp += e + perr;
            }
            out(i, j) = s + comp;
        }
    }
    return out;
}

#define SUBLRA_INSTANTIATE(S)                                                           \
    template struct TopSVD<S>;                                                          \
    template TopSVD<S> svd<S>(const Mat<S>&, Flops*);                                   \
    template std::vector<double> singular_values<S>(const Mat<S>&, Flops*);             \
    template QrFactorization<S> qr<S>(const Mat<S>&, Flops*);                           \
    template QrpFactorization<S> qrp<S>(const Mat<S>&, double, Flops*);                 \
    template Mat<S> orthonormal_basis<S>(const Mat<S>&);                                \
    template TopSVD<S> truncate_svd<S>(const TopSVD<S>&, std::size_t);                  \
    template PseudoInverse<S> pinv_trunc<S>(const Mat<S>&, std::size_t, Flops*);        \
    template Norms norms<S>(const Mat<S>&);                                             \
    template double subspace_distance<S>(const Mat<S>&, const Mat<S>&);                 \
    template double orthonormality_defect<S>(const Mat<S>&);

SUBLRA_INSTANTIATE(double)
SUBLRA_INSTANTIATE(cplx)

#undef SUBLRA_INSTANTIATE

}  // namespace sublra
