#include "sublra/multipliers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "sublra/random.hpp"

namespace sublra {

namespace {

bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

unsigned log2_exact(std::size_t n) {
    unsigned l = 0;
    while ((std::size_t{1} << l) < n) ++l;
    return l;
}

template <typename Scalar>
Scalar twiddle(Twiddle rule, std::size_t offset, std::size_t half) {
    if (rule == Twiddle::hadamard || offset == 0) return Scalar(1);
    if constexpr (is_complex_v<Scalar>) {
        const double ang = -std::numbers::pi * static_cast<double>(offset) / static_cast<double>(half);
        return Scalar(std::cos(ang), std::sin(ang));
    } else {
        throw std::logic_error("Fourier butterfly on a real multiplier");
    }
}

std::vector<std::size_t> bit_reversal(std::size_t n) {
    const unsigned bits = log2_exact(n);
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = 0;
        for (unsigned b = 0; b < bits; ++b)
            if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
        p[i] = r;
    }
    return p;
}

void check_sample_size(std::size_t n, std::size_t k) {
    if (k == 0) throw std::invalid_argument("multiplier: sample size must be positive");
    if (k > n) throw std::invalid_argument("multiplier: sample size exceeds dimension");
}

template <typename Scalar>
using SparseVec = std::map<std::size_t, Scalar>;

// r <- G^T r for one stage, on a sparse vector.
template <typename Scalar>
struct TransposeVisitor {
    SparseVec<Scalar>& r;
    std::size_t n;
    Flops* flops;

    void operator()(const DiagonalStage<Scalar>& st) {
        for (auto& [i, v] : r) v *= st.values[i];
        tally(flops, r.size());
    }
    void operator()(const ButterflyStage& st) {
        const std::size_t h = std::size_t{1} << st.level;
        SparseVec<Scalar> out;
        for (const auto& [i, v] : r) {
            const std::size_t lo = i & ~h;
            if (out.count(lo)) continue;
            const std::size_t hi = lo | h;
            const auto a = r.find(lo);
            const auto b = r.find(hi);
            const Scalar rl = a == r.end() ? Scalar{} : a->second;
            const Scalar rh = b == r.end() ? Scalar{} : b->second;
            const Scalar w = twiddle<Scalar>(st.rule, lo % h, h);
            out[lo] = rl + rh;
            out[hi] = w * (rl - rh);
            tally(flops, st.rule == Twiddle::hadamard ? 2 : 3);
        }
        r.swap(out);
    }
    void operator()(const PermutationStage& st) {
        SparseVec<Scalar> out;
        for (const auto& [i, v] : r) out[st.source[i]] = v;
        r.swap(out);
    }
    void operator()(const BidiagonalStage<Scalar>& st) {
        SparseVec<Scalar> out;
        for (const auto& [i, v] : r) {
            out[i] += st.diag[i] * v;
            if (i + 1 < n) out[i + 1] += st.super[i] * v;
            tally(flops, 4);
        }
        r.swap(out);
    }
    void operator()(const GivensStage& st) {
        const auto a = r.find(st.i);
        const auto b = r.find(st.j);
        if (a == r.end() && b == r.end()) return;
        const Scalar ri = a == r.end() ? Scalar{} : a->second;
        const Scalar rj = b == r.end() ? Scalar{} : b->second;
        const double c = std::cos(st.angle), s = std::sin(st.angle);
        r[st.i] = c * ri + s * rj;
        r[st.j] = -s * ri + c * rj;
        tally(flops, 6);
    }
    void operator()(const HouseholderStage<Scalar>& st) {
        Scalar dot{};
        for (const auto& [i, vi] : st.v) {
            const auto it = r.find(i);
            if (it != r.end()) dot += vi * it->second;
        }
        if (dot == Scalar{}) return;
        for (const auto& [i, vi] : st.v) r[i] -= Scalar(2) * conj_of(vi) * dot;
        tally(flops, 4 * st.v.size());
    }
};

// x <- G x for one stage, dense.
template <typename Scalar>
struct ForwardVisitor {
    std::vector<Scalar>& x;
    Flops* flops;

    void operator()(const DiagonalStage<Scalar>& st) {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] *= st.values[i];
        tally(flops, x.size());
    }
    void operator()(const ButterflyStage& st) {
        const std::size_t h = std::size_t{1} << st.level;
        for (std::size_t base = 0; base < x.size(); base += 2 * h)
            for (std::size_t j = 0; j < h; ++j) {
                const Scalar a = x[base + j];
                const Scalar b = twiddle<Scalar>(st.rule, j, h) * x[base + j + h];
                x[base + j] = a + b;
                x[base + j + h] = a - b;
            }
        tally(flops, st.rule == Twiddle::hadamard ? x.size() : x.size() + x.size() / 2);
    }
    void operator()(const PermutationStage& st) {
        std::vector<Scalar> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[st.source[i]];
        x.swap(y);
    }
    void operator()(const BidiagonalStage<Scalar>& st) {
        const std::size_t n = x.size();
        for (std::size_t i = 0; i + 1 < n; ++i) x[i] = st.diag[i] * x[i] + st.super[i] * x[i + 1];
        x[n - 1] = st.diag[n - 1] * x[n - 1];
        tally(flops, 3 * n - 2);
    }
    void operator()(const GivensStage& st) {
        const double c = std::cos(st.angle), s = std::sin(st.angle);
        const Scalar xi = x[st.i], xj = x[st.j];
        x[st.i] = c * xi - s * xj;
        x[st.j] = s * xi + c * xj;
        tally(flops, 6);
    }
    void operator()(const HouseholderStage<Scalar>& st) {
        Scalar dot{};
        for (const auto& [i, vi] : st.v) dot += conj_of(vi) * x[i];
        for (const auto& [i, vi] : st.v) x[i] -= Scalar(2) * vi * dot;
        tally(flops, 4 * st.v.size());
    }
};

template <typename Scalar>
std::uint64_t stage_cost(const Stage<Scalar>& st, std::size_t n) {
    return std::visit(
        [n](const auto& s) -> std::uint64_t {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, DiagonalStage<Scalar>>) return n;
            else if constexpr (std::is_same_v<S, ButterflyStage>)
                return s.rule == Twiddle::hadamard ? n : n + n / 2;
            else if constexpr (std::is_same_v<S, PermutationStage>) return 0;
            else if constexpr (std::is_same_v<S, BidiagonalStage<Scalar>>) return 3 * n - 2;
            else if constexpr (std::is_same_v<S, GivensStage>) return 6;
            else return 4 * s.v.size();
        },
        st);
}

template <typename Scalar>
std::string join_descriptor(const std::string& family, std::size_t n, const std::string& extra,
                            std::size_t k, std::uint64_t seed) {
    std::ostringstream os;
    os << family << "(n=" << n << extra << ",k=" << k << ",seed=" << seed << ")";
    return os.str();
}

std::size_t locate(const std::vector<std::size_t>& sorted, std::size_t v) {
    return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
}

template <typename Scalar>
std::vector<SparseRow<Scalar>> realize_rows(const SparseMultiplier<Scalar>& m, Flops* flops,
                                            std::vector<std::size_t>& support) {
    std::vector<SparseRow<Scalar>> rows(m.k());
    for (std::size_t s = 0; s < m.k(); ++s) {
        rows[s] = m.realized_row(s, flops);
        for (const auto& [t, v] : rows[s]) support.push_back(t);
    }
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
    return rows;
}

template <typename Scalar, typename Src>
Mat<Scalar> combine_rows(const std::vector<SparseRow<Scalar>>& rows,
                         const std::vector<std::size_t>& support, const Src& block,
                         std::size_t width, Flops* flops) {
    Mat<Scalar> out(rows.size(), width);
    std::uint64_t nnz = 0;
    for (std::size_t s = 0; s < rows.size(); ++s) {
        auto dst = out.row(s);
        for (const auto& [t, c] : rows[s]) {
            const std::size_t at = locate(support, t);
            for (std::size_t j = 0; j < width; ++j) dst[j] += c * block(at, j);
            ++nnz;
        }
    }
    tally(flops, 2 * nnz * width);
    return out;
}

}  // namespace

template <typename Scalar>
SparseMultiplier<Scalar>::SparseMultiplier(std::size_t n, std::vector<Stage<Scalar>> stages,
                                           std::vector<std::size_t> sample, double sample_scale,
                                           Side side, std::string descriptor)
    : n_(n),
      stages_(std::move(stages)),
      sample_(std::move(sample)),
      sample_scale_(sample_scale),
      side_(side),
      descriptor_(std::move(descriptor)) {
    if (n_ == 0) throw std::invalid_argument("SparseMultiplier: dimension must be positive");
    for (auto s : sample_)
        if (s >= n_) throw std::invalid_argument("SparseMultiplier: sample index out of range");
    for (const auto& st : stages_) {
        std::visit(
            [this](const auto& s) {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, DiagonalStage<Scalar>>) {
                    if (s.values.size() != n_) throw std::invalid_argument("diagonal stage: length mismatch");
                } else if constexpr (std::is_same_v<S, ButterflyStage>) {
                    if (!is_power_of_two(n_) || (std::size_t{1} << (s.level + 1)) > n_)
                        throw std::invalid_argument("butterfly stage: level incompatible with n");
                    if constexpr (!is_complex_v<Scalar>)
                        if (s.rule == Twiddle::fourier)
                            throw std::invalid_argument("butterfly stage: Fourier twiddles need a complex field");
                } else if constexpr (std::is_same_v<S, PermutationStage>) {
                    if (s.source.size() != n_) throw std::invalid_argument("permutation stage: length mismatch");
                } else if constexpr (std::is_same_v<S, BidiagonalStage<Scalar>>) {
                    if (s.diag.size() != n_ || s.super.size() + 1 < n_)
                        throw std::invalid_argument("bidiagonal stage: length mismatch");
                } else if constexpr (std::is_same_v<S, GivensStage>) {
                    if (s.i >= n_ || s.j >= n_ || s.i == s.j)
                        throw std::invalid_argument("givens stage: bad coordinate pair");
                } else {
                    for (const auto& [i, v] : s.v)
                        if (i >= n_) throw std::invalid_argument("householder stage: index out of range");
                }
            },
            st);
    }
}

template <typename Scalar>
unsigned SparseMultiplier<Scalar>::butterfly_levels() const noexcept {
    unsigned d = 0;
    for (const auto& st : stages_)
        if (std::holds_alternative<ButterflyStage>(st)) ++d;
    return d;
}

template <typename Scalar>
SparseMultiplier<Scalar> SparseMultiplier<Scalar>::with_side(Side s) const {
    SparseMultiplier copy = *this;
    copy.side_ = s;
    return copy;
}

template <typename Scalar>
std::vector<Scalar> SparseMultiplier<Scalar>::apply(std::span<const Scalar> x, Flops* flops) const {
    if (x.size() != n_) throw std::invalid_argument("SparseMultiplier::apply: length mismatch");
    std::vector<Scalar> v(x.begin(), x.end());
    ForwardVisitor<Scalar> vis{v, flops};
    for (const auto& st : stages_) std::visit(vis, st);
    std::vector<Scalar> out(sample_.size());
    for (std::size_t s = 0; s < sample_.size(); ++s) out[s] = sample_scale_ * v[sample_[s]];
    if (sample_scale_ != 1.0) tally(flops, sample_.size());
    return out;
}

template <typename Scalar>
SparseRow<Scalar> SparseMultiplier<Scalar>::realized_row(std::size_t s, Flops* flops) const {
    if (s >= sample_.size()) throw std::out_of_range("realized_row: row index out of range");
    SparseVec<Scalar> r;
    r[sample_[s]] = Scalar(sample_scale_);
    TransposeVisitor<Scalar> vis{r, n_, flops};
    for (auto it = stages_.rbegin(); it != stages_.rend(); ++it) std::visit(vis, *it);
    SparseRow<Scalar> out;
    out.reserve(r.size());
    for (const auto& [i, v] : r)
        if (v != Scalar{}) out.emplace_back(i, v);
    return out;
}

template <typename Scalar>
std::uint64_t SparseMultiplier<Scalar>::flops_per_vector() const {
    std::uint64_t f = 0;
    for (const auto& st : stages_) f += stage_cost<Scalar>(st, n_);
    if (sample_scale_ != 1.0) f += sample_.size();
    return f;
}

SparseMultiplier<double> gen_abridged_hadamard(std::size_t n, unsigned d, std::size_t k,
                                               std::uint64_t seed, Side side,
                                               const MultiplierFlags& flags) {
    if (!is_power_of_two(n)) throw std::invalid_argument("abridged Hadamard: n must be a power of 2");
    if (d > log2_exact(n)) throw std::invalid_argument("abridged Hadamard: d exceeds log2(n)");
    check_sample_size(n, k);
    Rng rng = make_rng(seed);
    const double scale = std::pow(2.0, -0.5 * d) * std::sqrt(static_cast<double>(n) / k);
    DiagonalStage<double> diag{std::vector<double>(n, scale)};
    if (!flags.identity_diagonal) {
        std::bernoulli_distribution coin(0.5);
        for (auto& v : diag.values)
            if (coin(rng)) v = -v;
    }
    std::vector<Stage<double>> stages{diag};
    for (unsigned l = 0; l < d; ++l) stages.push_back(ButterflyStage{l, Twiddle::hadamard});
    if (flags.permute) stages.push_back(PermutationStage{random_permutation(n, rng)});
    auto sample = sample_without_replacement(n, k, rng);
    return SparseMultiplier<double>(n, std::move(stages), std::move(sample), 1.0, side,
                                    join_descriptor<double>("hadamard", n, ",d=" + std::to_string(d), k, seed));
}

SparseMultiplier<cplx> gen_abridged_fourier(std::size_t n, unsigned d, std::size_t k,
                                            std::uint64_t seed, Side side,
                                            const MultiplierFlags& flags) {
    if (!is_power_of_two(n)) throw std::invalid_argument("abridged Fourier: n must be a power of 2");
    if (d > log2_exact(n)) throw std::invalid_argument("abridged Fourier: d exceeds log2(n)");
    check_sample_size(n, k);
    Rng rng = make_rng(seed);
    const double scale = std::pow(2.0, -0.5 * d) * std::sqrt(static_cast<double>(n) / k);
    DiagonalStage<cplx> diag{std::vector<cplx>(n, cplx(scale))};
    if (!flags.identity_diagonal) {
        std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
        for (auto& v : diag.values) v = std::polar(scale, angle(rng));
    }
    std::vector<Stage<cplx>> stages{diag};
    if (flags.bit_reverse) stages.push_back(PermutationStage{bit_reversal(n)});
    for (unsigned l = 0; l < d; ++l) stages.push_back(ButterflyStage{l, Twiddle::fourier});
    if (flags.permute) stages.push_back(PermutationStage{random_permutation(n, rng)});
    auto sample = sample_without_replacement(n, k, rng);
    return SparseMultiplier<cplx>(n, std::move(stages), std::move(sample), 1.0, side,
                                  join_descriptor<cplx>("fourier", n, ",d=" + std::to_string(d), k, seed));
}

SparseMultiplier<double> gen_bidiag_perm(std::size_t n, std::size_t factors, std::size_t k,
                                         std::uint64_t seed, Side side,
                                         const MultiplierFlags& flags) {
    if (factors == 0) throw std::invalid_argument("bidiagonal-permutation: factors must be positive");
    check_sample_size(n, k);
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal;
    std::vector<Stage<double>> stages;
    for (std::size_t f = 0; f < factors; ++f) {
        BidiagonalStage<double> b;
        b.diag.resize(n);
        b.super.resize(n > 0 ? n - 1 : 0);
        for (auto& v : b.diag) v = normal(rng);
        for (auto& v : b.super) v = normal(rng);
        stages.push_back(std::move(b));
        if (flags.identity_permutation) {
            std::vector<std::size_t> id(n);
            std::iota(id.begin(), id.end(), 0);
            stages.push_back(PermutationStage{std::move(id)});
        } else {
            stages.push_back(PermutationStage{random_permutation(n, rng)});
        }
    }
    auto sample = sample_without_replacement(n, k, rng);
    return SparseMultiplier<double>(n, std::move(stages), std::move(sample), 1.0, side,
                                    join_descriptor<double>("bidiag_perm", n, ",factors=" + std::to_string(factors), k, seed));
}

SparseMultiplier<double> gen_orthogonal_partial(std::size_t n, OrthoKind kind, std::size_t count,
                                                std::size_t k, std::uint64_t seed, Side side,
                                                const MultiplierFlags& flags) {
    check_sample_size(n, k);
    if (n < 2 && count > 0) throw std::invalid_argument("orthogonal partial product: n must be at least 2");
    Rng rng = make_rng(seed);
    std::vector<Stage<double>> stages;
    if (flags.diagonal_scaling) {
        std::bernoulli_distribution coin(0.5);
        DiagonalStage<double> d{std::vector<double>(n, 1.0)};
        for (auto& v : d.values)
            if (coin(rng)) v = -1.0;
        stages.push_back(std::move(d));
    }
    // Generate Q_1..Q_i, then store them so the product acts as Q_1 Q_2 ... Q_i.
    std::vector<Stage<double>> factors;
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> normal;
    for (std::size_t q = 0; q < count; ++q) {
        if (kind == OrthoKind::givens) {
            auto pair = sample_without_replacement(n, 2, rng);
            factors.push_back(GivensStage{pair[0], pair[1], angle(rng)});
        } else {
            const std::size_t support = std::min<std::size_t>(4, n);
            auto idx = sample_without_replacement(n, support, rng);
            HouseholderStage<double> h;
            double nrm = 0.0;
            for (auto i : idx) {
                const double v = normal(rng);
                h.v.emplace_back(i, v);
                nrm += v * v;
            }
            nrm = std::sqrt(nrm);
            for (auto& [i, v] : h.v) v /= nrm;
            factors.push_back(std::move(h));
        }
    }
    stages.insert(stages.end(), factors.rbegin(), factors.rend());
    if (flags.permute) stages.push_back(PermutationStage{random_permutation(n, rng)});
    std::vector<std::size_t> sample(k);
    std::iota(sample.begin(), sample.end(), 0);
    const std::string fam = kind == OrthoKind::givens ? "givens" : "householder";
    SparseMultiplier<double> m(n, std::move(stages), std::move(sample), 1.0, side,
                               join_descriptor<double>(fam, n, ",stages=" + std::to_string(count), k, seed));
    if (count == 0 && k == n && !flags.diagonal_scaling && !flags.permute)
        m.add_warning("identity multiplier");
    return m;
}

SparseMultiplier<double> gen_supported_orthogonal(std::size_t n, std::span<const std::size_t> support,
                                                  std::size_t rotations, std::uint64_t seed,
                                                  Side side) {
    const std::size_t k = support.size();
    check_sample_size(n, k);
    std::vector<bool> in(n, false);
    for (auto s : support) {
        if (s >= n) throw std::invalid_argument("supported orthogonal: index out of range");
        if (in[s]) throw std::invalid_argument("supported orthogonal: repeated index");
        in[s] = true;
    }
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::vector<Stage<double>> stages;
    if (k >= 2) {
        for (std::size_t r = 0; r < rotations; ++r) {
            auto pair = sample_without_replacement(k, 2, rng);
            stages.push_back(GivensStage{support[pair[0]], support[pair[1]], angle(rng)});
        }
    }
    std::vector<std::size_t> source(support.begin(), support.end());
    for (std::size_t i = 0; i < n; ++i)
        if (!in[i]) source.push_back(i);
    stages.push_back(PermutationStage{std::move(source)});
    std::vector<std::size_t> sample(k);
    std::iota(sample.begin(), sample.end(), 0);
    return SparseMultiplier<double>(n, std::move(stages), std::move(sample), 1.0, side,
                                    join_descriptor<double>("supported_givens", n, ",rotations=" + std::to_string(rotations), k, seed));
}

RMat gen_gaussian(std::size_t k, std::size_t n, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return gaussian_matrix(k, n, rng);
}

SparseMultiplier<cplx> to_complex(const SparseMultiplier<double>& m) {
    std::vector<Stage<cplx>> stages;
    for (const auto& st : m.stages()) {
        std::visit(
            [&](const auto& s) {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, DiagonalStage<double>>) {
                    stages.push_back(DiagonalStage<cplx>{{s.values.begin(), s.values.end()}});
                } else if constexpr (std::is_same_v<S, BidiagonalStage<double>>) {
                    stages.push_back(BidiagonalStage<cplx>{{s.diag.begin(), s.diag.end()},
                                                           {s.super.begin(), s.super.end()}});
                } else if constexpr (std::is_same_v<S, HouseholderStage<double>>) {
                    HouseholderStage<cplx> h;
                    for (const auto& [i, v] : s.v) h.v.emplace_back(i, cplx(v));
                    stages.push_back(std::move(h));
                } else {
                    stages.push_back(s);
                }
            },
            st);
    }
    SparseMultiplier<cplx> out(m.n(), std::move(stages), m.sample(), m.sample_scale(), m.side(),
                               m.descriptor());
    for (const auto& w : m.warnings()) out.add_warning(w);
    return out;
}

template <typename Scalar>
Mat<Scalar> densify(const SparseMultiplier<Scalar>& s) {
    Mat<Scalar> A(s.k(), s.n());
    std::vector<Scalar> e(s.n());
    for (std::size_t j = 0; j < s.n(); ++j) {
        std::fill(e.begin(), e.end(), Scalar{});
        e[j] = Scalar(1);
        const auto col = s.apply(e);
        for (std::size_t i = 0; i < s.k(); ++i) A(i, j) = col[i];
    }
    return s.side() == Side::left ? A : transpose(A);
}

template <typename Scalar>
Mat<Scalar> apply_left(const SparseMultiplier<Scalar>& F, MatrixOracle& o, Flops* flops) {
    if (F.side() != Side::left) throw std::invalid_argument("apply_left: multiplier is right-sided");
    if (F.n() != o.rows()) throw std::invalid_argument("apply_left: multiplier width differs from row count");
    std::vector<std::size_t> support;
    const auto rows = realize_rows(F, flops, support);
    std::vector<std::size_t> all(o.cols());
    std::iota(all.begin(), all.end(), 0);
    const RMat block = o.read_block(support, all);
    return combine_rows<Scalar>(rows, support, [&](std::size_t a, std::size_t j) { return block(a, j); },
                                o.cols(), flops);
}

template <typename Scalar>
Mat<Scalar> apply_left(const SparseMultiplier<Scalar>& F, const Mat<Scalar>& X, Flops* flops) {
    if (F.side() != Side::left) throw std::invalid_argument("apply_left: multiplier is right-sided");
    if (F.n() != X.rows()) throw std::invalid_argument("apply_left: multiplier width differs from row count");
    std::vector<std::size_t> support;
    const auto rows = realize_rows(F, flops, support);
    return combine_rows<Scalar>(rows, support,
                                [&](std::size_t a, std::size_t j) { return X(support[a], j); },
                                X.cols(), flops);
}

template <typename Scalar>
Mat<Scalar> apply_right(const SparseMultiplier<Scalar>& H, MatrixOracle& o, Flops* flops) {
    if (H.side() != Side::right) throw std::invalid_argument("apply_right: multiplier is left-sided");
    if (H.n() != o.cols()) throw std::invalid_argument("apply_right: multiplier height differs from column count");
    std::vector<std::size_t> support;
    const auto rows = realize_rows(H, flops, support);
    std::vector<std::size_t> all(o.rows());
    std::iota(all.begin(), all.end(), 0);
    const RMat block = o.read_block(all, support);
    // (M H)^T = A M^T with A the row form of H
    const auto t = combine_rows<Scalar>(rows, support,
                                        [&](std::size_t a, std::size_t i) { return block(i, a); },
                                        o.rows(), flops);
    return transpose(t);
}

template <typename Scalar>
Mat<Scalar> apply_right(const SparseMultiplier<Scalar>& H, const Mat<Scalar>& X, Flops* flops) {
    if (H.side() != Side::right) throw std::invalid_argument("apply_right: multiplier is left-sided");
    if (H.n() != X.cols()) throw std::invalid_argument("apply_right: multiplier height differs from column count");
    std::vector<std::size_t> support;
    const auto rows = realize_rows(H, flops, support);
    const auto t = combine_rows<Scalar>(rows, support,
                                        [&](std::size_t a, std::size_t i) { return X(i, support[a]); },
                                        X.rows(), flops);
    return transpose(t);
}

template <typename Scalar>
Mat<Scalar> apply_left(const Mat<Scalar>& F, MatrixOracle& o, Flops* flops) {
    if (F.cols() != o.rows()) throw std::invalid_argument("apply_left: multiplier width differs from row count");
    std::vector<std::size_t> support;
    for (std::size_t p = 0; p < F.cols(); ++p)
        for (std::size_t i = 0; i < F.rows(); ++i)
            if (F(i, p) != Scalar{}) {
                support.push_back(p);
                break;
            }
    std::vector<std::size_t> all(o.cols());
    std::iota(all.begin(), all.end(), 0);
    const Mat<Scalar> block = cast<Scalar>(o.read_block(support, all));
    std::vector<std::size_t> rows(F.rows());
    std::iota(rows.begin(), rows.end(), 0);
    return matmul(submatrix(F, rows, support), block, flops);
}

template <typename Scalar>
Mat<Scalar> apply_right(const Mat<Scalar>& H, MatrixOracle& o, Flops* flops) {
    if (H.rows() != o.cols()) throw std::invalid_argument("apply_right: multiplier height differs from column count");
    std::vector<std::size_t> support;
    for (std::size_t p = 0; p < H.rows(); ++p)
        for (std::size_t j = 0; j < H.cols(); ++j)
            if (H(p, j) != Scalar{}) {
                support.push_back(p);
                break;
            }
    std::vector<std::size_t> all(o.rows());
    std::iota(all.begin(), all.end(), 0);
    const Mat<Scalar> block = cast<Scalar>(o.read_block(all, support));
    std::vector<std::size_t> cols(H.cols());
    std::iota(cols.begin(), cols.end(), 0);
    return matmul(block, submatrix(H, support, cols), flops);
}

template <typename Scalar>
std::string describe(const Multiplier<Scalar>& m) {
    if (const auto* s = std::get_if<SparseMultiplier<Scalar>>(&m)) return s->descriptor();
    const auto& d = std::get<Mat<Scalar>>(m);
    return "dense(" + std::to_string(d.rows()) + "x" + std::to_string(d.cols()) + ")";
}

#define SUBLRA_INSTANTIATE(S)                                                                  \
    template class SparseMultiplier<S>;                                                        \
    template Mat<S> densify<S>(const SparseMultiplier<S>&);                                    \
    template Mat<S> apply_left<S>(const SparseMultiplier<S>&, MatrixOracle&, Flops*);          \
    template Mat<S> apply_right<S>(const SparseMultiplier<S>&, MatrixOracle&, Flops*);         \
    template Mat<S> apply_left<S>(const SparseMultiplier<S>&, const Mat<S>&, Flops*);          \
    template Mat<S> apply_right<S>(const SparseMultiplier<S>&, const Mat<S>&, Flops*);         \
    template Mat<S> apply_left<S>(const Mat<S>&, MatrixOracle&, Flops*);                       \
    template Mat<S> apply_right<S>(const Mat<S>&, MatrixOracle&, Flops*);                      \
    template std::string describe<S>(const Multiplier<S>&);

SUBLRA_INSTANTIATE(double)
SUBLRA_INSTANTIATE(cplx)

#undef SUBLRA_INSTANTIATE

}  // namespace sublra
