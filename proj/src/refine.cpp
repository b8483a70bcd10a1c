#include "sublra/refine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "sublra/random.hpp"

namespace sublra {

namespace {

RMat left_times(const Multiplier<double>& F, const RMat& X) {
    return std::visit(
        [&](const auto& f) -> RMat {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, RMat>) return matmul(f, X);
            else return apply_left(f, X);
        },
        F);
}

RMat right_times(const RMat& X, const Multiplier<double>& H) {
    return std::visit(
        [&](const auto& h) -> RMat {
            using T = std::decay_t<decltype(h)>;
            if constexpr (std::is_same_v<T, RMat>) return matmul(X, h);
            else return apply_right(h, X);
        },
        H);
}

std::vector<std::size_t> iota_vec(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

double approx_entry(const TopSVD<double>& s, std::size_t i, std::size_t j) {
    double v = 0.0;
    for (std::size_t t = 0; t < s.rank(); ++t) v += s.U(i, t) * s.sigma[t] * s.V(j, t);
    return v;
}

// `count` indices: maxvol rows of Ur first, then the highest leverage rows.
std::vector<std::size_t> pick_support(const RMat& Ur, std::size_t count) {
    std::vector<std::size_t> out = maxvol(Ur).rows;
    std::vector<bool> taken(Ur.rows(), false);
    for (auto i : out) taken[i] = true;
    const auto p = leverage_scores(Ur);
    auto order = iota_vec(Ur.rows());
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
    for (auto i : order) {
        if (out.size() >= count) break;
        if (!taken[i]) {
            taken[i] = true;
            out.push_back(i);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> draw_with_replacement(std::span<const double> p, std::size_t count, Rng& rng) {
    std::discrete_distribution<std::size_t> dist(p.begin(), p.end());
    std::vector<std::size_t> out(count);
    for (auto& v : out) v = dist(rng);
    return out;
}

std::vector<double> mixed_scores(std::vector<double> p) {
    if (std::any_of(p.begin(), p.end(), [](double v) { return v == 0.0; })) {
        const double u = 1.0 / static_cast<double>(p.size());
        for (auto& v : p) v = 0.9 * v + 0.1 * u;
    }
    return p;
}

// Multipliers used by the residual recipe when none are supplied.
std::pair<Multiplier<double>, Multiplier<double>> default_multipliers(std::size_t m, std::size_t n,
                                                                      std::size_t k, std::size_t l,
                                                                      std::uint64_t seed) {
    const auto pow2 = [](std::size_t x) { return x >= 8 && (x & (x - 1)) == 0; };
    if (pow2(m) && pow2(n) && k <= m && l <= n)
        return {gen_abridged_hadamard(m, 3, k, split_seed(seed, 1)),
                gen_abridged_hadamard(n, 3, l, split_seed(seed, 2), Side::right)};
    return {gen_gaussian(k, m, split_seed(seed, 1)), transpose(gen_gaussian(l, n, split_seed(seed, 2)))};
}

TopSVD<double> topsvd_of(const CURDecomp& c, std::size_t rho) {
    return lra_to_topsvd(c.C, c.nucleus, c.R, rho).svd;
}

}  // namespace

std::string to_string(Recipe r) {
    switch (r) {
        case Recipe::deterministic: return "i";
        case Recipe::leverage: return "ii";
        case Recipe::residual: return "iii";
    }
    return "?";
}

Recipe recipe_from_string(const std::string& s) {
    if (s == "i") return Recipe::deterministic;
    if (s == "ii") return Recipe::leverage;
    if (s == "iii") return Recipe::residual;
    throw std::invalid_argument("unknown refinement recipe '" + s + "'");
}

double estimate_residual_fro(MatrixOracle& o, const TopSVD<double>& s, std::size_t samples,
                             std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("estimate_residual_fro: samples must be at least 1");
    const std::size_t m = o.rows(), n = o.cols(), total = m * n;
    samples = std::min(samples, total);
    Rng rng = make_rng(seed);
    const auto flat = sample_without_replacement(total, samples, rng);
    std::vector<std::pair<std::size_t, std::size_t>> pos(samples);
    for (std::size_t t = 0; t < samples; ++t) pos[t] = {flat[t] / n, flat[t] % n};
    const auto vals = o.read_entries(pos);
    double sum = 0.0;
    for (std::size_t t = 0; t < samples; ++t) {
        const double r = vals[t] - approx_entry(s, pos[t].first, pos[t].second);
        sum += r * r;
    }
    return std::sqrt(static_cast<double>(total) / static_cast<double>(samples) * sum);
}

RefineState make_refine_state(MatrixOracle& o, const TopSVD<double>& current, Multiplier<double> F,
                              Multiplier<double> H, std::size_t rho, std::uint64_t estimator_seed) {
    if (rho == 0 || current.rank() < rho)
        throw std::invalid_argument("make_refine_state: current must have rank at least rho");
    RefineState st;
    st.current = current.rank() == rho ? current : truncate_svd(current, rho);
    st.F = std::move(F);
    st.H = std::move(H);
    st.rho = rho;
    st.estimator_seed = estimator_seed;
    st.sketches = sketch(o, st.F, st.H);
    RefineStep first;
    first.error_estimate = estimate_residual_fro(o, st.current, st.estimator_samples, estimator_seed);
    first.reads = o.reads();
    st.history.push_back(std::move(first));
    return st;
}

RefineState refine_residual(MatrixOracle& o, RefineState state) {
    const std::size_t rho = state.rho;
    if (state.current.rank() < rho) throw std::invalid_argument("refine_residual: current rank below rho");
    if (state.current.rank() > rho) state.current = truncate_svd(state.current, rho);
    const auto& cur = state.current;
    const auto& sk = state.sketches;

    const RMat FU = left_times(state.F, cur.U);                // k x rho
    const RMat VtH = right_times(transpose(cur.V), state.H);   // rho x l
    const std::span<const double> sig(cur.sigma);
    const RMat SVt = transpose(scale_cols(cur.V, sig));
    const RMat US = scale_cols(cur.U, sig);
    const RMat FUS = scale_cols(FU, sig);
    const RMat Wd = sub_matmul_compensated(sk.W, FU, SVt);
    const RMat Yd = sub_matmul_compensated(sk.Y, US, VtH);
    const RMat Zd = sub_matmul_compensated(sk.Z, FUS, VtH);

    RefineStep step;
    step.iteration = state.history.empty() ? 1 : state.history.back().iteration + 1;
    step.step = 1.0;

    const double zref = frobenius_norm(sk.Z);
    if (frobenius_norm(Zd) <= 1e-13 * zref) {
        step.flags.push_back("residual below working precision");
    } else {
        const std::size_t r2 = std::min({2 * rho, Zd.rows(), Zd.cols()});
        const auto zinv = pinv_trunc(Zd, r2);
        const std::size_t lz = zinv.pinv.rows(), kz = zinv.pinv.cols();
        RMat core(lz + rho, kz + rho);
        for (std::size_t a = 0; a < lz; ++a)
            for (std::size_t b = 0; b < kz; ++b) core(a, b) = zinv.pinv(a, b);
        for (std::size_t t = 0; t < rho; ++t) core(lz + t, kz + t) = cur.sigma[t];
        const RMat A = hstack(Yd, cur.U);
        const RMat B = vstack(Wd, transpose(cur.V));
        const std::size_t want = std::min({rho + 1, core.rows(), core.cols()});
        auto res = lra_to_topsvd(A, core, B, want);
        for (auto& w : res.warnings) step.flags.push_back(std::move(w));
        if (res.svd.rank() < rho) throw std::domain_error("refine_residual: updated approximant lost rank");
        if (res.svd.rank() > rho) step.gap = res.svd.sigma[rho - 1] - res.svd.sigma[rho];
        state.current = truncate_svd(res.svd, rho);
    }

    step.error_estimate = estimate_residual_fro(o, state.current, state.estimator_samples, state.estimator_seed);
    step.reads = o.reads();
    state.history.push_back(std::move(step));

    const std::size_t h = state.history.size();
    if (h >= 4 && state.history[h - 1].error_estimate >= 0.99 * state.history[h - 4].error_estimate) {
        state.stagnated = true;
        state.history.back().flags.push_back("stagnation");
    }
    return state;
}

DeterministicResult refine_deterministic(MatrixOracle& o, const TopSVD<double>& s, std::size_t rho,
                                         const DeterministicOptions& opts) {
    if (rho == 0 || s.rank() < rho) throw std::invalid_argument("refine_deterministic: s must have rank at least rho");
    const std::size_t before = o.reads();
    DeterministicResult out;
    Multiplier<double> F = RMat{}, H = RMat{};
    if (opts.sparse_substitution) {
        const RMat Ur = leading(s.U, s.U.rows(), rho);
        const RMat Vr = leading(s.V, s.V.rows(), rho);
        const std::size_t kr = std::min(2 * rho, o.rows()), kc = std::min(2 * rho, o.cols());
        const auto rows = pick_support(Ur, kr);
        const auto cols = pick_support(Vr, kc);
        F = gen_supported_orthogonal(o.rows(), rows, 4 * rows.size(), split_seed(opts.seed, 1));
        H = gen_supported_orthogonal(o.cols(), cols, 4 * cols.size(), split_seed(opts.seed, 2), Side::right);
        out.superfast = true;
    } else {
        F = transpose(s.U);
        H = s.V;
    }
    const auto sk = sketch(o, F, H);
    const auto ny = nystrom_reconstruct(sk, std::min({rho, sk.Z.rows(), sk.Z.cols()}));
    out.svd = recompress(ny.lra, rho).svd;
    out.reads = o.reads() - before;
    return out;
}

std::vector<double> leverage_scores(const RMat& U) {
    if (U.cols() == 0 || U.cols() > U.rows())
        throw std::invalid_argument("leverage_scores: U must be tall with at least one column");
    if (orthonormality_defect(U) > 1e-8) throw std::invalid_argument("leverage_scores: U is not orthonormal");
    std::vector<double> p(U.rows(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < U.rows(); ++i) {
        for (std::size_t t = 0; t < U.cols(); ++t) p[i] += U(i, t) * U(i, t);
        total += p[i];
    }
    for (auto& v : p) v /= total;
    return p;
}

CURDecomp refine_leverage(MatrixOracle& o, const TopSVD<double>& s, std::size_t rho, std::size_t k,
                          std::size_t l, std::uint64_t seed) {
    if (rho == 0 || s.rank() < rho) throw std::invalid_argument("refine_leverage: s must have rank at least rho");
    if (k < rho || l < rho) throw std::invalid_argument("refine_leverage: need k >= rho and l >= rho");
    const auto pr = mixed_scores(leverage_scores(leading(s.U, s.U.rows(), rho)));
    const auto pc = mixed_scores(leverage_scores(leading(s.V, s.V.rows(), rho)));
    Rng rng = make_rng(seed);
    const auto rows = draw_with_replacement(pr, k, rng);
    const auto cols = draw_with_replacement(pc, l, rng);
    std::vector<double> rw(k), cw(l);
    for (std::size_t a = 0; a < k; ++a) rw[a] = 1.0 / std::sqrt(double(k) * pr[rows[a]]);
    for (std::size_t b = 0; b < l; ++b) cw[b] = 1.0 / std::sqrt(double(l) * pc[cols[b]]);
    return canonical_cur(o, rows, cols, rho, rw, cw);
}

double safe_step(double error, double gap) {
    if (!(gap > 0.0)) return kMinStep;
    if (!(error > 0.0)) return 1.0;
    return std::clamp(kGapSafety * gap / error, kMinStep, 1.0);
}

HomotopyResult homotopy_refine(MatrixOracle& o, const TopSVD<double>& start, std::size_t rho,
                               const HomotopyOptions& opts) {
    if (rho == 0 || start.rank() < rho) throw std::invalid_argument("homotopy_refine: start must have rank at least rho");
    if (opts.max_steps < 1) throw std::invalid_argument("homotopy_refine: max_steps must be positive");
    const std::size_t m = o.rows(), n = o.cols();
    const TopSVD<double> origin = truncate_svd(start, rho);
    const std::uint64_t est_seed = split_seed(opts.seed, 3);

    const std::size_t k = opts.k ? opts.k : std::min(default_left_size(rho), m);
    const std::size_t l = opts.l ? opts.l : std::min(default_right_size(rho), n);
    auto [F, H] = default_multipliers(m, n, k, l, opts.seed);

    // sigma_{rho+1} proxy from a rank-(rho+1) recompression of the sketch of M.
    double next_sigma = 0.0;
    if (rho + 1 <= std::min(k, l)) {
        const auto sk = sketch(o, F, H);
        try {
            const auto ny = nystrom_reconstruct(sk, rho + 1);
            const auto rc = lra_to_topsvd(ny.lra.U, ny.lra.T, ny.lra.V, rho + 1);
            if (rc.svd.rank() > rho) next_sigma = rc.svd.sigma[rho];
        } catch (const SketchLostInput&) {
        }
    }

    HomotopyResult out;
    out.current = origin;
    const double e0 = estimate_residual_fro(o, origin, opts.estimator_samples, est_seed);
    double remaining = 1.0;  // 1 - t_i
    for (int i = 0; i < opts.max_steps; ++i) {
        RefineStep step;
        step.iteration = static_cast<std::size_t>(i);
        step.error_estimate = remaining * e0;
        step.gap = out.current.sigma[rho - 1] - next_sigma;
        if (!(step.gap > 0.0)) step.flags.push_back("no gap");
        step.step = safe_step(step.error_estimate, step.gap);
        const bool last = step.step >= 1.0;
        const double rem_next = last ? 0.0 : remaining * (1.0 - step.step);

        MatrixOracle path(m, n, [&o, &origin, rem_next](std::size_t r, std::size_t c) {
            const std::pair<std::size_t, std::size_t> pos{r, c};
            const double target = o.read_entries(std::span(&pos, 1))[0];
            if (rem_next == 0.0) return target;
            return rem_next * approx_entry(origin, r, c) + (1.0 - rem_next) * target;
        });
        switch (opts.recipe) {
            case Recipe::deterministic:
                out.current = refine_deterministic(path, out.current, rho).svd;
                break;
            case Recipe::leverage:
                out.current = topsvd_of(refine_leverage(path, out.current, rho, k, l,
                                                        split_seed(opts.seed, 100 + std::uint64_t(i))),
                                        rho);
                break;
            case Recipe::residual: {
                auto st = make_refine_state(path, out.current, F, H, rho, est_seed);
                st = refine_residual(path, std::move(st));
                out.current = std::move(st.current);
                break;
            }
        }
        step.reads = o.reads();
        out.history.push_back(std::move(step));
        remaining = rem_next;
        if (last) {
            out.completed = true;
            break;
        }
    }
    return out;
}

}  // namespace sublra
