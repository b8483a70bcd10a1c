#include "sublra/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "sublra/cur.hpp"
#include "sublra/matrix_market.hpp"
#include "sublra/random.hpp"
#include "sublra/sketch.hpp"

namespace sublra {

namespace {

// ---------------------------------------------------------------- config I/O

void reject_unknown(const Json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

MultiplierFlags parse_flags(const Json& j) {
    reject_unknown(j, {"identity_diagonal", "identity_permutation", "permute", "bit_reverse", "diagonal_scaling"},
                   "flags");
    MultiplierFlags f;
    f.identity_diagonal = get_or(j, "identity_diagonal", false, "flags");
    f.identity_permutation = get_or(j, "identity_permutation", false, "flags");
    f.permute = get_or(j, "permute", false, "flags");
    f.bit_reverse = get_or(j, "bit_reverse", false, "flags");
    f.diagonal_scaling = get_or(j, "diagonal_scaling", false, "flags");
    return f;
}

Json flags_json(const MultiplierFlags& f) {
    return Json{{"identity_diagonal", f.identity_diagonal},
                {"identity_permutation", f.identity_permutation},
                {"permute", f.permute},
                {"bit_reverse", f.bit_reverse},
                {"diagonal_scaling", f.diagonal_scaling}};
}

const std::set<std::string> kFamilies{"gaussian", "identity", "hadamard", "fourier",
                                      "bidiag_perm", "givens", "householder"};

MultiplierConfig parse_multiplier(const Json& j, const std::string& where) {
    reject_unknown(j, {"family", "d", "factors", "stages", "flags"}, where);
    MultiplierConfig m;
    m.family = get_or<std::string>(j, "family", m.family, where);
    if (!kFamilies.count(m.family)) throw ConfigError(where + ": unknown multiplier family '" + m.family + "'");
    m.d = get_or(j, "d", m.d, where);
    m.factors = get_or(j, "factors", m.factors, where);
    m.stages = get_or(j, "stages", m.stages, where);
    if (j.contains("flags")) m.flags = parse_flags(j.at("flags"));
    return m;
}

Json multiplier_json(const MultiplierConfig& m) {
    return Json{{"family", m.family}, {"d", m.d}, {"factors", m.factors}, {"stages", m.stages},
                {"flags", flags_json(m.flags)}};
}

InputSpec parse_input_spec(const Json& j) {
    reject_unknown(j, {"family", "m", "n", "rho", "spectrum", "noise", "seed", "i", "j", "decay_kind", "rate"}, "input");
    InputSpec s;
    try {
        s.family = input_family_from_string(get_or<std::string>(j, "family", "dual_random", "input"));
        s.decay_kind = decay_kind_from_string(get_or<std::string>(j, "decay_kind", "exp", "input"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("input: ") + e.what());
    }
    s.m = get_or<std::size_t>(j, "m", 0, "input");
    s.n = get_or<std::size_t>(j, "n", 0, "input");
    if (s.m == 0 || s.n == 0) throw ConfigError("input: m and n must be positive");
    s.rho = get_or<std::size_t>(j, "rho", 1, "input");
    s.spectrum = get_or(j, "spectrum", std::vector<double>(s.rho, 1.0), "input");
    s.noise = get_or(j, "noise", 0.0, "input");
    s.seed = get_or<std::uint64_t>(j, "seed", 0, "input");
    s.i = get_or<std::size_t>(j, "i", 0, "input");
    s.j = get_or<std::size_t>(j, "j", 0, "input");
    s.rate = get_or(j, "rate", 1.0, "input");
    return s;
}

double sanitize(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN(); }

Json opt_json(const std::optional<double>& v) {
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
}

std::optional<double> opt_from(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

Json trace_json(const std::vector<RefineStep>& trace) {
    Json arr = Json::array();
    for (const auto& s : trace)
        arr.push_back(Json{{"iteration", s.iteration},
                           {"error_estimate", sanitize(s.error_estimate)},
                           {"gap", sanitize(s.gap)},
                           {"step", s.step},
                           {"reads", s.reads},
                           {"flags", s.flags}});
    return arr;
}

std::vector<RefineStep> trace_from(const Json& arr) {
    std::vector<RefineStep> out;
    for (const auto& j : arr) {
        RefineStep s;
        s.iteration = j.at("iteration").get<std::size_t>();
        s.error_estimate = j.at("error_estimate").is_null() ? NAN : j.at("error_estimate").get<double>();
        s.gap = j.at("gap").is_null() ? NAN : j.at("gap").get<double>();
        s.step = j.at("step").get<double>();
        s.reads = j.at("reads").get<std::size_t>();
        s.flags = j.at("flags").get<std::vector<std::string>>();
        out.push_back(std::move(s));
    }
    return out;
}

std::string fmt_double(double v) {
    if (!std::isfinite(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------- pipeline

std::size_t left_size(const PipelineConfig& p, std::size_t m) { return p.k ? p.k : std::min(default_left_size(p.rho), m); }
std::size_t right_size(const PipelineConfig& p, std::size_t n) { return p.l ? p.l : std::min(default_right_size(p.rho), n); }

template <typename Scalar>
SparseMultiplier<Scalar> promote(SparseMultiplier<double> s) {
    if constexpr (std::is_same_v<Scalar, double>) return s;
    else return to_complex(s);
}

template <typename Scalar>
Multiplier<Scalar> build_multiplier(const MultiplierConfig& c, std::size_t dim, std::size_t count, std::uint64_t seed,
                                    Side side) {
    try {
        if (c.family == "gaussian") {
            RMat G = gen_gaussian(count, dim, seed);
            if (side == Side::right) G = transpose(G);
            return cast<Scalar>(G);
        }
        if (c.family == "identity") {
            if (count != dim) throw ConfigError("identity multiplier needs a sample size equal to the dimension");
            return cast<Scalar>(RMat::identity(dim));
        }
        if (c.family == "fourier") {
            if constexpr (std::is_same_v<Scalar, cplx>) return gen_abridged_fourier(dim, c.d, count, seed, side, c.flags);
            else throw ConfigError("fourier multipliers need the complex path");
        }
        if (c.family == "hadamard") return promote<Scalar>(gen_abridged_hadamard(dim, c.d, count, seed, side, c.flags));
        if (c.family == "bidiag_perm")
            return promote<Scalar>(gen_bidiag_perm(dim, c.factors, count, seed, side, c.flags));
        if (c.family == "givens")
            return promote<Scalar>(gen_orthogonal_partial(dim, OrthoKind::givens, c.stages, count, seed, side, c.flags));
        if (c.family == "householder")
            return promote<Scalar>(
                gen_orthogonal_partial(dim, OrthoKind::householder, c.stages, count, seed, side, c.flags));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("multiplier: ") + e.what());
    }
    throw ConfigError("unknown multiplier family '" + c.family + "'");
}

template <typename Scalar>
std::pair<Multiplier<Scalar>, Multiplier<Scalar>> build_pair(const PipelineConfig& p, std::size_t m, std::size_t n,
                                                              std::uint64_t seed) {
    return {build_multiplier<Scalar>(p.left, m, left_size(p, m), split_seed(seed, 1), Side::left),
            build_multiplier<Scalar>(p.right, n, right_size(p, n), split_seed(seed, 2), Side::right)};
}

RMat real_part(const CMat& A) {
    RMat out(A.rows(), A.cols());
    for (std::size_t t = 0; t < A.size(); ++t) out.data()[t] = A.data()[t].real();
    return out;
}

template <typename Scalar>
struct SketchStage {
    TopSVD<Scalar> svd;
    Mat<Scalar> approx;
    std::uint64_t flops = 0;
    std::vector<std::string> warnings;
};

template <typename Scalar>
SketchStage<Scalar> nystrom_stage(MatrixOracle& o, const Multiplier<Scalar>& F, const Multiplier<Scalar>& H,
                                  std::size_t rho, bool recompress_out) {
    SketchStage<Scalar> st;
    const auto sk = sketch(o, F, H);
    st.flops += sk.flops;
    const auto ny = nystrom_reconstruct(sk, rho);
    st.flops += ny.flops;
    auto rc = recompress(ny.lra, rho);
    st.flops += rc.flops;
    st.warnings = std::move(rc.warnings);
    st.svd = std::move(rc.svd);
    Flops f;
    st.approx = recompress_out ? rc.lra2.dense() : ny.lra.dense(&f);
    st.flops += f.count();
    return st;
}

void validate_pipeline(const PipelineConfig& p, std::size_t m, std::size_t n) {
    if (p.rho == 0) throw ConfigError("pipeline: rho must be positive");
    const std::size_t k = left_size(p, m), l = right_size(p, n);
    if (k < p.rho || l < p.rho) throw ConfigError("pipeline: k and l must be at least rho");
    if (k > m || l > n) throw ConfigError("pipeline: k must not exceed m and l must not exceed n");
    static const std::set<std::string> recon{"nystrom", "cur", "subset"};
    if (!recon.count(p.reconstruction)) throw ConfigError("pipeline: unknown reconstruction '" + p.reconstruction + "'");
    static const std::set<std::string> recipes{"none", "i", "ii", "iii"};
    if (!recipes.count(p.refine.recipe)) throw ConfigError("pipeline: unknown refinement recipe '" + p.refine.recipe + "'");
    const bool complex_path = p.left.family == "fourier" || p.right.family == "fourier";
    if (complex_path && p.refine.recipe != "none") throw ConfigError("pipeline: refinement needs real multipliers");
    if (complex_path && p.reconstruction != "nystrom") throw ConfigError("pipeline: fourier multipliers need nystrom");
    if (p.refine.steps < 1 || p.refine.max_steps < 1) throw ConfigError("pipeline: refinement steps must be positive");
    if (!(p.subset_fraction > 0.0 && p.subset_fraction <= 1.0))
        throw ConfigError("pipeline: subset_fraction must lie in (0, 1]");
}

void refine_stage(MatrixOracle& o, const PipelineConfig& p, std::uint64_t seed, PipelineOutput& out) {
    const Recipe recipe = recipe_from_string(p.refine.recipe);
    const std::size_t m = o.rows(), n = o.cols();
    TopSVD<double> cur = *out.svd;
    if (p.refine.homotopy) {
        HomotopyOptions h;
        h.recipe = recipe;
        h.max_steps = p.refine.max_steps;
        h.seed = split_seed(seed, 3);
        h.k = left_size(p, m);
        h.l = right_size(p, n);
        auto res = homotopy_refine(o, cur, p.rho, h);
        out.trace = std::move(res.history);
        if (!res.completed) out.warnings.push_back("homotopy stopped before reaching the input");
        cur = std::move(res.current);
        if (recipe == Recipe::deterministic) out.superfast = false;
    } else {
        switch (recipe) {
            case Recipe::deterministic: {
                DeterministicOptions d;
                d.sparse_substitution = p.refine.sparse_substitution;
                for (int s = 0; s < p.refine.steps; ++s) {
                    d.seed = split_seed(seed, 10 + std::uint64_t(s));
                    auto r = refine_deterministic(o, cur, p.rho, d);
                    out.superfast = out.superfast && r.superfast;
                    cur = std::move(r.svd);
                }
                break;
            }
            case Recipe::leverage:
                for (int s = 0; s < p.refine.steps; ++s) {
                    const auto c = refine_leverage(o, cur, p.rho, left_size(p, m), right_size(p, n),
                                                   split_seed(seed, 10 + std::uint64_t(s)));
                    cur = lra_to_topsvd(c.C, c.nucleus, c.R, p.rho).svd;
                }
                break;
            case Recipe::residual: {
                auto [F, H] = build_pair<double>(p, m, n, seed);
                auto st = make_refine_state(o, cur, std::move(F), std::move(H), p.rho, split_seed(seed, 3));
                for (int s = 0; s < p.refine.steps && !st.stagnated; ++s) st = refine_residual(o, std::move(st));
                out.trace = st.history;
                cur = std::move(st.current);
                break;
            }
        }
    }
    out.approx = cur.reconstruct();
    out.svd = std::move(cur);
}

}  // namespace

// ---------------------------------------------------------------- public config

Json to_json(const InputSpec& s) {
    return Json{{"family", to_string(s.family)}, {"m", s.m}, {"n", s.n}, {"rho", s.rho},
                {"spectrum", s.spectrum}, {"noise", s.noise}, {"seed", s.seed}, {"i", s.i},
                {"j", s.j}, {"decay_kind", to_string(s.decay_kind)}, {"rate", s.rate}};
}

PipelineConfig parse_pipeline(const Json& j) {
    reject_unknown(j, {"rho", "k", "l", "left", "right", "reconstruction", "recompress", "subset_fraction", "refine"},
                   "pipeline");
    PipelineConfig p;
    p.rho = get_or<std::size_t>(j, "rho", 1, "pipeline");
    p.k = get_or<std::size_t>(j, "k", 0, "pipeline");
    p.l = get_or<std::size_t>(j, "l", 0, "pipeline");
    if (j.contains("left")) p.left = parse_multiplier(j.at("left"), "pipeline.left");
    if (j.contains("right")) p.right = parse_multiplier(j.at("right"), "pipeline.right");
    p.reconstruction = get_or<std::string>(j, "reconstruction", p.reconstruction, "pipeline");
    p.recompress = get_or(j, "recompress", true, "pipeline");
    p.subset_fraction = get_or(j, "subset_fraction", p.subset_fraction, "pipeline");
    if (j.contains("refine")) {
        const auto& r = j.at("refine");
        reject_unknown(r, {"recipe", "steps", "homotopy", "max_steps", "sparse_substitution"}, "pipeline.refine");
        p.refine.recipe = get_or<std::string>(r, "recipe", "none", "pipeline.refine");
        p.refine.steps = get_or(r, "steps", 1, "pipeline.refine");
        p.refine.homotopy = get_or(r, "homotopy", false, "pipeline.refine");
        p.refine.max_steps = get_or(r, "max_steps", kDefaultHomotopySteps, "pipeline.refine");
        p.refine.sparse_substitution = get_or(r, "sparse_substitution", false, "pipeline.refine");
    }
    if (p.rho == 0) throw ConfigError("pipeline: rho must be positive");
    return p;
}

Json to_json(const PipelineConfig& p) {
    return Json{{"rho", p.rho},
                {"k", p.k},
                {"l", p.l},
                {"left", multiplier_json(p.left)},
                {"right", multiplier_json(p.right)},
                {"reconstruction", p.reconstruction},
                {"recompress", p.recompress},
                {"subset_fraction", p.subset_fraction},
                {"refine", Json{{"recipe", p.refine.recipe},
                                {"steps", p.refine.steps},
                                {"homotopy", p.refine.homotopy},
                                {"max_steps", p.refine.max_steps},
                                {"sparse_substitution", p.refine.sparse_substitution}}}};
}

ExperimentConfig parse_config(const Json& j) {
    reject_unknown(j, {"schema_version", "input", "pipeline", "trials", "master_seed", "budget", "audit"}, "config");
    const int version = get_or(j, "schema_version", kSchemaVersion, "config");
    if (version != kSchemaVersion) throw ConfigError("config: unsupported schema_version " + std::to_string(version));
    ExperimentConfig c;
    if (!j.contains("input")) throw ConfigError("config: missing input");
    const auto& in = j.at("input");
    if (in.is_object() && in.contains("path")) {
        reject_unknown(in, {"path"}, "input");
        c.input.path = get_or<std::string>(in, "path", "", "input");
    } else {
        c.input.spec = parse_input_spec(in);
    }
    if (j.contains("pipeline")) c.pipeline = parse_pipeline(j.at("pipeline"));
    c.trials = get_or<std::size_t>(j, "trials", 1, "config");
    c.master_seed = get_or<std::uint64_t>(j, "master_seed", 0, "config");
    c.budget = get_or(j, "budget", 1.0, "config");
    c.audit = get_or(j, "audit", true, "config");
    if (c.trials == 0) throw ConfigError("config: trials must be positive");
    if (!(c.budget > 0.0 && c.budget <= 1.0)) throw ConfigError("config: budget must lie in (0, 1]");
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

Json to_json(const ExperimentConfig& c) {
    Json j{{"schema_version", kSchemaVersion}};
    if (c.input.path) j["input"] = Json{{"path", *c.input.path}};
    else if (c.input.spec) j["input"] = to_json(*c.input.spec);
    j["pipeline"] = to_json(c.pipeline);
    j["trials"] = c.trials;
    j["master_seed"] = c.master_seed;
    j["budget"] = c.budget;
    j["audit"] = c.audit;
    return j;
}

// ---------------------------------------------------------------- pipeline

PipelineOutput run_pipeline(MatrixOracle& o, const PipelineConfig& p, std::uint64_t seed) {
    const std::size_t m = o.rows(), n = o.cols();
    validate_pipeline(p, m, n);
    const std::size_t k = left_size(p, m), l = right_size(p, n);
    PipelineOutput out;
    try {
        if (p.reconstruction == "subset") {
            out.superfast = false;
            const std::size_t total = m * n;
            const auto count = std::min(total, static_cast<std::size_t>(std::ceil(p.subset_fraction * double(total))));
            Rng rng = make_rng(split_seed(seed, 4));
            const auto flat = sample_without_replacement(total, count, rng);
            std::vector<std::pair<std::size_t, std::size_t>> pos(count);
            for (std::size_t t = 0; t < count; ++t) pos[t] = {flat[t] / n, flat[t] % n};
            const auto vals = o.read_entries(pos);
            RMat S(m, n);
            for (std::size_t t = 0; t < count; ++t) S(pos[t].first, pos[t].second) = vals[t];
            if (max_abs(S) == 0.0) throw SketchLostInput();
            Flops f;
            auto s = truncate_svd(svd(S, &f), std::min(p.rho, std::min(m, n)));
            out.approx = s.reconstruct(&f);
            out.svd = std::move(s);
            out.flops = f.count();
        } else if (p.reconstruction == "cur") {
            Rng rr = make_rng(split_seed(seed, 1)), rc = make_rng(split_seed(seed, 2));
            const auto rows = sample_without_replacement(m, k, rr);
            const auto cols = sample_without_replacement(n, l, rc);
            const auto c = canonical_cur(o, rows, cols, p.rho);
            auto res = lra_to_topsvd(c.C, c.nucleus, c.R, p.rho);
            out.flops = res.flops;
            out.warnings = std::move(res.warnings);
            out.approx = p.recompress ? res.svd.reconstruct() : c.dense();
            out.svd = std::move(res.svd);
        } else if (p.left.family == "fourier" || p.right.family == "fourier") {
            auto [F, H] = build_pair<cplx>(p, m, n, seed);
            auto st = nystrom_stage(o, F, H, p.rho, p.recompress);
            out.flops = st.flops;
            out.warnings = std::move(st.warnings);
            out.approx = real_part(st.approx);
        } else {
            auto [F, H] = build_pair<double>(p, m, n, seed);
            auto st = nystrom_stage(o, F, H, p.rho, p.recompress);
            out.flops = st.flops;
            out.warnings = std::move(st.warnings);
            out.approx = std::move(st.approx);
            out.svd = std::move(st.svd);
            const auto dense_family = [](const MultiplierConfig& c) {
                return c.family == "gaussian" || c.family == "identity";
            };
            if (dense_family(p.left) || dense_family(p.right)) out.superfast = false;
        }
    } catch (const SketchLostInput&) {
        out.status = "sketch_lost";
    } catch (const std::domain_error& e) {
        out.status = std::string(e.what()).find("rank-deficient") != std::string::npos ? "rank_deficient"
                                                                                         : "sketch_lost";
    }
    if (out.status != "ok") {
        out.approx = RMat(m, n);
        out.svd.reset();
        return out;
    }
    if (p.refine.recipe != "none" && out.svd) {
        try {
            refine_stage(o, p, seed, out);
        } catch (const SketchLostInput& e) {
            out.warnings.push_back(std::string("refinement skipped: ") + e.what());
        } catch (const std::domain_error& e) {
            out.warnings.push_back(std::string("refinement skipped: ") + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------- experiments

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Quantiles summarize(const std::vector<double>& v) {
    std::vector<double> finite;
    for (double x : v)
        if (std::isfinite(x)) finite.push_back(x);
    Quantiles q;
    q.count = finite.size();
    q.median = quantile(finite, 0.5);
    q.p95 = quantile(finite, 0.95);
    return q;
}

namespace {

struct FixedInput {
    RMat M;
    std::optional<double> tail;
};

TrialRecord run_trial_impl(const ExperimentConfig& c, std::size_t trial, const FixedInput* fixed) {
    TrialRecord rec;
    rec.trial = trial;
    rec.seed = split_seed(c.master_seed, trial);
    RMat M;
    if (fixed) {
        M = fixed->M;
    } else {
        if (!c.input.spec) throw ConfigError("config: input needs a spec or a path");
        InputSpec spec = *c.input.spec;
        rec.input_seed = split_seed(rec.seed, 0);
        spec.seed = rec.input_seed;
        try {
            M = generate(spec).M;
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("input: ") + e.what());
        } catch (const std::out_of_range& e) {
            throw ConfigError(std::string("input: ") + e.what());
        }
    }
    MatrixOracle o(std::move(M));
    const std::size_t m = o.rows(), n = o.cols();

    const auto t0 = std::chrono::steady_clock::now();
    PipelineOutput out;
    try {
        out = run_pipeline(o, c.pipeline, rec.seed);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        out.status = std::string("error: ") + e.what();
        out.approx = RMat(m, n);
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    rec.status = out.status;
    rec.flops = out.flops;
    rec.warnings = std::move(out.warnings);
    rec.trace = std::move(out.trace);
    rec.reads = o.reads();
    rec.read_fraction = static_cast<double>(rec.reads) / static_cast<double>(m * n);
    rec.budget_ok = rec.read_fraction <= c.budget;
    if (!rec.budget_ok && rec.status == "ok") rec.status = "budget_exceeded";

    const RMat& truth = o.audit();
    const RMat diff = truth - out.approx;
    rec.fro_error = frobenius_norm(diff);
    if (c.audit) {
        rec.spectral_error = norms(diff).spectral;
        if (fixed && fixed->tail) rec.tail = fixed->tail;
        else rec.tail = tail_norm(singular_values(truth), c.pipeline.rho);
        if (*rec.tail > 0.0) rec.error_ratio = rec.fro_error / *rec.tail;
        else if (rec.fro_error == 0.0) rec.error_ratio = 1.0;
    }
    return rec;
}

}  // namespace

TrialRecord run_trial(const ExperimentConfig& c, std::size_t trial) {
    if (c.input.path) {
        FixedInput fixed{load_matrix(*c.input.path), std::nullopt};
        return run_trial_impl(c, trial, &fixed);
    }
    return run_trial_impl(c, trial, nullptr);
}

ExperimentRecord run(const ExperimentConfig& c, unsigned jobs) {
    if (c.trials == 0) throw ConfigError("config: trials must be positive");
    std::optional<FixedInput> fixed;
    ExperimentRecord rec;
    rec.config = c;
    if (c.input.path) {
        try {
            fixed = FixedInput{load_matrix(*c.input.path), std::nullopt};
        } catch (const std::exception& e) {
            throw ConfigError(std::string("input: ") + e.what());
        }
        if (c.audit) fixed->tail = tail_norm(singular_values(fixed->M), c.pipeline.rho);
        rec.m = fixed->M.rows();
        rec.n = fixed->M.cols();
    } else if (c.input.spec) {
        rec.m = c.input.spec->m;
        rec.n = c.input.spec->n;
    } else {
        throw ConfigError("config: input needs a spec or a path");
    }
    validate_pipeline(c.pipeline, rec.m, rec.n);

    rec.trials.resize(c.trials);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    const auto worker = [&] {
        for (std::size_t t = next++; t < c.trials; t = next++) {
            try {
                rec.trials[t] = run_trial_impl(c, t, fixed ? &*fixed : nullptr);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(c.trials)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<double> ratios, fros, fracs;
    for (const auto& t : rec.trials) {
        if (t.error_ratio) ratios.push_back(*t.error_ratio);
        fros.push_back(t.fro_error);
        fracs.push_back(t.read_fraction);
        rec.budget_violation = rec.budget_violation || !t.budget_ok;
    }
    rec.error_ratio = summarize(ratios);
    rec.fro_error = summarize(fros);
    rec.read_fraction = summarize(fracs);
    return rec;
}

// ---------------------------------------------------------------- emission

namespace {

Json quantiles_json(const Quantiles& q) {
    return Json{{"count", q.count}, {"median", sanitize(q.median)}, {"p95", sanitize(q.p95)}};
}

Quantiles quantiles_from(const Json& j) {
    Quantiles q;
    q.count = j.at("count").get<std::size_t>();
    q.median = j.at("median").is_null() ? NAN : j.at("median").get<double>();
    q.p95 = j.at("p95").is_null() ? NAN : j.at("p95").get<double>();
    return q;
}

}  // namespace

Json to_json(const ExperimentRecord& r) {
    Json trials = Json::array();
    for (const auto& t : r.trials)
        trials.push_back(Json{{"trial", t.trial},
                              {"seed", t.seed},
                              {"input_seed", t.input_seed},
                              {"status", t.status},
                              {"fro_error", sanitize(t.fro_error)},
                              {"spectral_error", opt_json(t.spectral_error)},
                              {"tail", opt_json(t.tail)},
                              {"error_ratio", opt_json(t.error_ratio)},
                              {"reads", t.reads},
                              {"read_fraction", t.read_fraction},
                              {"flops", t.flops},
                              {"wall_time", t.wall_time},
                              {"budget_ok", t.budget_ok},
                              {"warnings", t.warnings},
                              {"refine_trace", trace_json(t.trace)}});
    return Json{{"schema_version", kSchemaVersion},
                {"config", to_json(r.config)},
                {"m", r.m},
                {"n", r.n},
                {"trials", std::move(trials)},
                {"aggregates", Json{{"error_ratio", quantiles_json(r.error_ratio)},
                                    {"fro_error", quantiles_json(r.fro_error)},
                                    {"read_fraction", quantiles_json(r.read_fraction)}}},
                {"budget_violation", r.budget_violation}};
}

ExperimentRecord record_from_json(const Json& j) {
    ExperimentRecord r;
    r.config = parse_config(j.at("config"));
    r.m = j.at("m").get<std::size_t>();
    r.n = j.at("n").get<std::size_t>();
    for (const auto& t : j.at("trials")) {
        TrialRecord rec;
        rec.trial = t.at("trial").get<std::size_t>();
        rec.seed = t.at("seed").get<std::uint64_t>();
        rec.input_seed = t.at("input_seed").get<std::uint64_t>();
        rec.status = t.at("status").get<std::string>();
        rec.fro_error = t.at("fro_error").is_null() ? NAN : t.at("fro_error").get<double>();
        rec.spectral_error = opt_from(t, "spectral_error");
        rec.tail = opt_from(t, "tail");
        rec.error_ratio = opt_from(t, "error_ratio");
        rec.reads = t.at("reads").get<std::size_t>();
        rec.read_fraction = t.at("read_fraction").get<double>();
        rec.flops = t.at("flops").get<std::uint64_t>();
        rec.wall_time = t.at("wall_time").get<double>();
        rec.budget_ok = t.at("budget_ok").get<bool>();
        rec.warnings = t.at("warnings").get<std::vector<std::string>>();
        rec.trace = trace_from(t.at("refine_trace"));
        r.trials.push_back(std::move(rec));
    }
    const auto& a = j.at("aggregates");
    r.error_ratio = quantiles_from(a.at("error_ratio"));
    r.fro_error = quantiles_from(a.at("fro_error"));
    r.read_fraction = quantiles_from(a.at("read_fraction"));
    r.budget_violation = j.at("budget_violation").get<bool>();
    return r;
}

void write_csv(std::ostream& out, const ExperimentRecord& r) {
    out << "trial,seed,input_seed,status,fro_error,spectral_error,tail,error_ratio,reads,read_fraction,flops,"
           "wall_time,budget_ok\n";
    const auto opt = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
    for (const auto& t : r.trials) {
        std::string status = t.status;
        std::replace(status.begin(), status.end(), ',', ';');
        out << t.trial << ',' << t.seed << ',' << t.input_seed << ',' << status << ',' << fmt_double(t.fro_error)
            << ',' << opt(t.spectral_error) << ',' << opt(t.tail) << ',' << opt(t.error_ratio) << ',' << t.reads
            << ',' << fmt_double(t.read_fraction) << ',' << t.flops << ',' << fmt_double(t.wall_time) << ','
            << (t.budget_ok ? "true" : "false") << '\n';
    }
}

OutputFormat output_format_from_string(const std::string& s) {
    if (s == "json") return OutputFormat::json;
    if (s == "csv") return OutputFormat::csv;
    throw ConfigError("unknown output format '" + s + "'");
}

void emit(const ExperimentRecord& r, OutputFormat f, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    if (f == OutputFormat::json) out << to_json(r).dump(2) << '\n';
    else write_csv(out, r);
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------- adversarial sweep

SweepResult adversarial_sweep(std::size_t m, std::size_t n, const PipelineConfig& p, std::uint64_t seed,
                              double budget, bool shifted) {
    if (m == 0 || n == 0 || m * n > kMaxSweepEntries)
        throw std::invalid_argument("adversarial_sweep: grid must be nonempty and at most 64 x 64 entries");
    validate_pipeline(p, m, n);
    SweepResult res;
    res.m = m;
    res.n = n;
    res.shifted = shifted;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            MatrixOracle o(shifted ? shifted_delta(m, n, i, j) : delta_matrix(m, n, i, j));
            PipelineOutput out;
            try {
                out = run_pipeline(o, p, seed);
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                out.status = std::string("error: ") + e.what();
                out.approx = RMat(m, n);
            }
            SweepEntry e;
            e.i = i;
            e.j = j;
            e.status = out.status;
            e.read = o.was_read(i, j);
            e.read_fraction = static_cast<double>(o.reads()) / static_cast<double>(m * n);
            e.max_error = all_finite(out.approx) ? max_abs(o.audit() - out.approx)
                                                 : std::numeric_limits<double>::infinity();
            e.failed = e.max_error >= 0.5 - 1e-12;
            failures += e.failed;
            if (!e.read) {
                ++res.unread;
                res.unread_failures += e.failed;
            }
            res.max_read_fraction = std::max(res.max_read_fraction, e.read_fraction);
            res.per_matrix.push_back(std::move(e));
        }
    }
    const double total = static_cast<double>(m * n);
    res.fail_fraction = static_cast<double>(failures) / total;
    res.bound = static_cast<double>(res.unread) / total;
    res.budget_ok = res.max_read_fraction <= budget;
    return res;
}

Json to_json(const SweepResult& s) {
    Json per = Json::array();
    for (const auto& e : s.per_matrix)
        per.push_back(Json{{"i", e.i},
                           {"j", e.j},
                           {"read", e.read},
                           {"failed", e.failed},
                           {"max_error", sanitize(e.max_error)},
                           {"read_fraction", e.read_fraction},
                           {"status", e.status}});
    return Json{{"schema_version", kSchemaVersion},
                {"m", s.m},
                {"n", s.n},
                {"shifted", s.shifted},
                {"fail_fraction", s.fail_fraction},
                {"bound", s.bound},
                {"unread", s.unread},
                {"unread_failures", s.unread_failures},
                {"max_read_fraction", s.max_read_fraction},
                {"budget_ok", s.budget_ok},
                {"per_matrix", std::move(per)}};
}

// ---------------------------------------------------------------- report

void report(const std::vector<std::filesystem::path>& csvs, std::ostream& out) {
    out << "file,trials,ok,median_error_ratio,p95_error_ratio,median_fro_error,median_read_fraction\n";
    for (const auto& path : csvs) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
        std::string line;
        if (!std::getline(in, line)) throw std::runtime_error("'" + path.string() + "' is empty");
        const auto split = [](const std::string& s) {
            std::vector<std::string> cells;
            std::stringstream ss(s);
            std::string cell;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            if (!s.empty() && s.back() == ',') cells.emplace_back();
            return cells;
        };
        const auto header = split(line);
        std::map<std::string, std::size_t> col;
        for (std::size_t t = 0; t < header.size(); ++t) col[header[t]] = t;
        for (const char* need : {"status", "error_ratio", "fro_error", "read_fraction"})
            if (!col.count(need)) throw std::runtime_error("'" + path.string() + "' lacks column " + need);

        std::vector<double> ratio, fro, frac;
        std::size_t rows = 0, ok = 0;
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            const auto cells = split(line);
            if (cells.size() != header.size())
                throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": wrong number of fields");
            ++rows;
            ok += cells[col["status"]] == "ok";
            const auto num = [&](const std::string& name, std::vector<double>& dst) {
                const auto& cell = cells[col[name]];
                if (!cell.empty()) dst.push_back(std::stod(cell));
            };
            num("error_ratio", ratio);
            num("fro_error", fro);
            num("read_fraction", frac);
        }
        const auto r = summarize(ratio);
        out << path.filename().string() << ',' << rows << ',' << ok << ',' << fmt_double(r.median) << ','
            << fmt_double(r.p95) << ',' << fmt_double(summarize(fro).median) << ','
            << fmt_double(summarize(frac).median) << '\n';
    }
}

}  // namespace sublra
